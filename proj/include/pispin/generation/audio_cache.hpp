#pragma once

#include <pispin/audio.hpp>
#include <pispin/error.hpp>
#include <pispin/generation/providers.hpp>
#include <pispin/hash.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>

namespace pispin {

/// Content-addressed WAV cache in front of a TtsClient. Entries are keyed by
/// hash(text, provider key) and written via temp-file + rename, so
/// concurrent writers of the same key are harmless.
///
/// Every call returns the 16-bit round-tripped audio, whether it was just
/// synthesized or read back, so first runs and reruns see identical samples.
class CachedTts final : public TtsClient {
 public:
  CachedTts(TtsClient& inner, std::filesystem::path dir) : inner_(&inner), dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw io_error("cannot create cache directory " + dir_.string() + ": " + ec.message(), "tts-cache");
  }

  std::filesystem::path path_for(const std::string& text) const {
    return dir_ / (to_hex(hash_fields(text, inner_->cache_key())) + ".wav");
  }

  AudioSignal synthesize(const std::string& text) override {
    const auto path = path_for(text);
    if (std::filesystem::exists(path)) {
      try {
        return read_wav(path);
      } catch (const Error&) {
        // Unreadable entry: fall through and regenerate it.
      }
    }
    const EncodedWav encoded = encode_wav16(inner_->synthesize(text));
    const auto tmp = path.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                     "_" + std::to_string(counter_.fetch_add(1));
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(encoded.bytes.data()), static_cast<std::streamsize>(encoded.bytes.size()));
      if (!out) throw io_error("cannot write " + tmp, "tts-cache");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw io_error("cannot move cache entry into place: " + path.string(), "tts-cache");
    }
    ++misses_;
    return decode_wav(encoded.bytes);
  }

  std::string cache_key() const override { return inner_->cache_key(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 private:
  TtsClient* inner_;
  std::filesystem::path dir_;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace pispin
