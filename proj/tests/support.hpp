#pragma once

#include <pispin/audio.hpp>
#include <pispin/hash.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(PISPIN_TEST_DATA) / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pispin_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline pispin::AudioSignal sine(double freq_hz, double amplitude, std::size_t n, int rate) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate);
  return {std::move(s), rate};
}

inline pispin::AudioSignal white_noise(std::size_t n, int rate, std::uint64_t seed, double amplitude = 0.3) {
  pispin::SplitMix rng(seed);
  std::vector<double> s(n);
  for (auto& v : s) v = amplitude * (2.0 * rng.uniform() - 1.0);
  return {std::move(s), rate};
}

/// Minimal RIFF writer for fixtures in encodings the library does not emit.
inline std::vector<std::uint8_t> raw_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                         std::uint16_t bits, const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out;
  auto le16 = [&](std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
  };
  auto le32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
  };
  auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  tag("RIFF");
  le32(36 + static_cast<std::uint32_t>(data.size()));
  tag("WAVE");
  tag("fmt ");
  le32(16);
  le16(format);
  le16(channels);
  le32(rate);
  le32(rate * channels * bits / 8);
  le16(static_cast<std::uint16_t>(channels * bits / 8));
  le16(bits);
  tag("data");
  le32(static_cast<std::uint32_t>(data.size()));
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

inline std::vector<std::uint8_t> int16_bytes(const std::vector<std::int16_t>& v) {
  std::vector<std::uint8_t> out;
  for (auto s : v) {
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(u & 0xff);
    out.push_back(u >> 8);
  }
  return out;
}

inline std::vector<std::uint8_t> float_bytes(const std::vector<float>& v) {
  std::vector<std::uint8_t> out(v.size() * 4);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

}  // namespace testing
