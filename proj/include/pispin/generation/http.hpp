#pragma once

// HTTP implementations of the service interfaces: an OpenAI-compatible chat
// completions client and JSON clients for the /tts, /sts and /ppl scorers.

#include <pispin/audio.hpp>
#include <pispin/error.hpp>
#include <pispin/generation/providers.hpp>
#include <pispin/generation/url.hpp>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <regex>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace pispin {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Base64 (OpenSSL EVP block coder)
// ---------------------------------------------------------------------------

inline std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw remote_error("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw remote_error("invalid base64 payload");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock counts padding bytes as output.
  if (clean.ends_with("==")) len -= 2;
  else if (clean.ends_with("=")) len -= 1;
  out.resize(len);
  return out;
}

// ---------------------------------------------------------------------------
// URLs and transport
// ---------------------------------------------------------------------------

struct TransportOptions {
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{120};
  int max_in_flight = 4;
  RetryPolicy retry{};
};

/// POSTs JSON to one endpoint. Bounds concurrent requests with a semaphore,
/// classifies failures (connection, 429 and 5xx are retried) and retries.
class JsonEndpoint {
 public:
  JsonEndpoint(Url url, std::string stage, TransportOptions options = {})
      : url_(std::move(url)),
        stage_(std::move(stage)),
        options_(std::move(options)),
        slots_(std::make_shared<std::counting_semaphore<1024>>(std::clamp(options_.max_in_flight, 1, 1024))) {}

  json post(const json& body, const httplib::Headers& headers = {}) const {
    return with_retry(options_.retry, stage_, [&] { return post_once(body, headers); });
  }

  const Url& url() const noexcept { return url_; }

 private:
  json post_once(const json& body, const httplib::Headers& headers) const {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<1024>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};

    httplib::Client client(url_.origin());
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    const std::string path = url_.path.empty() ? "/" : url_.path;
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransientError(stage_, "request to " + url_.origin() + path + " failed: " + httplib::to_string(res.error()));
    const int status = res->status;
    if (status == 401 || status == 403) throw remote_error("authentication failed (HTTP " + std::to_string(status) + ")", stage_);
    if (status == 429 || status >= 500) throw TransientError(stage_, "HTTP " + std::to_string(status));
    if (status < 200 || status >= 300) {
      throw remote_error("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200), stage_);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception&) {
      throw remote_error("malformed JSON response", stage_);
    }
  }

  Url url_;
  std::string stage_;
  TransportOptions options_;
  std::shared_ptr<std::counting_semaphore<1024>> slots_;
};

namespace detail {

template <typename T>
T json_field(const json& body, const char* name, const std::string& stage) {
  if (!body.is_object() || !body.contains(name)) throw remote_error(std::string("response lacks '") + name + "'", stage);
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw remote_error(std::string("response field '") + name + "' has the wrong type", stage);
  }
}

inline Url with_default_path(Url url, std::string_view path) {
  if (url.path.empty() || url.path == "/") url.path = std::string(path);
  return url;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

/// OpenAI-compatible chat completions. `base_url` is either the API root
/// (".../v1") or the full ".../chat/completions" URL.
class HttpLlm final : public LlmClient {
 public:
  HttpLlm(const std::string& base_url, const std::string& api_key_env_name, TransportOptions options = {})
      : endpoint_(completions_url(base_url), "llm", std::move(options)) {
    const char* key = api_key_env_name.empty() ? nullptr : std::getenv(api_key_env_name.c_str());
    if (!key || !*key) throw data_error("API key variable '" + api_key_env_name + "' is not set", "config");
    api_key_ = key;
  }

  std::string generate(const std::string& prompt, const GenerationConfig& config) override {
    const json body = {{"model", config.model_name},
                       {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                       {"temperature", config.temperature},
                       {"top_p", config.top_p}};
    const json reply = endpoint_.post(body, {{"Authorization", "Bearer " + api_key_}});
    std::string text;
    try {
      text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw remote_error("response has no choices[0].message.content", "llm");
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw remote_error("empty completion", "llm");
    return text;
  }

 private:
  static Url completions_url(const std::string& base) {
    Url u = parse_url(base);
    if (!u.path.ends_with("/chat/completions")) {
      while (u.path.ends_with("/")) u.path.pop_back();
      u.path += "/chat/completions";
    }
    return u;
  }

  JsonEndpoint endpoint_;
  std::string api_key_;
};

/// POST {text[, voice]} -> {audio_wav_b64, sample_rate_hz}.
class HttpTts final : public TtsClient {
 public:
  explicit HttpTts(const std::string& url, std::string voice = {}, TransportOptions options = {})
      : endpoint_(detail::with_default_path(parse_url(url), "/tts"), "tts", std::move(options)), voice_(std::move(voice)) {}

  AudioSignal synthesize(const std::string& text) override {
    if (text.empty()) throw remote_error("empty text", "tts");
    json body = {{"text", text}};
    if (!voice_.empty()) body["voice"] = voice_;
    const json reply = endpoint_.post(body);
    const auto b64 = detail::json_field<std::string>(reply, "audio_wav_b64", "tts");
    const auto rate = detail::json_field<int>(reply, "sample_rate_hz", "tts");
    AudioSignal audio = [&] {
      try {
        return decode_wav(base64_decode(b64));
      } catch (const Error& e) {
        throw remote_error("undecodable audio: " + e.message(), "tts");
      }
    }();
    if (audio.empty()) throw remote_error("service returned empty audio", "tts");
    if (rate != audio.sample_rate_hz()) {
      throw remote_error("reported rate " + std::to_string(rate) + " Hz differs from WAV header " +
                             std::to_string(audio.sample_rate_hz()) + " Hz",
                         "tts");
    }
    return audio;
  }

  std::string cache_key() const override { return endpoint_.url().origin() + endpoint_.url().path + "|" + voice_; }

 private:
  JsonEndpoint endpoint_;
  std::string voice_;
};

/// POST {candidate, reference} -> {f1}, f1 in [0, 1].
class HttpSts final : public StsClient {
 public:
  explicit HttpSts(const std::string& url, TransportOptions options = {})
      : endpoint_(detail::with_default_path(parse_url(url), "/sts"), "sts", std::move(options)) {}

  double score(const std::string& candidate, const std::string& reference) override {
    if (candidate.empty() || reference.empty()) throw remote_error("empty text", "sts");
    const double f1 = detail::json_field<double>(endpoint_.post({{"candidate", candidate}, {"reference", reference}}),
                                                 "f1", "sts");
    if (!std::isfinite(f1) || f1 < 0.0 || f1 > 1.0) throw remote_error("f1 out of range: " + std::to_string(f1), "sts");
    return f1;
  }

 private:
  JsonEndpoint endpoint_;
};

/// POST {text} -> {ppl}, ppl > 0.
class HttpPpl final : public PplClient {
 public:
  explicit HttpPpl(const std::string& url, TransportOptions options = {})
      : endpoint_(detail::with_default_path(parse_url(url), "/ppl"), "ppl", std::move(options)) {}

  double score(const std::string& text) override {
    if (text.empty()) throw remote_error("empty text", "ppl");
    const double ppl = detail::json_field<double>(endpoint_.post({{"text", text}}), "ppl", "ppl");
    if (!std::isfinite(ppl) || ppl <= 0.0) throw remote_error("perplexity must be positive, got " + std::to_string(ppl), "ppl");
    return ppl;
  }

 private:
  JsonEndpoint endpoint_;
};

}  // namespace pispin
