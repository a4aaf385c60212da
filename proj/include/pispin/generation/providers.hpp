#pragma once

// Service interfaces for the LLM, speech synthesis, semantic similarity and
// perplexity scorers, plus the shared retry policy.

#include <pispin/audio.hpp>
#include <pispin/error.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <thread>

namespace pispin {

/// How the n candidates are requested: one completion listing all of them,
/// or one single-paraphrase completion per candidate.
enum class CandidateMode { single_completion, per_candidate };

struct GenerationConfig {
  int n_candidates = 6;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_retries = 3;
  std::string model_name = "gpt-3.5-turbo";
  CandidateMode candidate_mode = CandidateMode::single_completion;

  void validate() const {
    if (n_candidates < 1) throw data_error("n_candidates must be >= 1", "config");
    if (max_retries < 0) throw data_error("max_retries must be >= 0", "config");
    if (!(temperature >= 0.0) || !(top_p > 0.0 && top_p <= 1.0)) {
      throw data_error("temperature must be >= 0 and top_p in (0, 1]", "config");
    }
  }
};

struct ScorerEndpoints {
  std::string llm_url;
  std::string tts_url;
  std::string sts_url;
  std::string ppl_url;
  std::string api_key_env_name = "OPENAI_API_KEY";
  std::string tts_voice;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Assistant text of one chat completion.
  virtual std::string generate(const std::string& prompt, const GenerationConfig& config) = 0;
};

class TtsClient {
 public:
  virtual ~TtsClient() = default;
  virtual AudioSignal synthesize(const std::string& text) = 0;
  /// Stable identity used to key cached audio.
  virtual std::string cache_key() const = 0;
};

class StsClient {
 public:
  virtual ~StsClient() = default;
  /// F1-style similarity in [0, 1].
  virtual double score(const std::string& candidate, const std::string& reference) = 0;
};

class PplClient {
 public:
  virtual ~PplClient() = default;
  virtual double score(const std::string& text) = 0;
};

/// Exponential backoff: attempt k (0-based) waits initial_delay * 2^k.
struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{500};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

/// Thrown by transports for failures worth retrying (connection errors,
/// 429 and 5xx replies).
class TransientError : public Error {
 public:
  TransientError(std::string stage, const std::string& message) : Error(ErrorKind::remote, std::move(stage), message) {}
};

/// Runs `fn`, retrying on TransientError per `policy`. Other errors
/// propagate immediately. The final failure is rethrown as a remote error.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, std::string_view stage, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransientError& e) {
      if (attempt >= policy.max_retries) {
        throw remote_error("giving up after " + std::to_string(attempt + 1) + " attempt(s): " + e.message(),
                           std::string(stage));
      }
      if (policy.sleep) policy.sleep(policy.initial_delay * (1LL << attempt));
    }
  }
}

}  // namespace pispin
