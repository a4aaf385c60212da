#pragma once

// key = value configuration with ${ENV} interpolation, typed resolution into
// run settings, and the manifest written next to every run.

#include <pispin/error.hpp>
#include <pispin/eval.hpp>
#include <pispin/generation/prompts.hpp>
#include <pispin/generation/providers.hpp>
#include <pispin/generation/url.hpp>
#include <pispin/pipeline.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

namespace pispin {

/// Every recognised key and its default.
inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"provider", "mock"},
      {"mock_llm", "paraphrase"},
      {"seed", "0"},
      {"jobs", "0"},
      {"out", "run"},
      {"dataset", ""},
      {"n_candidates", "6"},
      {"target_snr_db", "-5"},
      {"noise_label", "babble"},
      {"noise_wav", ""},
      {"template", "pas_n"},
      {"allow_input_fallback", "false"},
      {"candidate_mode", "single_completion"},
      {"temperature", "1.0"},
      {"top_p", "1.0"},
      {"max_retries", "3"},
      {"model", "gpt-3.5-turbo"},
      {"llm_url", ""},
      {"tts_url", ""},
      {"sts_url", ""},
      {"ppl_url", ""},
      {"api_key_env", "OPENAI_API_KEY"},
      {"tts_voice", ""},
      {"max_in_flight", "4"},
      {"cache_dir", ""},
      {"min_words", "10"},
      {"max_words", "12"},
      {"head_lines", "1000"},
      {"listeners", "6"},
  };
  return defaults;
}

/// Raw key/value settings. Values may reference environment variables as
/// ${NAME}; the raw form is kept for the manifest so secrets never land on
/// disk.
class Settings {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  static std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  }

  explicit Settings(EnvLookup env = process_env) : env_(std::move(env)) {}

  static Settings parse(std::string_view text, EnvLookup env = process_env) {
    Settings s(std::move(env));
    std::istringstream in{std::string(text)};
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      const auto body = trimmed(line);
      if (body.empty() || body.front() == '#') continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw data_error("line " + std::to_string(no) + ": expected key = value", "config");
      s.set(trimmed(body.substr(0, eq)), unquote(trimmed(body.substr(eq + 1))));
    }
    return s;
  }

  static Settings load(const std::filesystem::path& path, EnvLookup env = process_env) {
    return parse(csv::read_text(path), std::move(env));
  }

  void set(const std::string& key, const std::string& raw) {
    if (!config_defaults().contains(key)) throw data_error("unknown key '" + key + "'", "config");
    raw_[key] = raw;
  }

  /// Value with ${NAME} references expanded; defaults apply to unset keys.
  std::string get(const std::string& key) const {
    auto it = raw_.find(key);
    if (it != raw_.end()) return interpolate(it->second);
    auto d = config_defaults().find(key);
    if (d == config_defaults().end()) throw data_error("unknown key '" + key + "'", "config");
    return d->second;
  }

  bool is_set(const std::string& key) const { return raw_.contains(key); }

  long long get_int(const std::string& key) const {
    const std::string v = get(key);
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw data_error(key + ": '" + v + "' is not an integer", "config");
    return out;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const std::string v = get(key);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw data_error(key + ": '" + v + "' is not a non-negative integer", "config");
    }
    return out;
  }

  double get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw data_error(key + ": '" + v + "' is not a number", "config");
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw data_error(key + ": '" + v + "' is not a boolean", "config");
  }

  /// Every key in sorted order with its effective value. Values that were
  /// written with ${...} references appear unexpanded.
  std::string manifest() const {
    std::string out;
    for (const auto& [key, def] : config_defaults()) {
      auto it = raw_.find(key);
      out += key + " = " + (it == raw_.end() ? def : it->second) + "\n";
    }
    return out;
  }

 private:
  static std::string trimmed(std::string_view s) { return std::string(detail::strip_ws(s)); }

  static std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
  }

  std::string interpolate(const std::string& raw) const {
    std::string out;
    std::size_t pos = 0;
    while (pos < raw.size()) {
      const auto open = raw.find("${", pos);
      if (open == std::string::npos) {
        out += raw.substr(pos);
        break;
      }
      const auto close = raw.find('}', open);
      if (close == std::string::npos) throw data_error("unterminated ${ in '" + raw + "'", "config");
      out += raw.substr(pos, open - pos);
      const std::string name = raw.substr(open + 2, close - open - 2);
      const auto value = env_ ? env_(name) : std::nullopt;
      if (!value) throw data_error("environment variable '" + name + "' is not set", "config");
      out += *value;
      pos = close + 1;
    }
    return out;
  }

  EnvLookup env_;
  std::map<std::string, std::string> raw_;
};

enum class ProviderKind { mock, http };

/// Fully resolved run settings.
struct RunConfig {
  ProviderKind provider = ProviderKind::mock;
  std::string mock_llm = "paraphrase";
  PipelineConfig pipeline{};
  ScorerEndpoints endpoints{};
  DatasetOptions dataset{};
  std::string dataset_path;
  std::filesystem::path out_dir = "run";
  std::filesystem::path cache_dir;
  std::string noise_wav;
  int jobs = 1;
  int max_in_flight = 4;
  std::size_t listeners = 6;

  std::string condition_id() const {
    return std::string(to_string(pipeline.template_id)) + "_" + std::to_string(pipeline.n_candidates);
  }
};

inline RunConfig resolve(const Settings& s) {
  RunConfig c;
  const std::string provider = s.get("provider");
  if (provider == "mock") c.provider = ProviderKind::mock;
  else if (provider == "http") c.provider = ProviderKind::http;
  else throw data_error("provider must be 'mock' or 'http', got '" + provider + "'", "config");
  c.mock_llm = s.get("mock_llm");
  if (c.mock_llm != "paraphrase" && c.mock_llm != "echo") {
    throw data_error("mock_llm must be 'paraphrase' or 'echo'", "config");
  }

  PipelineConfig& p = c.pipeline;
  p.n_candidates = static_cast<int>(s.get_int("n_candidates"));
  p.target_snr_db = s.get_double("target_snr_db");
  p.noise_label = s.get("noise_label");
  p.template_id = parse_prompt_id(s.get("template"));
  p.allow_input_fallback = s.get_bool("allow_input_fallback");
  p.seed = s.get_u64("seed");
  GenerationConfig& g = p.generation;
  g.n_candidates = p.n_candidates;
  g.temperature = s.get_double("temperature");
  g.top_p = s.get_double("top_p");
  g.max_retries = static_cast<int>(s.get_int("max_retries"));
  g.model_name = s.get("model");
  const std::string mode = s.get("candidate_mode");
  if (mode == "single_completion") g.candidate_mode = CandidateMode::single_completion;
  else if (mode == "per_candidate") g.candidate_mode = CandidateMode::per_candidate;
  else throw data_error("candidate_mode must be 'single_completion' or 'per_candidate'", "config");
  p.validate();

  c.endpoints.llm_url = s.get("llm_url");
  c.endpoints.tts_url = s.get("tts_url");
  c.endpoints.sts_url = s.get("sts_url");
  c.endpoints.ppl_url = s.get("ppl_url");
  c.endpoints.api_key_env_name = s.get("api_key_env");
  c.endpoints.tts_voice = s.get("tts_voice");
  if (c.provider == ProviderKind::http) {
    for (const auto& [name, url] : {std::pair{"llm_url", &c.endpoints.llm_url}, std::pair{"tts_url", &c.endpoints.tts_url},
                                    std::pair{"sts_url", &c.endpoints.sts_url}, std::pair{"ppl_url", &c.endpoints.ppl_url}}) {
      if (url->empty()) throw data_error(std::string(name) + " is required with provider = http", "config");
      parse_url(*url);
    }
  }

  const auto non_negative = [&](const char* key) {
    const long long v = s.get_int(key);
    if (v < 0) throw data_error(std::string(key) + " must be >= 0", "config");
    return static_cast<std::size_t>(v);
  };
  c.dataset.min_words = non_negative("min_words");
  c.dataset.max_words = non_negative("max_words");
  c.dataset.head_lines = non_negative("head_lines");
  if (c.dataset.min_words > c.dataset.max_words) throw data_error("min_words exceeds max_words", "config");
  c.dataset_path = s.get("dataset");
  c.out_dir = s.get("out");
  c.cache_dir = s.get("cache_dir").empty() ? c.out_dir / "tts_cache" : std::filesystem::path(s.get("cache_dir"));
  c.noise_wav = s.get("noise_wav");
  c.max_in_flight = static_cast<int>(non_negative("max_in_flight"));
  if (c.max_in_flight < 1) throw data_error("max_in_flight must be >= 1", "config");
  c.listeners = non_negative("listeners");
  const long long jobs = s.get_int("jobs");
  if (jobs < 0) throw data_error("jobs must be >= 0", "config");
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  c.jobs = jobs == 0 ? hw : static_cast<int>(jobs);
  if (c.provider == ProviderKind::http) c.jobs = std::min(c.jobs, c.max_in_flight);
  return c;
}

}  // namespace pispin
