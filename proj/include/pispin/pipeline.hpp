#pragma once

// Prompt-and-select: ask the LLM for n paraphrases, synthesize and noise-mix
// each, score with STOI, and keep the candidate with the best STOI ratio.

#include <pispin/audio.hpp>
#include <pispin/error.hpp>
#include <pispin/generation/prompts.hpp>
#include <pispin/generation/providers.hpp>
#include <pispin/hash.hpp>
#include <pispin/noise_mixer.hpp>
#include <pispin/stoi.hpp>
#include <pispin/text_metrics.hpp>

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace pispin {

struct PipelineConfig {
  int n_candidates = 6;
  double target_snr_db = -5.0;
  std::string noise_label = "babble";
  PromptId template_id = PromptId::pas_n;
  bool allow_input_fallback = false;
  GenerationConfig generation{};
  StoiConfig stoi{};
  /// Mixed with each input sentence to pick its noise segment offset.
  std::uint64_t seed = 0;

  void validate() const {
    if (n_candidates < 1) throw data_error("n_candidates must be >= 1", "config");
    if (!std::isfinite(target_snr_db)) throw data_error("target_snr_db must be finite", "config");
    generation.validate();
    stoi.validate();
  }

  /// Noise placement shared by the input and all of its candidates.
  MixSpec mix_spec_for(const std::string& input_text) const {
    MixSpec spec;
    spec.target_snr_db = target_snr_db;
    spec.seed = hash_fields(std::to_string(seed), input_text);
    return spec;
  }
};

/// Non-owning bundle of the four services.
struct Providers {
  LlmClient& llm;
  TtsClient& tts;
  StsClient& sts;
  PplClient& ppl;
};

struct Candidate {
  std::string text;
  double stoi = 0.0;
  double pwr_stoi = 0.0;
};

struct CandidateSet {
  std::string input_text;
  double input_audio_stoi = 0.0;
  std::vector<Candidate> candidates;
};

struct Selection {
  std::string text;
  double stoi = 0.0;
  double pwr_stoi = 0.0;
  int selected_index = 0;  // -1 when the input was kept
};

struct PasResult {
  CandidateSet set;
  Selection selection;
  PairMetrics metrics;
};

namespace detail {

// Runs fn, tagging any pispin::Error with `stage` unless already tagged.
template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.stage() == stage || e.stage().starts_with(stage + "/")) throw;
    throw e.relabel(stage);
  }
}

}  // namespace detail

/// Synthesizes `text`, brings it (and the noise, if needed) to the STOI
/// analysis rate, mixes at spec.target_snr_db and returns STOI(clean, mix).
/// Pass noise already at the analysis rate to avoid resampling it per call.
inline double score_utterance(TtsClient& tts, const std::string& text, const NoiseSource& noise, const MixSpec& spec,
                              const StoiConfig& stoi_config = {}) {
  const int rate = stoi_config.analysis_rate_hz;
  AudioSignal clean = detail::staged("tts", [&] { return tts.synthesize(text); });
  if (clean.empty()) throw remote_error("empty audio", "tts");
  if (clean.sample_rate_hz() != rate) clean = resample(clean, rate);
  const MixResult mix = detail::staged("mix", [&] {
    return noise.sample_rate_hz() == rate ? mix_at_snr(clean, noise, spec) : mix_at_snr(clean, noise.resampled(rate), spec);
  });
  return detail::staged("stoi", [&] { return StoiScorer(stoi_config)(clean, mix.mixed); });
}

/// Asks the LLM for the candidates. A parse shortfall triggers one
/// regeneration before failing.
inline std::vector<std::string> request_candidates(LlmClient& llm, const std::string& input_text,
                                                   const PipelineConfig& config) {
  const auto n = static_cast<std::size_t>(config.n_candidates);
  const PromptTemplate& tmpl = prompt_template(config.template_id);
  auto ask = [&](const std::string& prompt, std::size_t count) {
    for (int attempt = 0;; ++attempt) {
      const std::string reply = detail::staged("llm", [&] { return llm.generate(prompt, config.generation); });
      try {
        return parse_candidates(reply, count);
      } catch (const ParseShortfall&) {
        if (attempt >= 1) throw;
      }
    }
  };

  const bool one_call = config.generation.candidate_mode == CandidateMode::single_completion && tmpl.multi_candidate;
  if (one_call || n == 1) return ask(render_condition_prompt(config.template_id, input_text, config.n_candidates), n);

  const PromptTemplate& single = tmpl.multi_candidate ? prompt_template(PromptId::zsl_med) : tmpl;
  const std::string prompt = render_prompt(single, input_text);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(ask(prompt, 1).front());
  return out;
}

inline CandidateSet generate_candidate_set(const std::string& input_text, const NoiseSource& noise,
                                           const PipelineConfig& config, Providers providers) {
  CandidateSet set;
  set.input_text = input_text;
  const std::vector<std::string> texts = request_candidates(providers.llm, input_text, config);
  const MixSpec spec = config.mix_spec_for(input_text);
  set.input_audio_stoi = score_utterance(providers.tts, input_text, noise, spec, config.stoi);
  if (!(set.input_audio_stoi > 0.0)) {
    throw dsp_error("input STOI is not positive; ratios are undefined", "stoi");
  }
  for (const auto& text : texts) {
    const double s = score_utterance(providers.tts, text, noise, spec, config.stoi);
    set.candidates.push_back({text, s, s / set.input_audio_stoi});
  }
  return set;
}

/// Argmax of pwr_stoi, lowest index on ties. With `allow_input_fallback`,
/// keeps the input when no candidate beats it.
inline Selection select_best(const CandidateSet& set, bool allow_input_fallback = false) {
  if (set.candidates.empty()) throw data_error("candidate set is empty", "select");
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.candidates.size(); ++i) {
    if (set.candidates[i].pwr_stoi > set.candidates[best].pwr_stoi) best = i;
  }
  const Candidate& c = set.candidates[best];
  if (allow_input_fallback && c.pwr_stoi < 1.0) return {set.input_text, set.input_audio_stoi, 1.0, -1};
  return {c.text, c.stoi, c.pwr_stoi, static_cast<int>(best)};
}

inline Selection select_best(const CandidateSet& set, const PipelineConfig& config) {
  return select_best(set, config.allow_input_fallback);
}

/// Full prompt-and-select for one sentence, with every pair metric.
inline PasResult run_pas(const std::string& input_text, const NoiseSource& noise, const PipelineConfig& config,
                         Providers providers, const TextAnalyzer& analyzer = TextAnalyzer::shared()) {
  PasResult r;
  r.set = generate_candidate_set(input_text, noise, config, providers);
  r.selection = select_best(r.set, config);
  const std::string& out = r.selection.text;
  PairMetrics& m = r.metrics;
  m.sts = detail::staged("sts", [&] { return providers.sts.score(out, input_text); });
  m.ld = analyzer.lexical_deviation(input_text, out);
  m.phlen_in = analyzer.ph_len(input_text);
  m.phlen_out = analyzer.ph_len(out);
  m.ppl_in = detail::staged("ppl", [&] { return providers.ppl.score(input_text); });
  m.ppl_out = detail::staged("ppl", [&] { return providers.ppl.score(out); });
  m.stoi_in = r.set.input_audio_stoi;
  m.stoi_out = r.selection.stoi;
  detail::staged("metrics", [&] { m.compute_ratios(); });
  return r;
}

// ---------------------------------------------------------------------------
// JSON-lines records
// ---------------------------------------------------------------------------

inline nlohmann::json metrics_to_json(const PairMetrics& m) {
  nlohmann::json j = {{"sts", m.sts},           {"ld", m.ld},           {"phlen_in", m.phlen_in},
                      {"phlen_out", m.phlen_out}, {"ppl_in", m.ppl_in},   {"ppl_out", m.ppl_out},
                      {"stoi_in", m.stoi_in},   {"stoi_out", m.stoi_out}, {"pwr_phlen", m.pwr_phlen},
                      {"pwr_ppl", m.pwr_ppl},   {"pwr_stoi", m.pwr_stoi}};
  if (m.sent_int_in) j["sent_int_in"] = *m.sent_int_in;
  if (m.sent_int_out) j["sent_int_out"] = *m.sent_int_out;
  if (m.pwr_sent_int) j["pwr_sent_int"] = *m.pwr_sent_int;
  return j;
}

inline PairMetrics metrics_from_json(const nlohmann::json& j) {
  PairMetrics m;
  try {
    m.sts = j.at("sts").get<double>();
    m.ld = j.at("ld").get<double>();
    m.phlen_in = j.at("phlen_in").get<std::size_t>();
    m.phlen_out = j.at("phlen_out").get<std::size_t>();
    m.ppl_in = j.at("ppl_in").get<double>();
    m.ppl_out = j.at("ppl_out").get<double>();
    m.stoi_in = j.at("stoi_in").get<double>();
    m.stoi_out = j.at("stoi_out").get<double>();
    m.pwr_phlen = j.at("pwr_phlen").get<double>();
    m.pwr_ppl = j.at("pwr_ppl").get<double>();
    m.pwr_stoi = j.at("pwr_stoi").get<double>();
    if (j.contains("sent_int_in")) m.sent_int_in = j["sent_int_in"].get<double>();
    if (j.contains("sent_int_out")) m.sent_int_out = j["sent_int_out"].get<double>();
    if (j.contains("pwr_sent_int")) m.pwr_sent_int = j["pwr_sent_int"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("bad metrics object: ") + e.what(), "record");
  }
  return m;
}

/// One sentence's record: identity, candidates, selection and metrics.
inline nlohmann::json record_to_json(std::size_t index, const std::string& id, const std::string& condition,
                                     const PasResult& r) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.set.candidates) cands.push_back({{"text", c.text}, {"stoi", c.stoi}, {"pwr_stoi", c.pwr_stoi}});
  return {{"index", index},
          {"id", id},
          {"condition", condition},
          {"input", r.set.input_text},
          {"input_stoi", r.set.input_audio_stoi},
          {"candidates", std::move(cands)},
          {"selected_index", r.selection.selected_index},
          {"output", r.selection.text},
          {"metrics", metrics_to_json(r.metrics)}};
}

struct RecordView {
  std::size_t index = 0;
  std::string id;
  std::string condition;
  PasResult result;
};

inline RecordView record_from_json(const nlohmann::json& j) {
  RecordView v;
  try {
    v.index = j.at("index").get<std::size_t>();
    v.id = j.at("id").get<std::string>();
    v.condition = j.at("condition").get<std::string>();
    v.result.set.input_text = j.at("input").get<std::string>();
    v.result.set.input_audio_stoi = j.at("input_stoi").get<double>();
    for (const auto& c : j.at("candidates")) {
      v.result.set.candidates.push_back(
          {c.at("text").get<std::string>(), c.at("stoi").get<double>(), c.at("pwr_stoi").get<double>()});
    }
    v.result.selection.selected_index = j.at("selected_index").get<int>();
    v.result.selection.text = j.at("output").get<std::string>();
    v.result.metrics = metrics_from_json(j.at("metrics"));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("bad record: ") + e.what(), "record");
  }
  v.result.selection.stoi = v.result.metrics.stoi_out;
  v.result.selection.pwr_stoi = v.result.metrics.pwr_stoi;
  return v;
}

}  // namespace pispin
