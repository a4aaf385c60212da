#pragma once

// Batch evaluation into a run directory:
//
//   manifest.txt    resolved settings (reusable as --config)
//   records.jsonl   one record per sentence, sorted by dataset index
//   errors.jsonl    sentences that failed, with stage and message
//   report.tsv/.md  metric tables
//   sent_int.json   optional listening-test scores ("<id>:input"/"<id>:output")
//
// Reruns skip sentences already present in records.jsonl.

#include <pispin/babble.hpp>
#include <pispin/config.hpp>
#include <pispin/eval.hpp>
#include <pispin/generation/audio_cache.hpp>
#include <pispin/generation/http.hpp>
#include <pispin/generation/mock.hpp>
#include <pispin/pipeline.hpp>

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace pispin {

/// Owns the concrete clients selected by the configuration.
struct ProviderStack {
  std::unique_ptr<LlmClient> llm;
  std::unique_ptr<TtsClient> raw_tts;
  std::unique_ptr<CachedTts> tts;
  std::unique_ptr<StsClient> sts;
  std::unique_ptr<PplClient> ppl;

  Providers view() { return {*llm, *tts, *sts, *ppl}; }
};

inline ProviderStack make_providers(const RunConfig& cfg) {
  ProviderStack s;
  if (cfg.provider == ProviderKind::mock) {
    if (cfg.mock_llm == "echo") s.llm = std::make_unique<EchoLlm>();
    else s.llm = std::make_unique<ParaphraseLlm>();
    s.raw_tts = std::make_unique<MockTts>();
    s.sts = std::make_unique<MockSts>();
    s.ppl = std::make_unique<MockPpl>();
  } else {
    TransportOptions opts;
    opts.max_in_flight = cfg.max_in_flight;
    opts.retry.max_retries = cfg.pipeline.generation.max_retries;
    s.llm = std::make_unique<HttpLlm>(cfg.endpoints.llm_url, cfg.endpoints.api_key_env_name, opts);
    s.raw_tts = std::make_unique<HttpTts>(cfg.endpoints.tts_url, cfg.endpoints.tts_voice, opts);
    s.sts = std::make_unique<HttpSts>(cfg.endpoints.sts_url, opts);
    s.ppl = std::make_unique<HttpPpl>(cfg.endpoints.ppl_url, opts);
  }
  s.tts = std::make_unique<CachedTts>(*s.raw_tts, cfg.cache_dir);
  return s;
}

/// The configured noise recording, or synthetic babble when none is given,
/// at the STOI analysis rate.
inline NoiseSource load_noise(const RunConfig& cfg) {
  const int rate = cfg.pipeline.stoi.analysis_rate_hz;
  if (cfg.noise_wav.empty()) {
    return NoiseSource(make_synthetic_babble(8.0, 8, 1).resampled(rate).signal(), cfg.pipeline.noise_label);
  }
  return NoiseSource(read_wav(cfg.noise_wav), cfg.pipeline.noise_label).resampled(rate);
}

namespace detail {

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A torn final line from an interrupted run is skipped.
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded()) out.push_back(std::move(j));
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) throw io_error("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot write " + path.string() + ": " + ec.message());
}

// Manifest text minus the worker count, which does not affect results.
inline std::string without_jobs(const std::string& manifest) {
  std::string out;
  std::istringstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("jobs =")) out += line + "\n";
  }
  return out;
}

}  // namespace detail

struct EvaluateSummary {
  std::size_t total = 0;
  std::size_t resumed = 0;
  std::size_t computed = 0;
  std::size_t failed = 0;
  std::optional<Error> first_error;
};

/// Loads a run directory's rows (and Sent-Int scores when present).
inline EvalRun load_run(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest_path)) throw io_error("no manifest.txt in " + dir.string(), "report");
  // Only the condition fields are needed; unresolvable ${...} values elsewhere are ignored.
  const Settings s = Settings::load(manifest_path, [](const std::string& name) -> std::optional<std::string> {
    return Settings::process_env(name).value_or("");
  });
  EvalRun run;
  run.condition_id = std::string(to_string(parse_prompt_id(s.get("template")))) + "_" + s.get("n_candidates");
  run.noise_label = s.get("noise_label");
  run.snr_db = s.get_double("target_snr_db");
  run.seed = s.get_u64("seed");

  std::optional<nlohmann::json> sent;
  if (std::filesystem::exists(dir / "sent_int.json")) {
    try {
      sent = nlohmann::json::parse(csv::read_text(dir / "sent_int.json"));
    } catch (const nlohmann::json::exception& e) {
      throw data_error(std::string("sent_int.json: ") + e.what(), "report");
    }
  }
  for (const auto& j : detail::read_jsonl(dir / "records.jsonl")) {
    RecordView v = record_from_json(j);
    if (sent) {
      const auto in = sent->find(v.id + ":input"), out = sent->find(v.id + ":output");
      if (in != sent->end() && out != sent->end()) {
        v.result.metrics.sent_int_in = in->get<double>();
        v.result.metrics.sent_int_out = out->get<double>();
        if (*v.result.metrics.sent_int_in > 0.0) v.result.metrics.compute_ratios();
      }
    }
    run.ids.push_back(v.id);
    run.rows.push_back(v.result.metrics);
  }
  return run;
}

inline void write_reports(const std::filesystem::path& dir, const std::vector<EvalRun>& runs) {
  detail::write_file(dir / "report.tsv", render_report(runs, ReportFormat::tsv));
  detail::write_file(dir / "report.md", render_report(runs, ReportFormat::markdown));
}

/// Runs prompt-and-select over `items` with `cfg.jobs` workers, appending
/// records as they finish, then rewrites the record file in dataset order
/// and renders the reports.
inline EvaluateSummary evaluate_dataset(const std::vector<DatasetItem>& items, const RunConfig& cfg,
                                        const Settings& settings, Providers providers, const NoiseSource& noise) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw io_error("cannot create " + cfg.out_dir.string() + ": " + ec.message(), "evaluate");
  const auto manifest_path = cfg.out_dir / "manifest.txt";
  const bool same_settings = fs::exists(manifest_path) && detail::without_jobs(csv::read_text(manifest_path)) ==
                                                              detail::without_jobs(settings.manifest());
  detail::write_file(manifest_path, settings.manifest());

  const auto records_path = cfg.out_dir / "records.jsonl";
  const std::string condition = cfg.condition_id();
  std::map<std::size_t, nlohmann::json> done;
  for (auto& j : same_settings ? detail::read_jsonl(records_path) : std::vector<nlohmann::json>{}) {
    try {
      const RecordView v = record_from_json(j);
      if (v.condition == condition && v.index < items.size() && items[v.index].id == v.id &&
          items[v.index].text == v.result.set.input_text) {
        done.emplace(v.index, std::move(j));
      }
    } catch (const Error&) {
      // Stale or foreign record; recomputed below.
    }
  }

  EvaluateSummary summary;
  summary.total = items.size();
  summary.resumed = done.size();
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!done.contains(i)) todo.push_back(i);
  }

  // Rewrite existing records so the file holds only records for this dataset.
  {
    std::string text;
    for (const auto& [i, j] : done) text += j.dump() + "\n";
    detail::write_file(records_path, text);
  }

  std::mutex mu;
  std::ofstream append(records_path, std::ios::app);
  std::vector<nlohmann::json> errors;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const std::size_t i = todo[t];
      try {
        const PasResult r = run_pas(items[i].text, noise, cfg.pipeline, providers);
        nlohmann::json j = record_to_json(i, items[i].id, condition, r);
        std::lock_guard lock(mu);
        append << j.dump() << "\n" << std::flush;
        done.emplace(i, std::move(j));
        ++summary.computed;
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        errors.push_back({{"index", i}, {"id", items[i].id}, {"kind", to_string(e.kind())}, {"stage", e.stage()},
                          {"message", e.message()}});
        ++summary.failed;
        if (!summary.first_error) summary.first_error = e;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(todo.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  append.close();

  std::string text;
  for (const auto& [i, j] : done) text += j.dump() + "\n";
  detail::write_file(records_path, text);

  std::sort(errors.begin(), errors.end(), [](const auto& a, const auto& b) { return a["index"] < b["index"]; });
  if (errors.empty()) {
    fs::remove(cfg.out_dir / "errors.jsonl", ec);
  } else {
    std::string etext;
    for (const auto& e : errors) etext += e.dump() + "\n";
    detail::write_file(cfg.out_dir / "errors.jsonl", etext);
  }

  EvalRun run = load_run(cfg.out_dir);
  write_reports(cfg.out_dir, {run});
  if (summary.failed > 0) {
    // Mark the reports as partial.
    for (const char* name : {"report.tsv", "report.md"}) {
      const std::string body = csv::read_text(cfg.out_dir / name);
      detail::write_file(cfg.out_dir / name, body + (std::string(name).ends_with(".md") ? "\n" : "") + "# PARTIAL: " +
                                                 std::to_string(summary.failed) + " of " + std::to_string(summary.total) +
                                                 " sentences failed, see errors.jsonl\n");
    }
  }
  return summary;
}

}  // namespace pispin
