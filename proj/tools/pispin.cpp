// pispin: command-line front end.
//
//   pispin mix clean.wav noise.wav --snr -5 -o mixed.wav
//   pispin stoi clean.wav degraded.wav
//   pispin paraphrase "some sentence" [--n 6] [--audio-dir DIR]
//   pispin evaluate sentences.txt --out run1
//   pispin score-transcripts --run run1 transcripts.csv
//   pispin report run1 run2 [--format md]
//
// Exit codes: 0 ok, 2 I/O, 3 DSP, 4 data/config, 5 remote service.

#include <pispin/config.hpp>
#include <pispin/eval.hpp>
#include <pispin/noise_mixer.hpp>
#include <pispin/pipeline.hpp>
#include <pispin/run.hpp>
#include <pispin/stoi.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pispin;

namespace {

struct GlobalOptions {
  std::string config;
  std::string provider;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::vector<std::string> overrides;
};

Settings build_settings(const GlobalOptions& g) {
  Settings s = g.config.empty() ? Settings() : Settings::load(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw data_error("--set expects key=value, got '" + kv + "'", "config");
    s.set(std::string(detail::strip_ws(kv.substr(0, eq))), std::string(detail::strip_ws(kv.substr(eq + 1))));
  }
  if (!g.provider.empty()) s.set("provider", g.provider);
  if (g.seed) s.set("seed", std::to_string(*g.seed));
  if (g.jobs) s.set("jobs", std::to_string(*g.jobs));
  if (!g.out.empty()) s.set("out", g.out);
  return s;
}

int cmd_mix(const std::string& clean_path, const std::string& noise_path, double snr, const std::string& out_path,
            std::optional<std::uint64_t> offset_seed, std::size_t offset) {
  const AudioSignal clean = read_wav(clean_path);
  NoiseSource noise(read_wav(noise_path), fs::path(noise_path).stem().string());
  if (noise.sample_rate_hz() != clean.sample_rate_hz()) noise = noise.resampled(clean.sample_rate_hz());
  MixSpec spec;
  spec.target_snr_db = snr;
  spec.noise_offset_samples = offset;
  spec.seed = offset_seed;
  const MixResult mix = mix_at_snr(clean, noise, spec);
  const double scale = listening_scale({&mix.mixed});
  write_wav(mix.mixed.scaled(scale), out_path);
  std::printf("measured SNR: %.6f dB\n", snr_db(clean, mix.scaled_noise));
  std::printf("noise gain: %.6f, offset: %zu samples", mix.gain, mix.offset);
  if (scale != 1.0) std::printf(", written with peak scale %.6f", scale);
  std::printf("\n");
  return 0;
}

int cmd_stoi(const std::string& clean_path, const std::string& degraded_path) {
  const double s = stoi(read_wav(clean_path), read_wav(degraded_path));
  std::printf("%.6f\n", s);
  return 0;
}

void write_pair_audio(const fs::path& dir, const std::string& name, TtsClient& tts, const std::string& text,
                      const NoiseSource& noise, const MixSpec& spec, int rate) {
  AudioSignal clean = tts.synthesize(text);
  if (clean.sample_rate_hz() != rate) clean = resample(clean, rate);
  const MixResult mix = mix_at_snr(clean, noise, spec);
  const double scale = listening_scale({&clean, &mix.mixed});
  write_wav(clean.scaled(scale), dir / (name + "_clean.wav"));
  write_wav(mix.mixed.scaled(scale), dir / (name + "_mixed.wav"));
}

int cmd_paraphrase(const std::string& text, const Settings& settings, const std::string& audio_dir) {
  const RunConfig cfg = resolve(settings);
  ProviderStack providers = make_providers(cfg);
  const NoiseSource noise = load_noise(cfg);
  const PasResult r = run_pas(text, noise, cfg.pipeline, providers.view());

  std::printf("input      %.6f  %s\n", r.set.input_audio_stoi, r.set.input_text.c_str());
  for (std::size_t i = 0; i < r.set.candidates.size(); ++i) {
    const auto& c = r.set.candidates[i];
    std::printf("%s[%zu] %.6f  %s\n", static_cast<int>(i) == r.selection.selected_index ? "*" : " ", i + 1, c.stoi,
                c.text.c_str());
  }
  const PairMetrics& m = r.metrics;
  std::printf("\nselected: %s\n", r.selection.text.c_str());
  std::printf("STS %.3f  LD %.3f  PhLen %zu -> %zu (%.3f)  PPL %.2f -> %.2f (%.3f)  STOI %.4f -> %.4f (%.4f)\n", m.sts,
              m.ld, m.phlen_in, m.phlen_out, m.pwr_phlen, m.ppl_in, m.ppl_out, m.pwr_ppl, m.stoi_in, m.stoi_out,
              m.pwr_stoi);

  if (!audio_dir.empty()) {
    fs::create_directories(audio_dir);
    const MixSpec spec = cfg.pipeline.mix_spec_for(text);
    const int rate = cfg.pipeline.stoi.analysis_rate_hz;
    write_pair_audio(audio_dir, "input", *providers.tts, text, noise, spec, rate);
    write_pair_audio(audio_dir, "output", *providers.tts, r.selection.text, noise, spec, rate);
    std::printf("listening audio written to %s\n", audio_dir.c_str());
  }
  return 0;
}

int cmd_evaluate(const std::string& dataset, Settings settings) {
  settings.set("dataset", dataset);
  const RunConfig cfg = resolve(settings);
  const auto items = load_dataset(cfg.dataset_path, cfg.dataset);
  std::fprintf(stderr, "%zu sentences after filtering (%zu-%zu words)\n", items.size(), cfg.dataset.min_words,
               cfg.dataset.max_words);
  ProviderStack providers = make_providers(cfg);
  const NoiseSource noise = load_noise(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const EvaluateSummary s = evaluate_dataset(items, cfg, settings, providers.view(), noise);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "%zu computed, %zu resumed, %zu failed in %.2f s\n", s.computed, s.resumed, s.failed, secs);
  std::cout << csv::read_text(cfg.out_dir / "report.tsv");
  if (s.first_error) {
    std::fprintf(stderr, "error: %s (see %s)\n", s.first_error->what(), (cfg.out_dir / "errors.jsonl").c_str());
    return exit_code(s.first_error->kind());
  }
  return 0;
}

int cmd_score_transcripts(const std::string& references_path, const std::string& run_dir,
                          const std::string& transcripts_path, std::size_t listeners) {
  std::map<std::string, std::string> refs;
  if (!references_path.empty()) refs = read_references_csv(references_path);
  if (!run_dir.empty()) {
    for (const auto& j : detail::read_jsonl(fs::path(run_dir) / "records.jsonl")) {
      const RecordView v = record_from_json(j);
      refs.emplace(v.id + ":input", v.result.set.input_text);
      refs.emplace(v.id + ":output", v.result.selection.text);
    }
  }
  if (refs.empty()) throw data_error("no reference texts (give --references and/or --run)", "transcripts");
  const TranscriptScores scores = score_transcripts(refs, read_transcripts_csv(transcripts_path), listeners);
  for (const auto& w : scores.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("utterance_id\tsent_int\n");
  for (const auto& [id, v] : scores.sent_int) std::printf("%s\t%.6f\n", id.c_str(), v);

  if (!run_dir.empty()) {
    const fs::path path = fs::path(run_dir) / "sent_int.json";
    nlohmann::json j = fs::exists(path) ? nlohmann::json::parse(csv::read_text(path)) : nlohmann::json::object();
    for (const auto& [id, v] : scores.sent_int) j[id] = v;
    detail::write_file(path, j.dump(2) + "\n");
    write_reports(run_dir, {load_run(run_dir)});
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& format, const std::string& out) {
  std::vector<EvalRun> runs;
  for (const auto& d : dirs) runs.push_back(load_run(d));
  const std::string text = render_report(runs, format == "md" || format == "markdown" ? ReportFormat::markdown
                                                                                      : ReportFormat::tsv);
  if (out.empty()) {
    std::cout << text;
  } else {
    detail::write_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paraphrase selection for speech intelligibility in noise"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "key = value configuration file");
  app.add_option("--provider", g.provider, "service provider")->check(CLI::IsMember({"mock", "http"}));
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--jobs", g.jobs, "parallel sentences (0 = all processors)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.overrides, "override a configuration key (key=value)");

  auto* mix = app.add_subcommand("mix", "mix a clean WAV with noise at an exact SNR");
  std::string mix_clean, mix_noise, mix_out;
  double mix_snr = 0.0;
  std::optional<std::uint64_t> mix_seed;
  std::size_t mix_offset = 0;
  mix->add_option("clean", mix_clean)->required();
  mix->add_option("noise", mix_noise)->required();
  mix->add_option("--snr", mix_snr, "target SNR in dB")->required()->allow_extra_args(false);
  mix->add_option("-o,--output", mix_out)->required();
  mix->add_option("--offset", mix_offset, "noise start sample");
  mix->add_option("--offset-seed", mix_seed, "derive the noise start from a seed");

  auto* st = app.add_subcommand("stoi", "STOI of a degraded WAV against its clean reference");
  std::string st_clean, st_degraded;
  st->add_option("clean", st_clean)->required();
  st->add_option("degraded", st_degraded)->required();

  auto* para = app.add_subcommand("paraphrase", "prompt-and-select for one sentence");
  std::string para_text, para_audio;
  std::optional<int> para_n;
  std::string para_template;
  para->add_option("text", para_text)->required();
  para->add_option("-n,--n", para_n, "number of candidates");
  para->add_option("--template", para_template, "prompt template id");
  para->add_option("--audio-dir", para_audio, "write clean and mixed listening WAVs here");

  auto* ev = app.add_subcommand("evaluate", "prompt-and-select over a dataset");
  std::string ev_dataset;
  std::optional<int> ev_n;
  std::string ev_template;
  ev->add_option("dataset", ev_dataset, "text file (one sentence per line) or CSV id,text")->required();
  ev->add_option("-n,--n", ev_n, "number of candidates");
  ev->add_option("--template", ev_template, "prompt template id");

  auto* sc = app.add_subcommand("score-transcripts", "Sent-Int from listener transcripts");
  std::string sc_refs, sc_run, sc_transcripts;
  std::size_t sc_listeners = 6;
  sc->add_option("transcripts", sc_transcripts, "CSV utterance_id,listener_id,transcript")->required();
  sc->add_option("--references", sc_refs, "CSV utterance_id,text");
  sc->add_option("--run", sc_run, "run directory; its records supply <id>:input / <id>:output references");
  sc->add_option("--listeners", sc_listeners, "expected transcripts per utterance");

  auto* rep = app.add_subcommand("report", "render tables for one or more run directories");
  std::vector<std::string> rep_dirs;
  std::string rep_format = "tsv", rep_out;
  rep->add_option("runs", rep_dirs)->required();
  rep->add_option("--format", rep_format)->check(CLI::IsMember({"tsv", "md", "markdown"}));
  rep->add_option("-o,--output", rep_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::data);
  }

  try {
    Settings settings = build_settings(g);
    auto with_shortcuts = [&](std::optional<int> n, const std::string& tmpl) {
      if (n) settings.set("n_candidates", std::to_string(*n));
      if (!tmpl.empty()) settings.set("template", tmpl);
    };
    if (*mix) return cmd_mix(mix_clean, mix_noise, mix_snr, mix_out, mix_seed, mix_offset);
    if (*st) return cmd_stoi(st_clean, st_degraded);
    if (*para) {
      with_shortcuts(para_n, para_template);
      return cmd_paraphrase(para_text, settings, para_audio);
    }
    if (*ev) {
      with_shortcuts(ev_n, ev_template);
      return cmd_evaluate(ev_dataset, settings);
    }
    if (*sc) return cmd_score_transcripts(sc_refs, sc_run, sc_transcripts, sc_listeners);
    if (*rep) return cmd_report(rep_dirs, rep_format, rep_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return exit_code(ErrorKind::io);
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error (data): %s\n", e.what());
    return exit_code(ErrorKind::data);
  }
  return 0;
}
