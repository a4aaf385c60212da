#include <pispin/babble.hpp>
#include <pispin/generation/mock.hpp>
#include <pispin/pipeline.hpp>

#include <catch_amalgamated.hpp>

#include "support.hpp"

#include <random>

using namespace pispin;
using Catch::Matchers::WithinAbs;

namespace {

const NoiseSource& noise() {
  static const NoiseSource n = make_synthetic_babble(3.0, 4, 9).resampled(10000);
  return n;
}

struct MockStack {
  EchoLlm echo;
  ParaphraseLlm paraphrase;
  MockTts tts;
  MockSts sts;
  MockPpl ppl;
  Providers with(LlmClient& llm) { return {llm, tts, sts, ppl}; }
};

class ScriptedLlm final : public LlmClient {
 public:
  explicit ScriptedLlm(std::string reply) : reply_(std::move(reply)) {}
  std::string generate(const std::string& prompt, const GenerationConfig&) override {
    prompts.push_back(prompt);
    return reply_;
  }
  std::vector<std::string> prompts;

 private:
  std::string reply_;
};

class BrokenTts final : public TtsClient {
 public:
  AudioSignal synthesize(const std::string&) override { throw io_error("connection refused"); }
  std::string cache_key() const override { return "broken"; }
};

CandidateSet make_set(const std::vector<double>& stois, double input) {
  CandidateSet set;
  set.input_text = "input";
  set.input_audio_stoi = input;
  for (std::size_t i = 0; i < stois.size(); ++i) set.candidates.push_back({"c" + std::to_string(i), stois[i], stois[i] / input});
  return set;
}

const std::string kSentence = "I think we should leave early to avoid the heavy traffic.";

}  // namespace

TEST_CASE("score_utterance composes synthesis, mixing and STOI") {
  MockTts tts;
  MixSpec spec;
  spec.target_snr_db = -5.0;
  spec.seed = 17;
  const double score = score_utterance(tts, kSentence, noise(), spec);
  const AudioSignal clean = resample(tts.synthesize(kSentence), 10000);
  const MixResult mix = mix_at_snr(clean, noise(), spec);
  CHECK(score == stoi(clean, mix.mixed));
  CHECK(score == score_utterance(tts, kSentence, noise(), spec));
  CHECK(score > 0.0);
  CHECK(score < 1.0);

  const NoiseSource native = make_synthetic_babble(3.0, 4, 9);
  CHECK_THAT(score_utterance(tts, kSentence, native, spec), WithinAbs(score, 0.05));
}

TEST_CASE("a one-phoneme utterance is too short for STOI") {
  MockTts tts;
  REQUIRE(ph_len("a") == 1);
  try {
    score_utterance(tts, "a", noise(), MixSpec{});
    FAIL("expected a STOI error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dsp);
    CHECK(e.stage() == "stoi");
  }
}

TEST_CASE("failing TTS is labelled with its stage") {
  BrokenTts tts;
  MockStack m;
  Providers p{m.echo, tts, m.sts, m.ppl};
  try {
    run_pas(kSentence, noise(), PipelineConfig{}, p);
    FAIL("expected a TTS error");
  } catch (const Error& e) {
    CHECK(e.stage() == "tts");
    CHECK(e.kind() == ErrorKind::io);
  }
}

TEST_CASE("selection") {
  const auto set = make_set({0.50, 0.62, 0.58}, 0.55);
  const Selection s = select_best(set);
  CHECK(s.selected_index == 1);
  CHECK(s.text == "c1");
  CHECK_THAT(s.pwr_stoi, WithinAbs(1.1273, 1e-4));
  CHECK(s.stoi == 0.62);

  CHECK(select_best(make_set({0.4, 0.4, 0.4}, 0.5)).selected_index == 0);
  CHECK(select_best(make_set({0.3, 0.7, 0.7}, 0.5)).selected_index == 1);

  const Selection kept = select_best(make_set({0.40, 0.45}, 0.5), true);
  CHECK(kept.selected_index == -1);
  CHECK(kept.text == "input");
  CHECK(kept.pwr_stoi == 1.0);
  CHECK(kept.stoi == 0.5);
  CHECK(select_best(make_set({0.40, 0.45}, 0.5), false).selected_index == 1);
  CHECK(select_best(make_set({0.40, 0.55}, 0.5), true).selected_index == 1);
  CHECK_THROWS_AS(select_best(make_set({}, 0.5)), Error);
}

TEST_CASE("selection is the brute-force argmax on random sets") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.2, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> stois(1 + rng() % 12);
    for (auto& v : stois) v = trial % 4 == 0 ? std::round(u(rng) * 4) / 4 : u(rng);
    const auto set = make_set(stois, u(rng));
    std::size_t best = 0;
    for (std::size_t i = 0; i < stois.size(); ++i) {
      if (set.candidates[i].pwr_stoi > set.candidates[best].pwr_stoi) best = i;
    }
    REQUIRE(select_best(set).selected_index == static_cast<int>(best));
  }
}

TEST_CASE("candidate set from a fixed reply keeps order and scores each line") {
  ScriptedLlm llm(
      "1. We should leave early so we miss the heavy traffic.\n"
      "2. Let's go early to avoid the traffic jam today.\n"
      "3. Leaving early will help us skip the busy roads.\n"
      "4. I suggest an early start to beat the traffic.\n"
      "5. We ought to head out early because of traffic.\n"
      "6. To avoid heavy traffic we should go early.\n");
  MockStack m;
  PipelineConfig cfg;
  const CandidateSet set = generate_candidate_set(kSentence, noise(), cfg, m.with(llm));
  REQUIRE(set.candidates.size() == 6);
  CHECK(llm.prompts.size() == 1);
  CHECK(llm.prompts[0] == render_prompt(prompt_template(PromptId::pas_n), kSentence, 6));
  CHECK(set.candidates[0].text == "We should leave early so we miss the heavy traffic.");
  CHECK(set.candidates[5].text == "To avoid heavy traffic we should go early.");
  const MixSpec spec = cfg.mix_spec_for(kSentence);
  CHECK(set.input_audio_stoi == score_utterance(m.tts, kSentence, noise(), spec));
  for (const auto& c : set.candidates) {
    CHECK(c.stoi == score_utterance(m.tts, c.text, noise(), spec));
    CHECK(c.pwr_stoi == c.stoi / set.input_audio_stoi);
  }
}

TEST_CASE("a short reply is regenerated once and then fails") {
  ScriptedLlm llm("1. one\n2. two\n3. three\n4. four\n");
  MockStack m;
  try {
    generate_candidate_set(kSentence, noise(), PipelineConfig{}, m.with(llm));
    FAIL("expected a parse shortfall");
  } catch (const ParseShortfall& e) {
    CHECK(e.found() == 4);
  }
  CHECK(llm.prompts.size() == 2);
}

TEST_CASE("per-candidate mode asks once per candidate") {
  ScriptedLlm llm("A single paraphrase that is long enough to score.");
  MockStack m;
  PipelineConfig cfg;
  cfg.n_candidates = 3;
  cfg.generation.candidate_mode = CandidateMode::per_candidate;
  const CandidateSet set = generate_candidate_set(kSentence, noise(), cfg, m.with(llm));
  CHECK(set.candidates.size() == 3);
  REQUIRE(llm.prompts.size() == 3);
  CHECK(llm.prompts[0] == render_prompt(prompt_template(PromptId::zsl_med), kSentence));
}

TEST_CASE("one candidate means no selection") {
  MockStack m;
  PipelineConfig cfg;
  cfg.n_candidates = 1;
  ScriptedLlm llm("Just one paraphrase of the traffic sentence here.");
  const PasResult r = run_pas(kSentence, noise(), cfg, m.with(llm));
  CHECK(llm.prompts.at(0) == render_prompt(prompt_template(PromptId::zsl_med), kSentence));
  CHECK(r.selection.selected_index == 0);
  CHECK(r.selection.text == "Just one paraphrase of the traffic sentence here.");
}

TEST_CASE("identity pipeline gives unit ratios") {
  MockStack m;
  const PasResult r = run_pas(kSentence, noise(), PipelineConfig{}, m.with(m.echo));
  CHECK_THAT(r.metrics.pwr_stoi, WithinAbs(1.0, 1e-9));
  CHECK_THAT(r.metrics.pwr_phlen, WithinAbs(1.0, 1e-9));
  CHECK_THAT(r.metrics.pwr_ppl, WithinAbs(1.0, 1e-9));
  CHECK(r.metrics.ld == 0.0);
  CHECK(r.metrics.sts >= 0.99);
}

TEST_CASE("pair metrics match the hand-composed values") {
  MockStack m;
  PipelineConfig cfg;
  const PasResult r = run_pas(kSentence, noise(), cfg, m.with(m.paraphrase));
  const std::string& out = r.selection.text;
  CHECK(out == r.set.candidates.at(static_cast<std::size_t>(r.selection.selected_index)).text);
  CHECK(r.metrics.sts == m.sts.score(out, kSentence));
  CHECK(r.metrics.ld == lexical_deviation(kSentence, out));
  CHECK(r.metrics.phlen_in == ph_len(kSentence));
  CHECK(r.metrics.phlen_out == ph_len(out));
  CHECK(r.metrics.ppl_in == m.ppl.score(kSentence));
  CHECK(r.metrics.ppl_out == m.ppl.score(out));
  CHECK(r.metrics.stoi_in == r.set.input_audio_stoi);
  CHECK(r.metrics.stoi_out == r.selection.stoi);
  CHECK(r.metrics.pwr_stoi == r.metrics.stoi_out / r.metrics.stoi_in);
  double best = 0.0;
  for (const auto& c : r.set.candidates) best = std::max(best, c.pwr_stoi);
  CHECK(r.selection.pwr_stoi == best);
}

TEST_CASE("a larger candidate set never selects a worse candidate") {
  MockStack m;
  for (const std::string& s : {kSentence, std::string("My sister bought a new car last week and she really loves it."),
                              std::string("Do you want to grab some good coffee after class this afternoon?")}) {
    PipelineConfig six;
    PipelineConfig twelve;
    twelve.n_candidates = 12;
    const CandidateSet a = generate_candidate_set(s, noise(), six, m.with(m.paraphrase));
    const CandidateSet b = generate_candidate_set(s, noise(), twelve, m.with(m.paraphrase));
    for (std::size_t i = 0; i < 6; ++i) REQUIRE(a.candidates[i].text == b.candidates[i].text);
    CHECK(select_best(b).stoi >= select_best(a).stoi);
  }
}

TEST_CASE("records round-trip through JSON") {
  MockStack m;
  const PasResult r = run_pas(kSentence, noise(), PipelineConfig{}, m.with(m.paraphrase));
  const auto j = record_to_json(3, "s3", "pas_n_6", r);
  const RecordView v = record_from_json(nlohmann::json::parse(j.dump()));
  CHECK(v.index == 3);
  CHECK(v.id == "s3");
  CHECK(v.condition == "pas_n_6");
  CHECK(v.result.selection.text == r.selection.text);
  CHECK(v.result.selection.selected_index == r.selection.selected_index);
  CHECK(v.result.set.candidates.size() == r.set.candidates.size());
  CHECK(v.result.metrics.pwr_stoi == r.metrics.pwr_stoi);
  CHECK(v.result.metrics.phlen_out == r.metrics.phlen_out);
  CHECK_THROWS_AS(record_from_json(nlohmann::json{{"index", 1}}), Error);
}

TEST_CASE("configuration validation") {
  PipelineConfig cfg;
  cfg.n_candidates = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.n_candidates = 6;
  cfg.generation.top_p = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("noise placement depends on the seed and the sentence only") {
  PipelineConfig a, b;
  b.seed = 1;
  CHECK(a.mix_spec_for("x").seed == a.mix_spec_for("x").seed);
  CHECK(a.mix_spec_for("x").seed != a.mix_spec_for("y").seed);
  CHECK(a.mix_spec_for("x").seed != b.mix_spec_for("x").seed);
}
