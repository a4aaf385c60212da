#include <pispin/audio.hpp>
#include <pispin/csv.hpp>

#include <catch_amalgamated.hpp>

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

using namespace pispin;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Result run(const std::vector<std::string>& args) {
  std::string cmd = quote(PISPIN_CLI);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " 2>/dev/null";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string stoi_path(const std::string& name) { return testing::data_path("stoi/" + name).string(); }

}  // namespace

TEST_CASE("mix reports the measured SNR") {
  testing::TempDir dir("cli_mix");
  const AudioSignal clean = testing::white_noise(16000, 16000, 1, 0.3);
  const AudioSignal noise = testing::white_noise(8000, 8000, 2, 0.3);
  write_wav(clean, dir / "clean.wav");
  write_wav(clean, dir / "same.wav");
  write_wav(noise, dir / "noise.wav");

  Result r = run({"mix", (dir / "clean.wav").string(), (dir / "same.wav").string(), "--snr", "0", "-o", (dir / "m0.wav").string()});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("measured SNR: 0.000000 dB\n"));

  r = run({"mix", (dir / "clean.wav").string(), (dir / "noise.wav").string(), "--snr", "-5", "-o", (dir / "m.wav").string(),
           "--offset-seed", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("measured SNR: -5.000000 dB\n"));
  const AudioSignal mixed = read_wav(dir / "m.wav");
  CHECK(mixed.size() == clean.size());
  CHECK(mixed.sample_rate_hz() == 16000);

  CHECK(run({"mix", (dir / "nope.wav").string(), (dir / "noise.wav").string(), "--snr", "0", "-o", (dir / "x.wav").string()})
            .code == 2);
  CHECK(run({"mix", (dir / "clean.wav").string()}).code == 4);
}

TEST_CASE("stoi subcommand") {
  Result r = run({"stoi", stoi_path("clean_0.wav"), stoi_path("clean_0.wav")});
  CHECK(r.code == 0);
  CHECK(r.out == "1.000000\n");

  r = run({"stoi", stoi_path("clean_0.wav"), stoi_path("noisy_0_snr-5.wav")});
  CHECK(r.code == 0);
  CHECK_THAT(std::stod(r.out), Catch::Matchers::WithinAbs(0.4867589684726866, 1e-5));

  testing::TempDir dir("cli_stoi");
  write_wav(testing::white_noise(1000, 10000, 3), dir / "short.wav");
  CHECK(run({"stoi", (dir / "short.wav").string(), (dir / "short.wav").string()}).code == 3);
  CHECK(run({"stoi", (dir / "absent.wav").string(), stoi_path("clean_0.wav")}).code == 2);
}

namespace {

// Text of the starred candidate line "*[i] 0.123456  text".
std::string starred_text(const std::string& out) {
  const auto star = out.find("\n*[");
  if (star == std::string::npos) return {};
  const auto line_end = out.find('\n', star + 1);
  const std::string line = out.substr(star + 1, line_end - star - 1);
  return line.substr(line.find("  ") + 2);
}

}  // namespace

TEST_CASE("paraphrase with mock providers") {
  testing::TempDir dir("cli_para");
  const std::string sentence = "I think we should leave early to avoid the heavy traffic.";
  const Result plain = run({"paraphrase", sentence, "--out", dir.path().string()});
  REQUIRE(plain.code == 0);
  const std::string chosen = starred_text(plain.out);
  REQUIRE_FALSE(chosen.empty());
  CHECK(plain.out.find("\nselected: " + chosen + "\n") != std::string::npos);
  CHECK(plain.out.find("[6] ") != std::string::npos);

  const Result with_audio =
      run({"paraphrase", sentence, "--out", dir.path().string(), "--audio-dir", (dir / "audio").string()});
  CHECK(with_audio.code == 0);
  CHECK(with_audio.out.starts_with(plain.out));
  for (const char* f : {"input_clean.wav", "input_mixed.wav", "output_clean.wav", "output_mixed.wav"}) {
    CHECK(fs::exists(dir / "audio" / f));
  }

  const Result single = run({"paraphrase", sentence, "-n", "1", "--out", dir.path().string()});
  CHECK(single.code == 0);
  CHECK(single.out.find("\n*[1] ") != std::string::npos);
  CHECK(single.out.find("[2] ") == std::string::npos);
  CHECK(single.out.find("\nselected: " + starred_text(single.out) + "\n") != std::string::npos);

  CHECK(run({"paraphrase", sentence, "--provider", "http"}).code == 4);
  CHECK(run({"paraphrase", sentence, "--set", "n_candidates=zero"}).code == 4);
}

TEST_CASE("evaluate is deterministic and resumable") {
  testing::TempDir dir("cli_eval");
  const std::string dataset = testing::data_path("mock_dataset.txt").string();
  const auto t0 = std::chrono::steady_clock::now();
  Result r = run({"evaluate", dataset, "--out", (dir / "a").string(), "--seed", "11"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(r.code == 0);
  CHECK(secs < 10.0);
  CHECK(r.out.starts_with("condition\tSTS\tLD\tPWR-PhLen\tPWR-PPL\tPWR-STOI\npas_n_6\t"));
  for (const char* f : {"manifest.txt", "records.jsonl", "report.tsv", "report.md"}) CHECK(fs::exists(dir / "a" / f));
  CHECK_FALSE(fs::exists(dir / "a" / "errors.jsonl"));
  const std::string records = csv::read_text(dir / "a" / "records.jsonl");
  CHECK(std::count(records.begin(), records.end(), '\n') == 10);

  Result fresh = run({"evaluate", dataset, "--out", (dir / "b").string(), "--seed", "11", "--jobs", "3"});
  CHECK(fresh.out == r.out);
  CHECK(csv::read_text(dir / "b" / "records.jsonl") == records);

  {
    // Simulate an interrupted run: drop the last record and leave a torn line.
    std::string partial = records.substr(0, records.rfind('\n', records.size() - 2) + 1) + "{\"index\": 9, \"id";
    std::ofstream(dir / "a" / "records.jsonl", std::ios::trunc) << partial;
  }
  Result resumed = run({"evaluate", dataset, "--out", (dir / "a").string(), "--seed", "11"});
  CHECK(resumed.out == r.out);
  CHECK(csv::read_text(dir / "a" / "records.jsonl") == records);

  Result other_seed = run({"evaluate", dataset, "--out", (dir / "a").string(), "--seed", "12"});
  CHECK(other_seed.code == 0);
  CHECK(csv::read_text(dir / "a" / "manifest.txt").find("seed = 12\n") != std::string::npos);

  const std::string manifest = (dir / "b" / "manifest.txt").string();
  Result replay = run({"evaluate", dataset, "--config", manifest, "--out", (dir / "c").string()});
  CHECK(replay.out == r.out);
}

TEST_CASE("transcript scoring and reports") {
  testing::TempDir dir("cli_tr");
  Result r = run({"score-transcripts", testing::data_path("transcripts_hand.csv").string(), "--references",
                  testing::data_path("references_hand.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out == "utterance_id\tsent_int\nu1\t0.687500\n");

  CHECK(run({"score-transcripts", testing::data_path("transcripts_orphan.csv").string(), "--references",
             testing::data_path("references_hand.csv").string()})
            .code == 4);
  CHECK(run({"score-transcripts", testing::data_path("transcripts_hand.csv").string()}).code == 4);

  REQUIRE(run({"evaluate", testing::data_path("mock_dataset.txt").string(), "--out", (dir / "run").string()}).code == 0);
  {
    std::ofstream out(dir / "t.csv");
    out << "utterance_id,listener_id,transcript\n";
    for (int i = 1; i <= 10; ++i) {
      for (int l = 1; l <= 6; ++l) {
        out << i << ":input,L" << l << ",leave early\n";
        out << i << ":output,L" << l << ",we should leave early to avoid traffic\n";
      }
    }
  }
  r = run({"score-transcripts", (dir / "t.csv").string(), "--run", (dir / "run").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "run" / "sent_int.json"));
  const std::string report = csv::read_text(dir / "run" / "report.tsv");
  CHECK(report.find("# Listening test") != std::string::npos);

  r = run({"report", (dir / "run").string(), "--format", "md"});
  CHECK(r.code == 0);
  CHECK(r.out.find("### Listening test") != std::string::npos);
  CHECK(r.out == run({"report", (dir / "run").string(), "--format", "md"}).out);
  CHECK(run({"report", (dir / "missing").string()}).code == 2);
}
