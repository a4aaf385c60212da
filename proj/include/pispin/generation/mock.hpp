#pragma once

// Deterministic offline providers. They let the whole pipeline run without
// network access and give exactly reproducible outputs.

#include <pispin/audio.hpp>
#include <pispin/error.hpp>
#include <pispin/generation/providers.hpp>
#include <pispin/hash.hpp>
#include <pispin/text_metrics.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

namespace pispin {

namespace detail {

// Text after the last "sentence: " marker, or the whole prompt.
inline std::string prompt_input(const std::string& prompt) {
  constexpr std::string_view kMarker = "sentence: ";
  const auto pos = prompt.rfind(kMarker);
  return pos == std::string::npos ? prompt : prompt.substr(pos + kMarker.size());
}

// Requested count from "Generate <n> ...", else 1.
inline int prompt_count(const std::string& prompt) {
  static const std::regex re(R"(Generate (\d+) )");
  std::smatch m;
  if (std::regex_search(prompt, m, re)) return std::stoi(m[1].str());
  return 1;
}

inline std::string enumerate(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) out += std::to_string(i + 1) + ". " + lines[i] + "\n";
  return out;
}

}  // namespace detail

/// Returns the prompt's input sentence, repeated as an enumerated list when
/// the prompt asks for several paraphrases.
class EchoLlm final : public LlmClient {
 public:
  std::string generate(const std::string& prompt, const GenerationConfig&) override {
    const std::string input = detail::prompt_input(prompt);
    return detail::enumerate(std::vector<std::string>(static_cast<std::size_t>(detail::prompt_count(prompt)), input));
  }
};

/// Fixed prompt -> reply table.
class CannedLlm final : public LlmClient {
 public:
  explicit CannedLlm(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}
  std::string generate(const std::string& prompt, const GenerationConfig&) override {
    auto it = replies_.find(prompt);
    if (it == replies_.end()) throw remote_error("no canned reply for prompt", "llm");
    return it->second;
  }

 private:
  std::map<std::string, std::string> replies_;
};

/// Rule-based rewriter producing distinct, plausible variants of the input:
/// synonym swaps, contraction changes and filler removal chosen by a hash of
/// (input, variant index).
class ParaphraseLlm final : public LlmClient {
 public:
  std::string generate(const std::string& prompt, const GenerationConfig&) override {
    const std::string input = detail::prompt_input(prompt);
    const int n = detail::prompt_count(prompt);
    std::vector<std::string> lines;
    for (int k = 0; k < n; ++k) lines.push_back(variant(input, static_cast<std::uint64_t>(k)));
    return detail::enumerate(lines);
  }

  static std::string variant(const std::string& input, std::uint64_t k) {
    static const std::unordered_map<std::string, std::vector<std::string>> kSwaps = {
        {"big", {"large", "huge"}},        {"small", {"little", "tiny"}},   {"begin", {"start"}},
        {"purchase", {"buy"}},             {"buy", {"purchase", "get"}},    {"think", {"believe", "feel"}},
        {"know", {"understand", "realize"}}, {"want", {"would like", "wish"}}, {"really", {"truly", "very"}},
        {"good", {"great", "nice", "fine"}}, {"bad", {"poor", "awful"}},    {"get", {"obtain", "receive"}},
        {"kids", {"children"}},            {"children", {"kids"}},          {"car", {"vehicle", "auto"}},
        {"house", {"home"}},               {"home", {"house"}},             {"job", {"work", "position"}},
        {"lot", {"great deal", "bunch"}},  {"people", {"folks", "persons"}}, {"talk", {"speak", "chat"}},
        {"said", {"stated", "told me"}},   {"maybe", {"perhaps"}},          {"guess", {"suppose"}},
        {"like", {"enjoy", "love"}},       {"now", {"today", "currently"}},
        {"help", {"assist", "support"}},   {"money", {"cash", "funds"}},    {"school", {"college"}},
        {"happy", {"glad", "pleased"}},    {"hard", {"difficult", "tough"}}, {"easy", {"simple"}},
    };
    static const std::unordered_map<std::string, std::string> kContract = {
        {"don't", "do not"}, {"do not", "don't"}, {"can't", "cannot"}, {"i'm", "i am"}, {"it's", "it is"},
        {"didn't", "did not"}, {"isn't", "is not"}, {"that's", "that is"}, {"i've", "i have"},
        {"we're", "we are"}, {"they're", "they are"}, {"won't", "will not"}, {"i'd", "i would"}};
    static const std::vector<std::string> kFillers = {"just", "actually", "really", "very", "so", "well", "like",
                                                      "um", "uh", "you know", "kind of", "sort of", "pretty"};
    static const std::vector<std::string> kTails = {"", "", " now", " for sure", " to be honest", " I think"};

    std::vector<std::string> words = word_tokens(input);
    if (words.empty()) return input;
    SplitMix rng(hash_fields(input, std::to_string(k)));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::string& w = words[i];
      const double u = rng.uniform();
      if (k > 0 && std::find(kFillers.begin(), kFillers.end(), w) != kFillers.end() && u < 0.7) continue;
      if (k > 0) {
        if (auto it = kContract.find(w); it != kContract.end() && u < 0.5) {
          out.push_back(it->second);
          continue;
        }
        if (auto it = kSwaps.find(w); it != kSwaps.end() && u < 0.8) {
          out.push_back(it->second[rng.next() % it->second.size()]);
          continue;
        }
      }
      out.push_back(w);
    }
    if (k > 0 && out.size() > 6 && rng.uniform() < 0.35) {
      // Move a trailing clause to the front: "x y, a b c" style reordering.
      const std::size_t cut = out.size() / 2 + rng.next() % (out.size() / 3);
      std::rotate(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cut), out.end());
    }
    std::string text;
    for (const auto& w : out) text += (text.empty() ? "" : " ") + w;
    if (k > 0) text += kTails[rng.next() % kTails.size()];
    if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    return text + ".";
  }
};

/// Speech-like synthetic voice: each phoneme becomes a 60 ms segment at
/// 22050 Hz. Vowels are harmonic with two formant peaks, fricatives are
/// shaped noise, stops are a gap plus a burst. The waveform is seeded by a
/// hash of the text, so identical text gives identical audio.
class MockTts final : public TtsClient {
 public:
  static constexpr int kRate = 22050;
  static constexpr std::size_t kSamplesPerPhoneme = 1323;

  explicit MockTts(const TextAnalyzer& analyzer = TextAnalyzer::shared()) : analyzer_(&analyzer) {}

  AudioSignal synthesize(const std::string& text) override {
    if (text.empty()) throw remote_error("empty text", "tts");
    const PhonemeSeq phones = analyzer_->phoneme_transcript(text);
    if (phones.empty()) throw remote_error("text has no pronounceable content", "tts");
    SplitMix rng(fnv1a64(text));
    const double f0_base = 100.0 + 40.0 * rng.uniform();
    std::vector<double> out;
    out.reserve(phones.size() * kSamplesPerPhoneme);
    double phase = 0.0;
    double lp = 0.0;
    for (std::size_t p = 0; p < phones.size(); ++p) {
      const Phoneme ph = phones[p];
      const auto [f1, f2] = formants(ph);
      const double amp = 0.08 + 0.04 * rng.uniform();
      for (std::size_t i = 0; i < kSamplesPerPhoneme; ++i) {
        const double t = static_cast<double>(i) / kSamplesPerPhoneme;
        const double env = std::sin(std::numbers::pi * t);
        double s = 0.0;
        if (is_vowel(ph) || is_sonorant(ph)) {
          const double f0 = f0_base * (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * (p + t) / 7.0));
          phase += 2.0 * std::numbers::pi * f0 / kRate;
          // sin(h·x) by the Chebyshev recurrence.
          const double c2 = 2.0 * std::cos(phase);
          double prev = 0.0, cur = std::sin(phase);
          for (int h = 1; h * f0 < 4500.0; ++h) {
            const double f = h * f0;
            const double w = 1.0 / (1.0 + sq((f - f1) / 120.0)) + 0.6 / (1.0 + sq((f - f2) / 180.0));
            s += w * cur / h;
            const double next = c2 * cur - prev;
            prev = cur;
            cur = next;
          }
          s *= is_vowel(ph) ? 1.0 : 0.4;
        } else {
          const double white = 2.0 * rng.uniform() - 1.0;
          const double hp = white - lp;
          lp = 0.7 * lp + 0.3 * white;
          const bool stop = is_stop(ph);
          s = (stop && t < 0.6) ? 0.0 : hp * (stop ? 1.2 : 0.6);
        }
        out.push_back(amp * env * s);
      }
    }
    return AudioSignal(std::move(out), kRate);
  }

  std::string cache_key() const override { return "mock-tts-v1"; }

 private:
  static double sq(double x) { return x * x; }

  static bool is_sonorant(Phoneme p) {
    switch (p) {
      case Phoneme::M: case Phoneme::N: case Phoneme::NG: case Phoneme::L: case Phoneme::R:
      case Phoneme::W: case Phoneme::Y: return true;
      default: return false;
    }
  }
  static bool is_stop(Phoneme p) {
    switch (p) {
      case Phoneme::P: case Phoneme::B: case Phoneme::T: case Phoneme::D: case Phoneme::K: case Phoneme::G:
      case Phoneme::CH: case Phoneme::JH: return true;
      default: return false;
    }
  }
  static std::pair<double, double> formants(Phoneme p) {
    switch (p) {
      case Phoneme::IY: return {270, 2290};
      case Phoneme::IH: return {390, 1990};
      case Phoneme::EH: case Phoneme::EY: return {530, 1840};
      case Phoneme::AE: return {660, 1720};
      case Phoneme::AA: case Phoneme::AY: case Phoneme::AW: return {730, 1090};
      case Phoneme::AO: case Phoneme::OY: return {570, 840};
      case Phoneme::UH: case Phoneme::OW: return {440, 1020};
      case Phoneme::UW: return {300, 870};
      case Phoneme::AH: return {640, 1190};
      case Phoneme::ER: case Phoneme::R: return {490, 1350};
      default: return {300, 1500};
    }
  }

  const TextAnalyzer* analyzer_;
};

/// Token-multiset F1: 2·|A n B| / (|A| + |B|) over lowercase word tokens.
class MockSts final : public StsClient {
 public:
  double score(const std::string& candidate, const std::string& reference) override {
    if (candidate.empty() || reference.empty()) throw remote_error("empty text", "sts");
    auto a = word_tokens(candidate), b = word_tokens(reference);
    if (a.empty() || b.empty()) return a.empty() && b.empty() ? 1.0 : 0.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return 2.0 * static_cast<double>(common.size()) / static_cast<double>(a.size() + b.size());
  }
};

/// Hash-seeded perplexity in [50, 450).
class MockPpl final : public PplClient {
 public:
  double score(const std::string& text) override {
    if (text.empty()) throw remote_error("empty text", "ppl");
    return 50.0 + 400.0 * SplitMix(fnv1a64(text)).uniform();
  }
};

}  // namespace pispin
