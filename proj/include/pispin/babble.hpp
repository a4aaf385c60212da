#pragma once

#include <pispin/audio.hpp>
#include <pispin/generation/mock.hpp>
#include <pispin/hash.hpp>
#include <pispin/noise_mixer.hpp>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace pispin {

/// Multi-talker babble built from the mock voice: each talker reads random
/// word strings, the talkers are summed with staggered, wrapped starts and the sum
/// is normalized to unit power. Deterministic for a given seed.
inline NoiseSource make_synthetic_babble(double seconds = 8.0, int talkers = 8, std::uint64_t seed = 1,
                                         const TextAnalyzer& analyzer = TextAnalyzer::shared()) {
  static constexpr std::array<std::string_view, 48> kWords = {
      "water", "morning", "people", "table",  "window", "yellow",  "garden", "little", "number", "market",
      "simple", "paper",  "river",  "seven",  "music",  "doctor",  "coffee", "family", "letter", "money",
      "animal", "station", "country", "weather", "summer", "kitchen", "village", "picture", "answer", "island",
      "silver", "basket", "button", "candle", "forest", "ladder",  "mirror", "pocket", "rabbit", "shadow",
      "ticket", "velvet", "wonder", "zipper", "mother", "brother", "winter", "teacher"};
  MockTts voice(analyzer);
  const auto n = static_cast<std::size_t>(seconds * MockTts::kRate);
  std::vector<double> acc(n, 0.0);
  SplitMix rng(seed);
  for (int t = 0; t < talkers; ++t) {
    // Each talker covers the whole loop once, wrapping around from a random
    // start, so the babble has no silent lead-in and loops seamlessly.
    const auto start = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    std::size_t written = 0;
    while (written < n) {
      std::string sentence;
      const int words = 4 + static_cast<int>(rng.next() % 5);
      for (int w = 0; w < words; ++w) sentence += std::string(w ? " " : "") + std::string(kWords[rng.next() % kWords.size()]);
      const AudioSignal s = voice.synthesize(sentence);
      for (std::size_t i = 0; i < s.size() && written + i < n; ++i) acc[(start + written + i) % n] += s[i];
      written += s.size() + static_cast<std::size_t>(rng.uniform() * 0.1 * MockTts::kRate);
    }
  }
  AudioSignal sum(std::move(acc), MockTts::kRate);
  return NoiseSource(sum.scaled(1.0 / std::sqrt(power(sum))), "babble");
}

}  // namespace pispin
