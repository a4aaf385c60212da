#pragma once

// Mixing a clean utterance with a noise recording at an exact SNR.
//
//   SNR    = P_signal / P_noise,   P = mean(s^2)
//   SNR_dB = 10 log10(SNR)
//
// The noise segment is scaled by
//   g = sqrt(P_clean / (P_segment * 10^(target_dB / 10)))
// so that the component SNR of (clean, g * segment) is the target.

#include <pispin/audio.hpp>
#include <pispin/error.hpp>
#include <pispin/hash.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace pispin {

/// A full noise recording (e.g. multi-talker babble) with a report label.
class NoiseSource {
 public:
  NoiseSource(AudioSignal signal, std::string label)
      : signal_(std::move(signal)), label_(std::move(label)) {
    if (signal_.empty()) throw dsp_error("noise source is empty", "noise");
    if (!(power(signal_) > 0.0)) throw dsp_error("noise source has zero power", "noise");
  }

  const AudioSignal& signal() const noexcept { return signal_; }
  const std::string& label() const noexcept { return label_; }
  int sample_rate_hz() const noexcept { return signal_.sample_rate_hz(); }

  /// Same recording at another rate, label unchanged.
  NoiseSource resampled(int rate_hz) const {
    if (rate_hz == signal_.sample_rate_hz()) return *this;
    return NoiseSource(resample(signal_, rate_hz), label_);
  }

 private:
  AudioSignal signal_;
  std::string label_;
};

struct MixSpec {
  double target_snr_db = -5.0;
  std::size_t noise_offset_samples = 0;
  /// When set, the offset is drawn from this seed instead of noise_offset_samples.
  std::optional<std::uint64_t> seed;
};

struct MixResult {
  AudioSignal mixed;
  AudioSignal scaled_noise;
  double gain = 1.0;
  std::size_t offset = 0;
};

inline double snr_db(const AudioSignal& clean, const AudioSignal& noise) {
  if (clean.size() != noise.size()) throw dsp_error("snr: length mismatch", "snr");
  if (clean.sample_rate_hz() != noise.sample_rate_hz()) throw dsp_error("snr: sample rate mismatch", "snr");
  const double p_clean = power(clean);
  const double p_noise = power(noise);
  if (!(p_noise > 0.0)) throw dsp_error("snr: zero-power noise", "snr");
  if (!(p_clean > 0.0)) throw dsp_error("snr: zero-power clean signal", "snr");
  return 10.0 * std::log10(p_clean / p_noise);
}

/// Exactly `length` samples of the recording starting at offset mod size,
/// wrapping around the end as often as needed.
inline AudioSignal fit_noise(const NoiseSource& noise, std::size_t length, std::size_t offset) {
  if (length == 0) throw dsp_error("fit_noise: zero length", "noise");
  const auto src = noise.signal().samples();
  std::vector<double> out(length);
  std::size_t pos = offset % src.size();
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = src[pos];
    if (++pos == src.size()) pos = 0;
  }
  return AudioSignal(std::move(out), noise.sample_rate_hz());
}

inline std::size_t resolve_offset(const MixSpec& spec, std::size_t noise_length) {
  if (spec.seed) return static_cast<std::size_t>(splitmix64(*spec.seed) % noise_length);
  return spec.noise_offset_samples;
}

/// Scales a fitted noise segment so that the (clean, scaled_noise) pair sits
/// at the target SNR and returns the sum. The mix is not clipped.
inline MixResult mix_at_snr(const AudioSignal& clean, const NoiseSource& noise, const MixSpec& spec) {
  if (!std::isfinite(spec.target_snr_db)) throw dsp_error("target SNR must be finite", "mix");
  if (clean.empty()) throw dsp_error("clean signal is empty", "mix");
  if (clean.sample_rate_hz() != noise.sample_rate_hz()) {
    throw dsp_error("sample rates differ (clean " + std::to_string(clean.sample_rate_hz()) + " Hz, noise " +
                        std::to_string(noise.sample_rate_hz()) + " Hz); resample the noise first",
                    "mix");
  }
  const double p_clean = power(clean);
  if (!(p_clean > 0.0)) throw dsp_error("clean signal has zero power", "mix");

  const std::size_t offset = resolve_offset(spec, noise.signal().size());
  const AudioSignal segment = fit_noise(noise, clean.size(), offset);
  const double p_segment = power(segment);
  if (!(p_segment > 0.0)) throw dsp_error("noise segment has zero power", "mix");

  const double gain = std::sqrt(p_clean / (p_segment * std::pow(10.0, spec.target_snr_db / 10.0)));
  AudioSignal scaled = segment.scaled(gain);

  std::vector<double> mixed(clean.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = clean[i] + scaled[i];
  return MixResult{AudioSignal(std::move(mixed), clean.sample_rate_hz()), std::move(scaled), gain, offset};
}

/// Scalar bringing the joint peak of the given signals to just under full
/// scale (never amplifies). Apply the same scalar to every signal of a
/// listening pair so their relation is preserved.
inline double listening_scale(std::initializer_list<const AudioSignal*> signals) {
  double peak = 0.0;
  for (const auto* s : signals) peak = std::max(peak, peak_abs(*s));
  constexpr double kFullScale = 32767.0 / 32768.0;
  return peak > kFullScale ? kFullScale / peak : 1.0;
}

}  // namespace pispin
