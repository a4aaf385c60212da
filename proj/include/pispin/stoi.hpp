#pragma once

// Short-Time Objective Intelligibility (STOI).
//
// Pipeline: silent-frame removal on the clean reference -> Hann-windowed STFT
// -> one-third-octave band envelopes -> per band and per sliding segment of
// `segment_frames` frames: energy-normalise and clip the degraded envelope,
// then correlate it with the clean envelope -> mean over bands and segments.
//
// Numerics follow the widely used reference implementation (symmetric Hann
// of length N+2 with end points dropped, frames starting at i < len - N,
// nearest-bin band edges, machine-epsilon guards in every norm) so scores
// agree with published values to floating-point precision.

#include <pispin/audio.hpp>
#include <pispin/error.hpp>
#include <pispin/fft.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace pispin {

struct StoiConfig {
  int analysis_rate_hz = 10000;
  std::size_t frame_len = 256;
  std::size_t frame_hop = 128;
  std::size_t fft_len = 512;
  std::size_t n_bands = 15;
  double lowest_center_hz = 150.0;
  std::size_t segment_frames = 30;
  double silence_range_db = 40.0;
  /// Lower signal-to-distortion bound. The degraded envelope is clipped at
  /// (1 + 10^(-clip_bound_db / 20)) times the clean envelope.
  double clip_bound_db = -15.0;

  void validate() const {
    if (analysis_rate_hz <= 0) throw dsp_error("analysis rate must be positive", "stoi");
    if (frame_hop == 0 || frame_len % frame_hop != 0) throw dsp_error("frame_hop must divide frame_len", "stoi");
    if (fft_len < frame_len) throw dsp_error("fft_len must be >= frame_len", "stoi");
    if (!is_power_of_two(fft_len)) throw dsp_error("fft_len must be a power of two", "stoi");
    if (n_bands < 1) throw dsp_error("n_bands must be >= 1", "stoi");
    if (segment_frames < 2) throw dsp_error("segment_frames must be >= 2", "stoi");
  }

  double clip_factor() const { return 1.0 + std::pow(10.0, -clip_bound_db / 20.0); }
};

/// One-third-octave band selection over FFT bins 0..fft_len/2.
/// Row j covers bins [first_bin[j], end_bin[j]).
struct BandMatrix {
  std::vector<double> center_hz;
  std::vector<std::size_t> first_bin;
  std::vector<std::size_t> end_bin;
  std::size_t n_bins = 0;

  std::size_t rows() const noexcept { return center_hz.size(); }
  std::size_t cols() const noexcept { return n_bins; }
  int at(std::size_t row, std::size_t col) const noexcept {
    return col >= first_bin[row] && col < end_bin[row] ? 1 : 0;
  }
};

inline BandMatrix third_octave_band_matrix(const StoiConfig& config) {
  config.validate();
  BandMatrix m;
  m.n_bins = config.fft_len / 2 + 1;
  const double bin_hz = static_cast<double>(config.analysis_rate_hz) / static_cast<double>(config.fft_len);
  // Nearest bin to a frequency; first index wins on ties.
  auto nearest = [&](double freq) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.n_bins; ++k) {
      const double d = (k * bin_hz - freq) * (k * bin_hz - freq);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  for (std::size_t j = 0; j < config.n_bands; ++j) {
    const double k = static_cast<double>(j);
    m.center_hz.push_back(std::pow(std::pow(2.0, 1.0 / 3.0), k) * config.lowest_center_hz);
    m.first_bin.push_back(nearest(config.lowest_center_hz * std::pow(2.0, (2.0 * k - 1.0) / 6.0)));
    m.end_bin.push_back(nearest(config.lowest_center_hz * std::pow(2.0, (2.0 * k + 1.0) / 6.0)));
  }
  return m;
}

namespace detail {

constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Hann window of length n without its zero end points (MATLAB `hanning`).
inline std::vector<double> hann_inner(std::size_t n) {
  std::vector<double> w(n);
  const double denom = static_cast<double>(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / denom);
  }
  return w;
}

/// Frame starts 0, hop, 2 hop, ... strictly below len - frame_len.
inline std::size_t frame_count(std::size_t len, std::size_t frame_len, std::size_t hop) {
  if (len <= frame_len) return 0;
  return (len - frame_len + hop - 1) / hop;
}

inline std::vector<double> overlap_add(const std::vector<std::vector<double>>& frames, std::size_t hop) {
  if (frames.empty()) return {};
  const std::size_t frame_len = frames.front().size();
  std::vector<double> out((frames.size() - 1) * hop + frame_len, 0.0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t i = 0; i < frame_len; ++i) out[f * hop + i] += frames[f][i];
  }
  return out;
}

inline double l2(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

}  // namespace detail

/// Drops frames whose clean-signal energy lies more than silence_range_db
/// below the loudest clean frame, from both signals, and overlap-adds the
/// surviving windowed frames back into waveforms.
inline std::pair<AudioSignal, AudioSignal> remove_silent_frames(const AudioSignal& clean, const AudioSignal& degraded,
                                                                const StoiConfig& config) {
  config.validate();
  if (clean.size() != degraded.size()) throw dsp_error("remove_silent_frames: length mismatch", "stoi");
  const std::size_t n = config.frame_len, hop = config.frame_hop;
  const std::size_t count = detail::frame_count(clean.size(), n, hop);
  if (count == 0) throw dsp_error("signal shorter than one analysis frame", "stoi");

  const auto w = detail::hann_inner(n);
  const auto x = clean.samples();
  const auto y = degraded.samples();
  std::vector<std::vector<double>> xf(count, std::vector<double>(n)), yf(count, std::vector<double>(n));
  std::vector<double> energy_db(count);
  double max_norm = 0.0;
  for (std::size_t f = 0; f < count; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      xf[f][i] = w[i] * x[f * hop + i];
      yf[f][i] = w[i] * y[f * hop + i];
    }
    const double norm = detail::l2(xf[f].data(), n);
    max_norm = std::max(max_norm, norm);
    energy_db[f] = 20.0 * std::log10(norm + detail::kEps);
  }
  if (max_norm == 0.0) throw dsp_error("all clean frames are silent", "stoi");

  const double max_db = *std::max_element(energy_db.begin(), energy_db.end());
  std::vector<std::vector<double>> xk, yk;
  for (std::size_t f = 0; f < count; ++f) {
    if (max_db - config.silence_range_db - energy_db[f] < 0.0) {
      xk.push_back(std::move(xf[f]));
      yk.push_back(std::move(yf[f]));
    }
  }
  return {AudioSignal(detail::overlap_add(xk, hop), clean.sample_rate_hz()),
          AudioSignal(detail::overlap_add(yk, hop), clean.sample_rate_hz())};
}

namespace detail {

/// Band envelopes, indexed [band][frame].
inline std::vector<std::vector<double>> band_envelopes(const AudioSignal& signal, const StoiConfig& config,
                                                       const BandMatrix& bands, const Fft& fft) {
  const std::size_t n = config.frame_len, hop = config.frame_hop;
  const std::size_t count = frame_count(signal.size(), n, hop);
  const auto w = hann_inner(n);
  const auto s = signal.samples();
  std::vector<std::vector<double>> env(bands.rows(), std::vector<double>(count));
  std::vector<double> frame(n);
  for (std::size_t f = 0; f < count; ++f) {
    for (std::size_t i = 0; i < n; ++i) frame[i] = w[i] * s[f * hop + i];
    const auto spec = fft.power_spectrum(frame);
    for (std::size_t j = 0; j < bands.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = bands.first_bin[j]; k < bands.end_bin[j]; ++k) acc += spec[k];
      env[j][f] = std::sqrt(acc);
    }
  }
  return env;
}

}  // namespace detail

/// Reusable STOI scorer; the band matrix and FFT plan are built once and
/// then shared read-only, so one instance may be used from many threads.
class StoiScorer {
 public:
  explicit StoiScorer(StoiConfig config = {})
      : config_((config.validate(), config)), bands_(third_octave_band_matrix(config_)), fft_(config_.fft_len) {}

  const StoiConfig& config() const noexcept { return config_; }
  const BandMatrix& bands() const noexcept { return bands_; }

  /// Both signals must share a sample rate; they are resampled to the
  /// analysis rate when it differs. Lengths differing by less than one frame
  /// are truncated to the shorter signal.
  double operator()(const AudioSignal& clean, const AudioSignal& degraded) const {
    if (clean.sample_rate_hz() != degraded.sample_rate_hz()) {
      throw dsp_error("clean and degraded sample rates differ", "stoi");
    }
    const std::size_t a = clean.size(), b = degraded.size();
    const std::size_t diff = a > b ? a - b : b - a;
    const std::size_t frame_at_rate =
        config_.frame_len * static_cast<std::size_t>(clean.sample_rate_hz()) / static_cast<std::size_t>(config_.analysis_rate_hz);
    if (diff >= std::max<std::size_t>(1, frame_at_rate)) {
      throw dsp_error("length mismatch of " + std::to_string(diff) + " samples exceeds one frame", "stoi");
    }
    AudioSignal x = diff ? clean.truncated(std::min(a, b)) : clean;
    AudioSignal y = diff ? degraded.truncated(std::min(a, b)) : degraded;
    if (x.sample_rate_hz() != config_.analysis_rate_hz) {
      x = resample(x, config_.analysis_rate_hz);
      y = resample(y, config_.analysis_rate_hz);
    }
    return score_at_analysis_rate(x, y);
  }

 private:
  double score_at_analysis_rate(const AudioSignal& clean, const AudioSignal& degraded) const {
    auto [x, y] = remove_silent_frames(clean, degraded, config_);
    const std::size_t frames = detail::frame_count(x.size(), config_.frame_len, config_.frame_hop);
    const std::size_t seg = config_.segment_frames;
    if (frames < seg) {
      throw dsp_error("only " + std::to_string(frames) + " frames after silence removal; need " +
                          std::to_string(seg),
                      "stoi");
    }
    const auto xe = detail::band_envelopes(x, config_, bands_, fft_);
    const auto ye = detail::band_envelopes(y, config_, bands_, fft_);
    const double clip = config_.clip_factor();
    const std::size_t n_segments = frames - seg + 1;

    std::vector<double> xs(seg), ys(seg);
    double total = 0.0;
    for (std::size_t m = 0; m < n_segments; ++m) {
      for (std::size_t j = 0; j < bands_.rows(); ++j) {
        const double* xr = xe[j].data() + m;
        const double* yr = ye[j].data() + m;
        const double alpha = detail::l2(xr, seg) / (detail::l2(yr, seg) + detail::kEps);
        double xmean = 0.0, ymean = 0.0;
        for (std::size_t t = 0; t < seg; ++t) {
          ys[t] = std::min(yr[t] * alpha, xr[t] * clip);
          xs[t] = xr[t];
          xmean += xs[t];
          ymean += ys[t];
        }
        xmean /= static_cast<double>(seg);
        ymean /= static_cast<double>(seg);
        for (std::size_t t = 0; t < seg; ++t) {
          xs[t] -= xmean;
          ys[t] -= ymean;
        }
        const double xn = detail::l2(xs.data(), seg) + detail::kEps;
        const double yn = detail::l2(ys.data(), seg) + detail::kEps;
        double dot = 0.0;
        for (std::size_t t = 0; t < seg; ++t) dot += (ys[t] / yn) * (xs[t] / xn);
        total += dot;
      }
    }
    return total / static_cast<double>(n_segments * bands_.rows());
  }

  StoiConfig config_;
  BandMatrix bands_;
  Fft fft_;
};

inline double stoi(const AudioSignal& clean, const AudioSignal& degraded, const StoiConfig& config = {}) {
  return StoiScorer(config)(clean, degraded);
}

}  // namespace pispin
