#pragma once

// Mono waveform container, RIFF/WAVE I/O, Kaiser-windowed sinc resampling
// and signal power.

#include <pispin/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace pispin {

/// Immutable mono signal. Amplitudes are linear PCM held as doubles
/// whatever the on-disk encoding was.
class AudioSignal {
 public:
  AudioSignal() = default;

  AudioSignal(std::vector<double> samples, int sample_rate_hz)
      : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (sample_rate_hz_ <= 0) {
      throw dsp_error("sample rate must be positive, got " + std::to_string(sample_rate_hz_));
    }
    for (double s : samples_) {
      if (!std::isfinite(s)) throw dsp_error("signal contains a non-finite amplitude");
    }
  }

  std::span<const double> samples() const noexcept { return samples_; }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  double duration_seconds() const noexcept {
    return sample_rate_hz_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_hz_ : 0.0;
  }

  AudioSignal scaled(double gain) const {
    std::vector<double> out(samples_.size());
    std::transform(samples_.begin(), samples_.end(), out.begin(),
                   [gain](double s) { return gain * s; });
    return AudioSignal(std::move(out), sample_rate_hz_);
  }

  AudioSignal truncated(std::size_t length) const {
    length = std::min(length, samples_.size());
    return AudioSignal(std::vector<double>(samples_.begin(), samples_.begin() + static_cast<std::ptrdiff_t>(length)),
                       sample_rate_hz_);
  }

  friend bool operator==(const AudioSignal&, const AudioSignal&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_ = 1;
};

/// Mean of squared amplitudes.
inline double power(const AudioSignal& signal) {
  if (signal.empty()) throw dsp_error("power of an empty signal");
  double acc = 0.0;
  for (double s : signal.samples()) acc += s * s;
  return acc / static_cast<double>(signal.size());
}

inline double peak_abs(const AudioSignal& signal) {
  double peak = 0.0;
  for (double s : signal.samples()) peak = std::max(peak, std::abs(s));
  return peak;
}

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint16_t read_le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t read_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

/// Decodes an in-memory RIFF/WAVE file. Accepts 16-bit integer and 32-bit
/// float PCM with one or two channels; stereo is averaged to mono.
inline AudioSignal decode_wav(std::span<const std::uint8_t> bytes) {
  using namespace detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw io_error("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::uint32_t size = read_le32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) throw io_error("truncated fmt chunk");
      format = read_le16(chunk + 8);
      channels = read_le16(chunk + 10);
      rate = read_le32(chunk + 12);
      bits = read_le16(chunk + 22);
      if (format == kFormatExtensible && size >= 40 && available >= 40) {
        // First two bytes of the sub-format GUID carry the real format tag.
        format = read_le16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      // Some writers leave 0xFFFFFFFF or an overlong size for streamed data.
      data_size = std::min<std::size_t>(size, available);
      have_data = true;
    }
    pos = body + size + (size & 1u);
    if (have_data && have_fmt) break;
  }
  if (!have_fmt) throw io_error("missing fmt chunk");
  if (!have_data) throw io_error("missing data chunk");
  if (channels != 1 && channels != 2) {
    throw io_error("unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) throw io_error("zero sample rate in header");

  const bool int16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!int16 && !float32) {
    throw io_error("unsupported encoding (format tag " + std::to_string(format) + ", " +
                   std::to_string(bits) + " bits)");
  }
  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw io_error("zero-length data chunk");

  std::vector<double> mono(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + f * frame_bytes + c * bytes_per_sample;
      if (int16) {
        acc += static_cast<std::int16_t>(read_le16(p)) / 32768.0;
      } else {
        std::uint32_t raw = read_le32(p);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += static_cast<double>(v);
      }
    }
    mono[f] = channels == 2 ? acc / 2.0 : acc;
  }
  return AudioSignal(std::move(mono), static_cast<int>(rate));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline AudioSignal read_wav(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw io_error(path.string() + ": " + e.message());
  }
}

/// 16-bit encoding result. `clipped` counts samples saturated at full scale.
struct EncodedWav {
  std::vector<std::uint8_t> bytes;
  std::size_t clipped = 0;
};

inline EncodedWav encode_wav16(const AudioSignal& signal) {
  using namespace detail;
  if (signal.empty()) throw io_error("cannot write an empty signal");
  EncodedWav out;
  const auto data_bytes = static_cast<std::uint32_t>(signal.size() * 2);
  out.bytes.reserve(44 + data_bytes);
  put_tag(out.bytes, "RIFF");
  put_le32(out.bytes, 36 + data_bytes);
  put_tag(out.bytes, "WAVE");
  put_tag(out.bytes, "fmt ");
  put_le32(out.bytes, 16);
  put_le16(out.bytes, kFormatPcm);
  put_le16(out.bytes, 1);
  put_le32(out.bytes, static_cast<std::uint32_t>(signal.sample_rate_hz()));
  put_le32(out.bytes, static_cast<std::uint32_t>(signal.sample_rate_hz()) * 2);
  put_le16(out.bytes, 2);
  put_le16(out.bytes, 16);
  put_tag(out.bytes, "data");
  put_le32(out.bytes, data_bytes);
  for (double s : signal.samples()) {
    double scaled = std::round(s * 32768.0);
    if (scaled > 32767.0) {
      scaled = 32767.0;
      ++out.clipped;
    } else if (scaled < -32768.0) {
      scaled = -32768.0;
      ++out.clipped;
    }
    put_le16(out.bytes, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

/// Writes 16-bit PCM mono and returns the number of clipped samples.
inline std::size_t write_wav(const AudioSignal& signal, const std::filesystem::path& path) {
  auto encoded = encode_wav16(signal);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(encoded.bytes.data()),
            static_cast<std::streamsize>(encoded.bytes.size()));
  if (!out) throw io_error("short write to " + path.string());
  return encoded.clipped;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

namespace detail {

inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

/// Windowed-sinc design for rational resampling: passband to 0.45 x min rate,
/// stopband from 0.5 x min rate, Kaiser window sized for 80 dB attenuation.
struct ResamplerDesign {
  double stopband_db = 80.0;
  double passband_fraction = 0.45;  // of min(source, target) rate
  double stopband_fraction = 0.50;

  double beta() const { return 0.1102 * (stopband_db - 8.7); }
};

/// Sample-rate conversion by Kaiser-windowed sinc interpolation, evaluated
/// polyphase-style from a per-phase weight table. The output has
/// round(len * target / source) samples; equal rates return the input.
inline AudioSignal resample(const AudioSignal& signal, int target_rate_hz,
                            const ResamplerDesign& design = {}) {
  if (target_rate_hz <= 0) throw dsp_error("target sample rate must be positive");
  const int source_rate = signal.sample_rate_hz();
  if (source_rate == target_rate_hz) return signal;
  if (signal.empty()) return AudioSignal({}, target_rate_hz);

  const std::int64_t g = std::gcd(static_cast<std::int64_t>(source_rate), static_cast<std::int64_t>(target_rate_hz));
  const std::int64_t up = target_rate_hz / g;
  const std::int64_t down = source_rate / g;

  const double min_rate = std::min(source_rate, target_rate_hz);
  const double cutoff_hz = 0.5 * (design.passband_fraction + design.stopband_fraction) * min_rate;
  const double transition_hz = (design.stopband_fraction - design.passband_fraction) * min_rate;
  // Kaiser length estimate (A - 7.95) / (14.36 * df / fs), expressed in seconds.
  const double window_seconds = (design.stopband_db - 7.95) / (14.36 * transition_hz);
  const double half_in = 0.5 * window_seconds * source_rate;  // half width, input samples
  const double norm_cutoff = cutoff_hz / source_rate;          // cycles per input sample
  const double beta = design.beta();
  const double i0_beta = detail::bessel_i0(beta);

  // Weights depend only on the fractional phase r/up of the output instant.
  struct Phase {
    std::int64_t first;  // offset of the first tap relative to floor(position)
    std::vector<double> weights;
  };
  auto make_phase = [&](std::int64_t r) {
    const double frac = static_cast<double>(r) / static_cast<double>(up);
    Phase ph;
    ph.first = static_cast<std::int64_t>(std::ceil(frac - half_in));
    const auto last = static_cast<std::int64_t>(std::floor(frac + half_in));
    double sum = 0.0;
    for (std::int64_t k = ph.first; k <= last; ++k) {
      const double tau = static_cast<double>(k) - frac;
      const double x = tau / half_in;
      const double win = detail::bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - x * x))) / i0_beta;
      const double w = 2.0 * norm_cutoff * detail::sinc(2.0 * norm_cutoff * tau) * win;
      ph.weights.push_back(w);
      sum += w;
    }
    for (double& w : ph.weights) w /= sum;
    return ph;
  };

  const std::int64_t n_in = static_cast<std::int64_t>(signal.size());
  const std::int64_t n_out = (n_in * target_rate_hz + source_rate / 2) / source_rate;
  const bool tabulate = up <= 4096;
  std::vector<Phase> table;
  if (tabulate) {
    table.reserve(static_cast<std::size_t>(up));
    for (std::int64_t r = 0; r < up; ++r) table.push_back(make_phase(r));
  }

  const auto x = signal.samples();
  std::vector<double> out(static_cast<std::size_t>(n_out));
  for (std::int64_t m = 0; m < n_out; ++m) {
    const std::int64_t q = (m * down) / up;
    const std::int64_t r = (m * down) % up;
    Phase computed;
    const Phase& ph = tabulate ? table[static_cast<std::size_t>(r)] : (computed = make_phase(r));
    double acc = 0.0;
    for (std::size_t k = 0; k < ph.weights.size(); ++k) {
      const std::int64_t n = q + ph.first + static_cast<std::int64_t>(k);
      if (n >= 0 && n < n_in) acc += ph.weights[k] * x[static_cast<std::size_t>(n)];
    }
    out[static_cast<std::size_t>(m)] = acc;
  }
  return AudioSignal(std::move(out), target_rate_hz);
}

}  // namespace pispin
