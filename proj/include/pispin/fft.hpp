#pragma once

#include <pispin/error.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace pispin {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 FFT for a fixed power-of-two size. Twiddles are
/// evaluated directly (not by recurrence) so rounding stays at a few ulp.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    if (!is_power_of_two(n)) throw dsp_error("FFT length must be a power of two");
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::vector<std::complex<double>>& data) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const auto t = twiddles_[k * stride] * data[start + k + half];
          const auto u = data[start + k];
          data[start + k] = u + t;
          data[start + k + half] = u - t;
        }
      }
    }
  }

  /// |X[k]|^2 for k = 0..n/2 of a real frame zero-padded to n.
  std::vector<double> power_spectrum(std::span<const double> frame) const {
    std::vector<std::complex<double>> buf(n_);
    for (std::size_t i = 0; i < frame.size() && i < n_; ++i) buf[i] = frame[i];
    forward(buf);
    std::vector<double> out(n_ / 2 + 1);
    for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = std::norm(buf[k]);
    return out;
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::size_t> bitrev_;
};

}  // namespace pispin
