#pragma once

// Student-t machinery, one-sample t-test against 1.0, and Pearson r.
//
// The t CDF goes through the regularized incomplete beta function
// I_x(a, b), evaluated with the modified Lentz continued fraction; the
// target accuracy is 1e-10 absolute over the ranges used here.

#include <pispin/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

namespace pispin::stats {

namespace detail {

inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kTiny = 1e-300;
  constexpr double kTol = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kTol) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

/// Two-sided p-value P(|T| >= |t|).
inline double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// Inverse t CDF for p in (0, 1), by bracketing bisection refined to
/// machine precision.
inline double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw data_error("t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -t_quantile(1.0 - p, df);
  double lo = 0.0, hi = 1.0;
  while (t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Summary of a sample of pairwise ratios. The t-test fields are absent for
/// n < 2 or zero variance; `zero_variance` marks the latter.
struct AggregateStats {
  double mean = 0.0;
  std::size_t n = 0;
  double stddev = 0.0;
  std::optional<double> ci95_half_width;
  std::optional<double> t_stat_vs_one;
  std::optional<double> p_value_vs_one;
  bool zero_variance = false;

  bool significant(double alpha = 0.05) const { return p_value_vs_one && *p_value_vs_one < alpha; }
};

inline AggregateStats aggregate(std::span<const double> values, double reference = 1.0) {
  if (values.empty()) throw data_error("aggregate: empty sample");
  AggregateStats s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;

  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  const double se = s.stddev / std::sqrt(static_cast<double>(s.n));
  const double df = static_cast<double>(s.n - 1);
  // Values identical up to rounding: treat as zero variance.
  if (se <= 1e-14 * std::max(1.0, std::abs(s.mean))) {
    s.zero_variance = true;
    s.ci95_half_width = 0.0;
    return s;
  }
  s.ci95_half_width = t_quantile(0.975, df) * se;
  s.t_stat_vs_one = (s.mean - reference) / se;
  s.p_value_vs_one = t_two_sided_p(*s.t_stat_vs_one, df);
  return s;
}

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

inline Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw data_error("pearson: length mismatch");
  if (x.size() < 3) throw data_error("pearson: need at least 3 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw data_error("pearson: zero variance input");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2.0;
  const double one_minus = 1.0 - c.r * c.r;
  c.p_value = one_minus <= 0.0 ? 0.0 : t_two_sided_p(c.r * std::sqrt(df / one_minus), df);
  return c;
}

}  // namespace pispin::stats
