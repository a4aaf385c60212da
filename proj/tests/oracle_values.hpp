#pragma once

// Reference statistics computed with scipy by tests/oracle/stats_oracle.py.

#include <array>
#include <vector>

namespace testing::oracle {

struct TTestCase {
  const char* name;
  std::vector<double> values;
  double mean, t, p, ci95;
};

inline const std::array<TTestCase, 3> kTTests = {{
    {"ratios3", {1.1, 1.2, 1.3}, 1.2, 3.46410161513775, 0.0741799002274485, 0.248413771171955},
    {"ratios8",
     {0.97, 1.12, 1.05, 1.21, 0.99, 1.08, 1.15, 1.02},
     1.07375,
     2.52463665051171,
     0.0395416447006615,
     0.0690756978908712},
    {"ratios_below",
     {0.91, 0.95, 1.02, 0.88, 0.97, 0.93},
     0.943333333333333,
     -2.84123664947573,
     0.0361938764351215,
     0.0512686277104972},
}};

struct PearsonCase {
  const char* name;
  std::vector<double> x, y;
  double r, p;
};

inline const std::array<PearsonCase, 2> kPearson = {{
    {"pearson10",
     {0.52, 0.61, 0.47, 0.70, 0.58, 0.66, 0.43, 0.55, 0.62, 0.49},
     {1.35, 1.02, 1.60, 0.91, 1.21, 1.05, 1.72, 1.18, 0.97, 1.44},
     -0.957712881051132,
     1.32922943045273e-05},
    {"pearson6", {1, 2, 3, 4, 5, 6}, {2.1, 3.9, 6.2, 7.8, 10.1, 12.2}, 0.999104932480818, 1.20136025602178e-06},
}};

struct QuantileCase {
  double df, value;
};

inline constexpr std::array<QuantileCase, 5> kTQuantile975 = {{
    {1, 12.7062047364321},
    {2, 4.30265272969614},
    {5, 2.57058183563631},
    {29, 2.0452296421327},
    {299, 1.96792966906536},
}};

struct CdfCase {
  double t, df, value;
};

inline constexpr std::array<CdfCase, 2> kTCdf = {{
    {2.0, 3.0, 0.930337015720578},
    {-1.5, 10.0, 0.0822536632227201},
}};

}  // namespace testing::oracle
