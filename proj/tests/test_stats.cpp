#include <pispin/stats.hpp>

#include <catch_amalgamated.hpp>

#include "oracle_values.hpp"

#include <vector>

using namespace pispin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("t distribution matches the oracle") {
  for (const auto& c : testing::oracle::kTCdf) CHECK_THAT(stats::t_cdf(c.t, c.df), WithinAbs(c.value, 1e-10));
  for (const auto& c : testing::oracle::kTQuantile975) {
    CHECK_THAT(stats::t_quantile(0.975, c.df), WithinAbs(c.value, 1e-8));
  }
  CHECK(stats::t_cdf(0.0, 7.0) == 0.5);
  CHECK_THAT(stats::t_cdf(1.3, 4.0) + stats::t_cdf(-1.3, 4.0), WithinAbs(1.0, 1e-12));
}

TEST_CASE("one-sample t-test against 1.0 matches the oracle") {
  for (const auto& c : testing::oracle::kTTests) {
    INFO(c.name);
    const auto s = stats::aggregate(c.values);
    CHECK_THAT(s.mean, WithinAbs(c.mean, 1e-12));
    REQUIRE(s.t_stat_vs_one);
    CHECK_THAT(*s.t_stat_vs_one, WithinAbs(c.t, 1e-6));
    CHECK_THAT(*s.p_value_vs_one, WithinAbs(c.p, 1e-6));
    CHECK_THAT(*s.ci95_half_width, WithinAbs(c.ci95, 1e-6));
    CHECK_FALSE(s.zero_variance);
  }
  CHECK(stats::aggregate(testing::oracle::kTTests[1].values).significant());
  CHECK_FALSE(stats::aggregate(testing::oracle::kTTests[0].values).significant());
}

TEST_CASE("aggregate edge cases") {
  const std::vector<double> constant = {1.0, 1.0, 1.0};
  const auto c = stats::aggregate(constant);
  CHECK(c.mean == 1.0);
  CHECK(c.zero_variance);
  CHECK_FALSE(c.p_value_vs_one);
  CHECK_FALSE(c.significant());

  const std::vector<double> other = {2.5, 2.5, 2.5, 2.5};
  CHECK(stats::aggregate(other).zero_variance);
  CHECK(stats::aggregate(other).mean == 2.5);

  const std::vector<double> symmetric = {0.9, 1.0, 1.1};
  const auto s = stats::aggregate(symmetric);
  CHECK_THAT(s.mean, WithinAbs(1.0, 1e-12));
  CHECK_THAT(*s.t_stat_vs_one, WithinAbs(0.0, 1e-9));
  CHECK_THAT(*s.p_value_vs_one, WithinAbs(1.0, 1e-9));

  const std::vector<double> one = {1.4};
  CHECK(stats::aggregate(one).mean == 1.4);
  CHECK_FALSE(stats::aggregate(one).p_value_vs_one);
  CHECK_THROWS_AS(stats::aggregate(std::vector<double>{}), Error);
}

TEST_CASE("pearson matches the oracle") {
  for (const auto& c : testing::oracle::kPearson) {
    INFO(c.name);
    const auto r = stats::pearson(c.x, c.y);
    CHECK_THAT(r.r, WithinAbs(c.r, 1e-9));
    CHECK_THAT(r.p_value, WithinAbs(c.p, 1e-6));
    CHECK_THAT(r.p_value, WithinRel(c.p, 1e-6));
    CHECK_THAT(stats::pearson(c.y, c.x).r, WithinAbs(r.r, 1e-12));
  }
}

TEST_CASE("pearson trivial cases and errors") {
  const std::vector<double> x = {0.3, 1.0, 2.5, 4.0, 4.5};
  std::vector<double> up, down;
  for (double v : x) {
    up.push_back(2.0 * v + 1.0);
    down.push_back(-v);
  }
  CHECK_THAT(stats::pearson(x, up).r, WithinAbs(1.0, 1e-12));
  CHECK(stats::pearson(x, up).p_value < 1e-9);
  CHECK_THAT(stats::pearson(x, down).r, WithinAbs(-1.0, 1e-12));
  CHECK_THROWS_AS(stats::pearson(x, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(stats::pearson(std::vector<double>{1, 2}, std::vector<double>{2, 1}), Error);
  CHECK_THROWS_AS(stats::pearson(x, std::vector<double>(5, 3.0)), Error);
}
