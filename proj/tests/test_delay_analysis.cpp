#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtd/delay_analysis.hpp"
#include "mtd/errors.hpp"
#include "mtd/rng.hpp"
#include "oracles/arith_oracles.hpp"
#include "oracles/spike_fixture.hpp"

using namespace mtd;

TEST_CASE("inference trend examples") {
  CHECK(inference_trend(28, 90, 1.0) == 28);
  CHECK(inference_trend(90, 28, 1.0) == 28);
  CHECK(inference_trend(28, 28, 1.0) == 28);
}

TEST_CASE("ratio exactly tau selects the older delay") {
  CHECK(inference_trend(30, 20, 1.5) == 20);
  CHECK(inference_trend(29.9, 20, 1.5) == 29.9);
}

TEST_CASE("delay trend and baselines") {
  CHECK(delay_trend(3.5, 24.5) == 28.0);
  CHECK(delay_trend(0.001, 0.001) == doctest::Approx(0.002));
  CHECK(delay_trend(7.4, 52.1) == doctest::Approx(59.5));
  CHECK(dade_delay_trend(3.5, 24.5) == 28.0);
  CHECK(dade_delay_trend(3.5, 84.5) == 88.0);
  CHECK(delay_trend(3.5, inference_trend(84.5, 24.5, 1.0)) == 28.0);
  CHECK(dade_delay_trend(10, 10) == 20);
  CHECK(actual_delay_trend(3.5, 24.5) == 28.0);
  CHECK(actual_delay_trend(3.5, 84.5) == 88.0);
}

TEST_CASE("nonpositive inputs are domain errors") {
  CHECK_THROWS_AS(inference_trend(0, 1, 1), DomainError);
  CHECK_THROWS_AS(inference_trend(1, -1, 1), DomainError);
  CHECK_THROWS_AS(inference_trend(1, 1, 0), DomainError);
  CHECK_THROWS_AS(delay_trend(-1, 1), DomainError);
  CHECK_THROWS_AS(dade_delay_trend(1, 0), DomainError);
  CHECK_THROWS_AS(actual_delay_trend(1, NAN), DomainError);
}

TEST_CASE("estimate_for_frame composition") {
  TrendEstimatorConfig cfg;
  cfg.warmup = WarmupPolicy::assume_mean(28);
  const std::vector<LatencySample> none;
  CHECK(estimate_for_frame(none, 3.5, cfg, EstimatorId::kMtd).estimated_ms == 31.5);

  cfg.warmup = WarmupPolicy::use_latest();
  CHECK(estimate_for_frame(none, 3.5, cfg, EstimatorId::kDade).estimated_ms == 3.5);

  const std::vector<LatencySample> one{{3.5, 24.5}};
  CHECK(estimate_for_frame(one, 3.5, cfg, EstimatorId::kMtd).estimated_ms == 28.0);
  CHECK(estimate_for_frame(one, 3.5, cfg, EstimatorId::kDade).estimated_ms == 28.0);

  const std::vector<LatencySample> two{{3.5, 24.5}, {3.5, 84.5}};
  const auto mtd = estimate_for_frame(two, 3.5, cfg, EstimatorId::kMtd, 7);
  CHECK(mtd.estimated_ms == 28.0);
  CHECK(mtd.frame_index == 7);
  CHECK(mtd.estimator == EstimatorId::kMtd);
  CHECK_FALSE(mtd.actual_ms.has_value());
  CHECK(estimate_for_frame(two, 3.5, cfg, EstimatorId::kDade).estimated_ms == 88.0);
}

TEST_CASE("canonical spike trace by hand") {
  TrendEstimatorConfig cfg;
  cfg.warmup = WarmupPolicy::assume_mean(28);
  std::vector<LatencySample> history;
  for (const auto& row : oracle::kCanonicalSpike) {
    CHECK(estimate_for_frame(history, row.p, cfg, EstimatorId::kDade).estimated_ms == row.dade_d);
    CHECK(estimate_for_frame(history, row.p, cfg, EstimatorId::kMtd).estimated_ms == row.mtd_d);
    CHECK(actual_delay_trend(row.p, row.i) == row.ad);
    history.push_back({row.p, row.i});
  }
}

TEST_CASE("selection never interpolates") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(0.01, 200);
    const double b = rng.uniform(0.01, 200);
    const double tau = rng.uniform(0.5, 1.5);
    const double r = inference_trend(a, b, tau);
    REQUIRE((r == a || r == b));
    REQUIRE(r == oracle::inference_trend(a, b, tau));
  }
}

TEST_CASE("scale invariance") {
  // Powers of two keep the ratio bit-exact; general factors are checked on
  // values away from the tau boundary.
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(1, 200);
    const double b = rng.uniform(1, 200);
    const double tau = rng.uniform(0.5, 1.5);
    const double c = std::ldexp(1.0, rng.uniform_int(-10, 10));
    REQUIRE(inference_trend(c * a, c * b, tau) == c * inference_trend(a, b, tau));
    const double k = rng.uniform(0.1, 10);
    if (std::abs(a / b - tau) > 1e-9) {
      REQUIRE(inference_trend(k * a, k * b, tau) == doctest::Approx(k * inference_trend(a, b, tau)));
    }
  }
}

TEST_CASE("spike values are never carried forward at tau = 1") {
  // Constant traces with isolated spikes: every non-spike frame whose
  // predecessor-but-one is also non-spike gets a non-spike estimate.
  Rng rng(3);
  TrendEstimatorConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.uniform_int(5, 40);
    std::vector<int> spikes;
    for (int i = 0; i < n; ++i) {
      if ((spikes.empty() || spikes.back() < i - 1) && rng.uniform() < 0.3) spikes.push_back(i);
    }
    const double base = rng.uniform(10, 80);
    const auto trace = synth_spike_trace(n, base, spikes, rng.uniform(5, 100));
    auto is_spike = [&](int t) { return std::find(spikes.begin(), spikes.end(), t) != spikes.end(); };
    const std::span<const LatencySample> all(trace.samples);
    for (int t = 2; t < n; ++t) {
      if (is_spike(t) || is_spike(t - 2)) continue;
      const auto est = estimate_for_frame(all.first(static_cast<std::size_t>(t)), trace.samples[t].preprocess_ms,
                                          cfg, EstimatorId::kMtd);
      // Frame t is not a spike, so its own inference delay is the base value.
      REQUIRE(est.estimated_ms == trace.samples[t].total_ms());
    }
  }
}

TEST_CASE("estimator names") {
  for (auto id : {EstimatorId::kMtd, EstimatorId::kDade, EstimatorId::kOracle, EstimatorId::kStatic}) {
    CHECK(estimator_from_string(to_string(id)) == id);
  }
  CHECK_THROWS_AS(estimator_from_string("LSTM"), ConfigError);
  TrendEstimatorConfig bad;
  bad.tau = -0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
