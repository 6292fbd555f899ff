#include "mtd/delay_analysis.hpp"

#include <fmt/format.h>

#include <cmath>
#include <string>

#include "mtd/errors.hpp"

namespace mtd {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(fmt::format("{} must be positive and finite, got {}", what, v));
  }
}

}  // namespace

std::string_view to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::kMtd: return "MTD";
    case EstimatorId::kDade: return "DaDe";
    case EstimatorId::kOracle: return "Oracle";
    case EstimatorId::kStatic: return "Static";
  }
  return "?";
}

EstimatorId estimator_from_string(std::string_view text) {
  if (text == "MTD") return EstimatorId::kMtd;
  if (text == "DaDe") return EstimatorId::kDade;
  if (text == "Oracle") return EstimatorId::kOracle;
  if (text == "Static") return EstimatorId::kStatic;
  throw ConfigError("unknown estimator '" + std::string(text) + "'");
}

void TrendEstimatorConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError(fmt::format("tau must be positive, got {}", tau));
  if (warmup.kind == WarmupPolicy::Kind::kAssumeMean && !(warmup.value_ms > 0.0)) {
    throw ConfigError("warm-up assume_mean value must be positive");
  }
}

double inference_trend(double i_prev, double i_prev2, double tau) {
  require_positive(i_prev, "I(t-1)");
  require_positive(i_prev2, "I(t-2)");
  require_positive(tau, "tau");
  return i_prev / i_prev2 < tau ? i_prev : i_prev2;
}

double delay_trend(double preprocess_ms, double inference_trend_ms) {
  require_positive(preprocess_ms, "P(t)");
  require_positive(inference_trend_ms, "I_trend");
  return preprocess_ms + inference_trend_ms;
}

double dade_delay_trend(double preprocess_ms, double i_prev) {
  require_positive(preprocess_ms, "P(t)");
  require_positive(i_prev, "I(t-1)");
  return preprocess_ms + i_prev;
}

double actual_delay_trend(double preprocess_ms, double inference_ms) {
  require_positive(preprocess_ms, "P(t)");
  require_positive(inference_ms, "I(t)");
  return preprocess_ms + inference_ms;
}

TrendEstimate estimate_for_frame(std::span<const LatencySample> history, double preprocess_ms,
                                 const TrendEstimatorConfig& cfg, EstimatorId estimator,
                                 int frame_index) {
  require_positive(preprocess_ms, "P(t)");
  TrendEstimate est;
  est.frame_index = frame_index;
  est.estimator = estimator;

  const auto n = history.size();
  if (n == 0) {
    est.estimated_ms = cfg.warmup.kind == WarmupPolicy::Kind::kAssumeMean
                           ? preprocess_ms + cfg.warmup.value_ms
                           : preprocess_ms;
  } else if (estimator == EstimatorId::kDade || n == 1) {
    est.estimated_ms = dade_delay_trend(preprocess_ms, history[n - 1].inference_ms);
  } else {
    const double trend =
        inference_trend(history[n - 1].inference_ms, history[n - 2].inference_ms, cfg.tau);
    est.estimated_ms = delay_trend(preprocess_ms, trend);
  }
  return est;
}

}  // namespace mtd
