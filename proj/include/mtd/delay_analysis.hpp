#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "mtd/latency.hpp"

namespace mtd {

// Which delay estimate fed the router. kOracle substitutes the realized delay;
// kStatic marks fixed-head runs, which log an MTD estimate for reference only.
enum class EstimatorId { kMtd, kDade, kOracle, kStatic };

std::string_view to_string(EstimatorId id);
EstimatorId estimator_from_string(std::string_view text);

// How to estimate the very first frame, which has no inference history.
struct WarmupPolicy {
  enum class Kind { kUseLatest, kAssumeMean };
  // kUseLatest: D = P_t, the only measurement available yet.
  // kAssumeMean: D = P_t + value_ms.
  Kind kind = Kind::kAssumeMean;
  double value_ms = 28.1;

  static WarmupPolicy use_latest() { return {Kind::kUseLatest, 0.0}; }
  static WarmupPolicy assume_mean(double ms) { return {Kind::kAssumeMean, ms}; }
  friend bool operator==(const WarmupPolicy&, const WarmupPolicy&) = default;
};

struct TrendEstimatorConfig {
  double tau = 1.0;
  WarmupPolicy warmup;

  void validate() const;
  friend bool operator==(const TrendEstimatorConfig&, const TrendEstimatorConfig&) = default;
};

struct TrendEstimate {
  int frame_index = 0;
  double estimated_ms = 0.0;             // D_t
  std::optional<double> actual_ms;       // AD_t, known once inference finishes
  EstimatorId estimator = EstimatorId::kMtd;

  friend bool operator==(const TrendEstimate&, const TrendEstimate&) = default;
};

// Spike-robust inference delay: keeps the previous frame's inference delay
// unless it jumped by a factor of at least tau over the one before, in which
// case the older value is trusted instead.
double inference_trend(double i_prev, double i_prev2, double tau);

// Estimated delay of the current frame: known preprocessing plus the
// inference trend.
double delay_trend(double preprocess_ms, double inference_trend_ms);

// Baseline estimator: preprocessing plus the last frame's raw inference delay.
double dade_delay_trend(double preprocess_ms, double i_prev);

// Realized delay of the current frame, available after inference completes.
double actual_delay_trend(double preprocess_ms, double inference_ms);

// Estimate for the frame whose preprocessing just finished. `history` holds
// the samples of previously processed frames, oldest first. With fewer than
// two samples the MTD estimator falls back to the single-sample rule, and with
// none it applies the warm-up policy. kOracle and kStatic use the MTD rule.
TrendEstimate estimate_for_frame(std::span<const LatencySample> history, double preprocess_ms,
                                 const TrendEstimatorConfig& cfg, EstimatorId estimator,
                                 int frame_index = 0);

}  // namespace mtd
