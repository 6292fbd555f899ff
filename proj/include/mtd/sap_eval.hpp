#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtd/delay_analysis.hpp"
#include "mtd/stream.hpp"
#include "mtd/timestep_router.hpp"
#include "mtd/world.hpp"

namespace mtd {

double iou(const Box2D& a, const Box2D& b);

// 0.50, 0.55, ..., 0.95 and 0.00, 0.01, ..., 1.00, generated as
// start + i * step like the reference COCO tooling.
const std::vector<double>& iou_thresholds();
const std::vector<double>& recall_thresholds();

inline constexpr int kMaxDetectionsPerImage = 100;

/// A ground-truth frame and the detections that were current at its capture.
struct PairedFrame {
  FrameGT gt;
  std::optional<std::size_t> output_index;  // into RunLog::outputs
  std::vector<Detection> detections;
};

struct GtPairing {
  std::vector<PairedFrame> frames;
};

// For every frame j in `range`, the output with the largest emit time not
// after j's capture instant; frames before the first output get no detections.
GtPairing pair_outputs_to_gt(const RunLog& log, const World& world, FrameSpan range);
GtPairing pair_outputs_to_gt(const RunLog& log, const World& world);

// COCO-style AP at a single IoU threshold, averaged over classes that have
// ground truth. With an area filter, ground truth outside the size class is
// ignored, detections matched to ignored ground truth are ignored, and
// unmatched detections outside the size class are ignored.
double coco_ap(const GtPairing& pairs, double iou_threshold,
               std::optional<AreaClass> area_filter = std::nullopt);

struct EvalResult {
  double sap = 0.0;
  double sap50 = 0.0;
  double sap75 = 0.0;
  double sap_s = 0.0;
  double sap_m = 0.0;
  double sap_l = 0.0;
  int missed_timesteps = 0;
  int processed_frames = 0;
  std::map<int, double> per_class_ap;  // class -> AP averaged over thresholds
};

EvalResult evaluate(const RunLog& log, const World& world);

// Outputs whose estimated and realized timestep buckets differ. Every logged
// decision counts, including warm-up frames and a final in-flight frame.
int missed_timestep_count(const RunLog& log);

// Walks a trace as a back-to-back sequence of processed frames and counts
// bucket misses of the given estimator. Matches missed_timestep_count on a
// run that consumes exactly this trace.
int trace_missed_timesteps(const LatencyTrace& trace, const TrendEstimatorConfig& cfg,
                           EstimatorId estimator, double interval_ms);

struct TauTable {
  std::vector<double> taus;
  std::vector<std::string> settings;
  std::vector<std::vector<int>> misses;  // [tau][setting], summed over seeds

  // Indices into `taus` attaining the column minimum.
  std::vector<std::size_t> argmin(std::size_t setting) const;
};

TauTable grid_search_tau(const World& world, const HeadBank& bank,
                         const std::vector<LatencySource>& settings, const std::vector<double>& taus,
                         const std::vector<std::uint64_t>& seeds);

}  // namespace mtd
