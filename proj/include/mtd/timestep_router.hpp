#pragma once

#include <optional>
#include <vector>

#include "mtd/delay_analysis.hpp"
#include "mtd/rng.hpp"
#include "mtd/world.hpp"

namespace mtd {

/// One future-prediction branch: predicts the world `offset_k` frames after
/// its input frame, with a parametric accuracy model.
struct HeadSpec {
  int offset_k = 1;
  // RMS displacement of predicted box centers (isotropic Gaussian).
  double center_noise_std = 0.0;
  // Std of the log-scale perturbation applied to width and height.
  double scale_noise_std = 0.0;
  double miss_prob = 0.0;
  double false_positive_rate = 0.0;  // expected spurious boxes per frame
  double base_score = 0.9;
  double score_penalty = 0.0;  // score lost per unit of center displacement

  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

inline constexpr double kFalsePositiveMaxScore = 0.3;
inline constexpr double kMinScore = 0.01;

/// Ramp parameters: every noise term is base + step * (k - 1).
struct HeadBankParams {
  int count = 3;
  double center_noise_base = 1.0;
  double center_noise_step = 0.75;
  double scale_noise_base = 0.02;
  double scale_noise_step = 0.01;
  double miss_prob_base = 0.02;
  double miss_prob_step = 0.01;
  double false_positive_rate = 0.1;
  double base_score = 0.9;
  double score_penalty = 0.02;

  friend bool operator==(const HeadBankParams&, const HeadBankParams&) = default;
};

class HeadBank {
 public:
  // Offsets must be exactly 1..K in order, noise non-decreasing in offset.
  explicit HeadBank(std::vector<HeadSpec> heads);

  static HeadBank ramp(const HeadBankParams& params);
  // Noise-free heads; used for idealized-routing checks.
  static HeadBank ideal(int count);

  const std::vector<HeadSpec>& heads() const { return heads_; }
  int size() const { return static_cast<int>(heads_.size()); }
  const HeadSpec& head(int offset) const { return heads_.at(static_cast<std::size_t>(offset - 1)); }

 private:
  std::vector<HeadSpec> heads_;
};

struct Detection {
  int class_id = 0;
  Box2D box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct TimestepDecision {
  int frame_index = 0;
  int estimated_n = 0;
  std::optional<int> actual_m;  // filled once AD_t is known
  int chosen_offset = 1;
  bool missed = false;

  void fill_actual(int m) {
    actual_m = m;
    missed = m != estimated_n;
  }
  friend bool operator==(const TimestepDecision&, const TimestepDecision&) = default;
};

// Number of whole frame intervals a delay spans: floor(delay / interval).
// Exact multiples j * interval map to j.
int target_timestep(double delay_ms, double interval_ms);

// Head whose target is the frame current when the output is consumed:
// offset clamp(n + 1, 1, K). Targets beyond the bank use the farthest head.
const HeadSpec& select_head(const HeadBank& bank, int n);

// Simulated output of `head` on `source_frame`: ground truth of frame
// source + k (or the last frame), thinned, perturbed and padded with
// false positives. Draws per ground-truth box are the same for every head so
// that heads share random numbers frame by frame.
std::vector<Detection> simulate_head_detections(const World& world, int source_frame,
                                                const HeadSpec& head, Rng& rng);

struct RoutedOutput {
  TimestepDecision decision;
  std::vector<Detection> detections;
};

RoutedOutput route_and_detect(const World& world, int source_frame, const HeadBank& bank,
                              const TrendEstimate& estimate, double interval_ms, Rng& rng);

}  // namespace mtd
