#include "mtd/timestep_router.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mtd/errors.hpp"

namespace mtd {

HeadBank::HeadBank(std::vector<HeadSpec> heads) : heads_(std::move(heads)) {
  if (heads_.empty()) throw ConfigError("head bank is empty");
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    const auto& h = heads_[i];
    if (h.offset_k != static_cast<int>(i) + 1) {
      throw ConfigError(fmt::format("head offsets must be 1..K in order; head {} has offset {}",
                                    i, h.offset_k));
    }
    if (h.center_noise_std < 0.0 || h.scale_noise_std < 0.0 || h.false_positive_rate < 0.0 ||
        h.score_penalty < 0.0) {
      throw ConfigError(fmt::format("head {} has a negative noise parameter", h.offset_k));
    }
    if (h.miss_prob < 0.0 || h.miss_prob > 1.0 || h.base_score <= 0.0 || h.base_score > 1.0) {
      throw ConfigError(fmt::format("head {} has a probability outside [0, 1]", h.offset_k));
    }
    if (i > 0) {
      const auto& p = heads_[i - 1];
      if (h.center_noise_std < p.center_noise_std || h.scale_noise_std < p.scale_noise_std ||
          h.miss_prob < p.miss_prob || h.false_positive_rate < p.false_positive_rate) {
        throw ConfigError(fmt::format("head {} is less noisy than head {}", h.offset_k, p.offset_k));
      }
    }
  }
}

HeadBank HeadBank::ramp(const HeadBankParams& p) {
  if (p.count < 1) throw ConfigError("head count must be at least 1");
  if (p.center_noise_step < 0.0 || p.scale_noise_step < 0.0 || p.miss_prob_step < 0.0) {
    throw ConfigError("head noise steps must be non-negative");
  }
  std::vector<HeadSpec> heads;
  for (int k = 1; k <= p.count; ++k) {
    const double step = k - 1;
    heads.push_back({k, p.center_noise_base + p.center_noise_step * step,
                     p.scale_noise_base + p.scale_noise_step * step,
                     std::min(1.0, p.miss_prob_base + p.miss_prob_step * step),
                     p.false_positive_rate, p.base_score, p.score_penalty});
  }
  return HeadBank(std::move(heads));
}

HeadBank HeadBank::ideal(int count) {
  std::vector<HeadSpec> heads;
  for (int k = 1; k <= count; ++k) heads.push_back({k, 0.0, 0.0, 0.0, 0.0, 0.9, 0.0});
  return HeadBank(std::move(heads));
}

int target_timestep(double delay_ms, double interval_ms) {
  if (!(delay_ms > 0.0) || !std::isfinite(delay_ms)) {
    throw DomainError(fmt::format("delay must be positive, got {}", delay_ms));
  }
  if (!(interval_ms > 0.0) || !std::isfinite(interval_ms)) {
    throw DomainError(fmt::format("frame interval must be positive, got {}", interval_ms));
  }
  auto n = static_cast<int>(std::floor(delay_ms / interval_ms));
  if (static_cast<double>(n + 1) * interval_ms <= delay_ms) ++n;
  if (n > 0 && static_cast<double>(n) * interval_ms > delay_ms) --n;
  return n;
}

const HeadSpec& select_head(const HeadBank& bank, int n) {
  if (bank.size() == 0) throw ConfigError("head bank is empty");
  if (n < 0) throw DomainError(fmt::format("target timestep must be non-negative, got {}", n));
  const int offset = std::clamp(n + 1, 1, bank.size());
  return bank.head(offset);
}

std::vector<Detection> simulate_head_detections(const World& world, int source_frame,
                                                const HeadSpec& head, Rng& rng) {
  const int target = std::min(source_frame + head.offset_k, world.duration_frames() - 1);
  const FrameGT gt = world.gt_at_frame(target);
  const double axis_std = head.center_noise_std / std::numbers::sqrt2;

  std::vector<Detection> dets;
  dets.reserve(gt.boxes.size());
  for (const auto& g : gt.boxes) {
    const double u = rng.uniform();
    const double zx = rng.normal();
    const double zy = rng.normal();
    const double zw = rng.normal();
    const double zh = rng.normal();
    if (u < head.miss_prob) continue;
    const double dx = axis_std * zx;
    const double dy = axis_std * zy;
    const Vec2 c = g.box.center();
    const double w = g.box.width() * std::exp(head.scale_noise_std * zw);
    const double h = g.box.height() * std::exp(head.scale_noise_std * zh);
    const double score =
        std::clamp(head.base_score - head.score_penalty * std::hypot(dx, dy), kMinScore, 1.0);
    dets.push_back({g.class_id, Box2D::from_center({c.x + dx, c.y + dy}, w, h), score});
  }

  int num_classes = 1;
  for (const auto& o : world.objects()) num_classes = std::max(num_classes, o.class_id + 1);
  const auto& bounds = world.scene_bounds();
  const int fp = rng.poisson(head.false_positive_rate);
  for (int i = 0; i < fp; ++i) {
    const int cls = rng.uniform_int(0, num_classes - 1);
    const double w = rng.uniform(8.0, 120.0);
    const double h = rng.uniform(8.0, 120.0);
    const Vec2 c{rng.uniform(bounds.x1, bounds.x2), rng.uniform(bounds.y1, bounds.y2)};
    dets.push_back({cls, Box2D::from_center(c, w, h), rng.uniform(kMinScore, kFalsePositiveMaxScore)});
  }
  return dets;
}

RoutedOutput route_and_detect(const World& world, int source_frame, const HeadBank& bank,
                              const TrendEstimate& estimate, double interval_ms, Rng& rng) {
  RoutedOutput out;
  auto& d = out.decision;
  d.frame_index = source_frame;
  d.estimated_n = target_timestep(estimate.estimated_ms, interval_ms);
  const HeadSpec& head = select_head(bank, d.estimated_n);
  d.chosen_offset = head.offset_k;
  if (estimate.actual_ms) d.fill_actual(target_timestep(*estimate.actual_ms, interval_ms));
  out.detections = simulate_head_detections(world, source_frame, head, rng);
  return out;
}

}  // namespace mtd
