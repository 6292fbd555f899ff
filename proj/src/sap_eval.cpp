#include "mtd/sap_eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "mtd/errors.hpp"

namespace mtd {

double iou(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

const std::vector<double>& iou_thresholds() {
  static const std::vector<double> t = [] {
    std::vector<double> v(10);
    for (int i = 0; i < 10; ++i) v[i] = 0.5 + 0.05 * i;
    return v;
  }();
  return t;
}

const std::vector<double>& recall_thresholds() {
  static const std::vector<double> t = [] {
    std::vector<double> v(101);
    for (int i = 0; i <= 100; ++i) v[i] = 0.01 * i;
    return v;
  }();
  return t;
}

GtPairing pair_outputs_to_gt(const RunLog& log, const World& world, FrameSpan range) {
  if (log.info.world_fingerprint != world.fingerprint() || log.info.fps != world.fps() ||
      log.info.duration_frames != world.duration_frames()) {
    throw ConfigError("run log was not produced from this world");
  }
  if (range.first < 0 || range.last >= world.duration_frames() || range.first > range.last) {
    throw RangeError(fmt::format("evaluation range [{}, {}] outside the world", range.first, range.last));
  }
  GtPairing pairs;
  pairs.frames.reserve(static_cast<std::size_t>(range.last - range.first + 1));
  const auto& outs = log.outputs;
  for (int j = range.first; j <= range.last; ++j) {
    PairedFrame pf;
    pf.gt = world.gt_at_frame(j);
    const double t = pf.gt.capture_time_ms;
    // First output emitted strictly after t; its predecessor is the pairing.
    const auto it = std::upper_bound(outs.begin(), outs.end(), t,
                                     [](double v, const EmittedOutput& o) { return v < o.emit_time_ms; });
    if (it != outs.begin()) {
      const auto idx = static_cast<std::size_t>(std::distance(outs.begin(), it) - 1);
      pf.output_index = idx;
      pf.detections = outs[idx].detections;
    }
    pairs.frames.push_back(std::move(pf));
  }
  return pairs;
}

GtPairing pair_outputs_to_gt(const RunLog& log, const World& world) {
  return pair_outputs_to_gt(log, world, {0, world.duration_frames() - 1});
}

namespace {

// Per (image, class) detections in score order with their IoU rows, built once
// and reused for every threshold and size filter.
class ApIndex {
 public:
  explicit ApIndex(const GtPairing& pairs) {
    std::set<int> classes;
    for (const auto& pf : pairs.frames) {
      for (const auto& g : pf.gt.boxes) classes.insert(g.class_id);
      for (const auto& d : pf.detections) classes.insert(d.class_id);
    }
    classes_.assign(classes.begin(), classes.end());
    cells_.resize(classes_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const int cls = classes_[c];
      for (const auto& pf : pairs.frames) {
        Cell cell;
        for (const auto& g : pf.gt.boxes) {
          if (g.class_id == cls) cell.gts.push_back(g.box);
        }
        for (const auto& d : pf.detections) {
          if (d.class_id == cls) cell.dets.push_back(d);
        }
        if (cell.gts.empty() && cell.dets.empty()) continue;
        std::stable_sort(cell.dets.begin(), cell.dets.end(),
                         [](const Detection& a, const Detection& b) { return a.score > b.score; });
        if (cell.dets.size() > kMaxDetectionsPerImage) cell.dets.resize(kMaxDetectionsPerImage);
        cell.ious.resize(cell.dets.size() * cell.gts.size());
        for (std::size_t d = 0; d < cell.dets.size(); ++d) {
          for (std::size_t g = 0; g < cell.gts.size(); ++g) {
            cell.ious[d * cell.gts.size() + g] = iou(cell.dets[d].box, cell.gts[g]);
          }
        }
        cells_[c].push_back(std::move(cell));
      }
    }
  }

  const std::vector<int>& classes() const { return classes_; }

  // AP of class index c, or nullopt when it has no (non-ignored) ground truth.
  std::optional<double> class_ap(std::size_t c, double threshold,
                                 std::optional<AreaClass> filter) const {
    struct Scored {
      double score;
      bool tp;
    };
    std::vector<Scored> scored;
    std::size_t positives = 0;
    std::vector<std::size_t> order;
    std::vector<char> gt_ignore;
    std::vector<char> gt_matched;

    for (const auto& cell : cells_[c]) {
      const std::size_t ng = cell.gts.size();
      gt_ignore.assign(ng, 0);
      for (std::size_t g = 0; g < ng; ++g) {
        gt_ignore[g] = filter && area_class(cell.gts[g]) != *filter;
        if (!gt_ignore[g]) ++positives;
      }
      // Non-ignored ground truth first, preserving order otherwise.
      order.resize(ng);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return gt_ignore[a] < gt_ignore[b]; });
      gt_matched.assign(ng, 0);

      for (std::size_t d = 0; d < cell.dets.size(); ++d) {
        double best_iou = std::min(threshold, 1.0 - 1e-10);
        long best = -1;
        for (std::size_t g : order) {
          if (gt_matched[g]) continue;
          if (best >= 0 && !gt_ignore[best] && gt_ignore[g]) break;
          const double v = cell.ious[d * ng + g];
          if (v < best_iou) continue;
          best_iou = v;
          best = static_cast<long>(g);
        }
        bool ignored = false;
        if (best >= 0) {
          gt_matched[best] = 1;
          ignored = gt_ignore[best];
        } else {
          ignored = filter && area_class(cell.dets[d].box) != *filter;
        }
        if (!ignored) scored.push_back({cell.dets[d].score, best >= 0});
      }
    }
    if (positives == 0) return std::nullopt;

    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.score > b.score; });
    const std::size_t n = scored.size();
    std::vector<double> recall(n);
    std::vector<double> precision(n);
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      (scored[i].tp ? tp : fp) += 1.0;
      recall[i] = tp / static_cast<double>(positives);
      precision[i] = tp / (tp + fp);
    }
    for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double sum = 0.0;
    for (double r : recall_thresholds()) {
      const auto it = std::lower_bound(recall.begin(), recall.end(), r);
      if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / static_cast<double>(recall_thresholds().size());
  }

  double mean_ap(double threshold, std::optional<AreaClass> filter) const {
    double sum = 0.0;
    int count = 0;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      if (auto ap = class_ap(c, threshold, filter)) {
        sum += *ap;
        ++count;
      }
    }
    return count == 0 ? 0.0 : sum / count;
  }

 private:
  struct Cell {
    std::vector<Box2D> gts;
    std::vector<Detection> dets;
    std::vector<double> ious;  // [det][gt]
  };

  std::vector<int> classes_;
  std::vector<std::vector<Cell>> cells_;  // [class][image]
};

double sweep(const ApIndex& index, std::optional<AreaClass> filter) {
  double sum = 0.0;
  for (double t : iou_thresholds()) sum += index.mean_ap(t, filter);
  return sum / static_cast<double>(iou_thresholds().size());
}

}  // namespace

double coco_ap(const GtPairing& pairs, double iou_threshold, std::optional<AreaClass> area_filter) {
  return ApIndex(pairs).mean_ap(iou_threshold, area_filter);
}

EvalResult evaluate(const RunLog& log, const World& world) {
  const ApIndex index(pair_outputs_to_gt(log, world));
  EvalResult r;
  r.sap = sweep(index, std::nullopt);
  r.sap50 = index.mean_ap(iou_thresholds()[0], std::nullopt);
  r.sap75 = index.mean_ap(iou_thresholds()[5], std::nullopt);
  r.sap_s = sweep(index, AreaClass::kSmall);
  r.sap_m = sweep(index, AreaClass::kMedium);
  r.sap_l = sweep(index, AreaClass::kLarge);
  r.missed_timesteps = missed_timestep_count(log);
  r.processed_frames = log.processed_frames;
  for (std::size_t c = 0; c < index.classes().size(); ++c) {
    double sum = 0.0;
    bool present = false;
    for (double t : iou_thresholds()) {
      if (auto ap = index.class_ap(c, t, std::nullopt)) {
        sum += *ap;
        present = true;
      }
    }
    if (present) r.per_class_ap[index.classes()[c]] = sum / static_cast<double>(iou_thresholds().size());
  }
  return r;
}

int missed_timestep_count(const RunLog& log) {
  int missed = 0;
  for (const auto& o : log.outputs) {
    const auto& d = o.decision;
    if (!d.actual_m) {
      throw IntegrityError(fmt::format("decision for frame {} has no realized timestep", d.frame_index));
    }
    if (d.missed != (d.estimated_n != *d.actual_m)) {
      throw IntegrityError(fmt::format("decision for frame {} has an inconsistent miss flag", d.frame_index));
    }
    if (d.missed) ++missed;
  }
  return missed;
}

int trace_missed_timesteps(const LatencyTrace& trace, const TrendEstimatorConfig& cfg,
                           EstimatorId estimator, double interval_ms) {
  cfg.validate();
  const std::span<const LatencySample> samples(trace.samples);
  int missed = 0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const auto& s = samples[t];
    const double actual = actual_delay_trend(s.preprocess_ms, s.inference_ms);
    const double estimated = estimator == EstimatorId::kOracle
                                 ? actual
                                 : estimate_for_frame(samples.first(t), s.preprocess_ms, cfg,
                                                      estimator, static_cast<int>(t))
                                       .estimated_ms;
    if (target_timestep(estimated, interval_ms) != target_timestep(actual, interval_ms)) ++missed;
  }
  return missed;
}

std::vector<std::size_t> TauTable::argmin(std::size_t setting) const {
  std::vector<std::size_t> rows;
  if (misses.empty()) return rows;
  int best = misses[0].at(setting);
  for (const auto& row : misses) best = std::min(best, row.at(setting));
  for (std::size_t i = 0; i < misses.size(); ++i) {
    if (misses[i][setting] == best) rows.push_back(i);
  }
  return rows;
}

TauTable grid_search_tau(const World& world, const HeadBank& bank,
                         const std::vector<LatencySource>& settings, const std::vector<double>& taus,
                         const std::vector<std::uint64_t>& seeds) {
  if (settings.empty() || taus.empty() || seeds.empty()) {
    throw ConfigError("grid search needs at least one setting, tau and seed");
  }
  TauTable table;
  table.taus = taus;
  for (const auto& s : settings) table.settings.push_back(s.name);
  for (const double tau : taus) {
    std::vector<int> row;
    for (const auto& setting : settings) {
      int total = 0;
      for (const auto seed : seeds) {
        const StreamConfig cfg{Policy::mtd(tau), setting, seed, world.fps(), world.duration_frames(),
                               std::nullopt};
        total += missed_timestep_count(run_stream(world, bank, cfg));
      }
      row.push_back(total);
    }
    table.misses.push_back(std::move(row));
  }
  return table;
}

}  // namespace mtd
