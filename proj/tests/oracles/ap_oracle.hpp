#pragma once

// Brute-force average precision for tiny instances.
//
// Matching: every injective partial assignment of detections to ground truth
// (IoU at or above the threshold) is enumerated per image and class. The
// chosen assignment is the lexicographic maximum, over detections in
// descending score order, of the key (matched a counted GT, matched an
// ignored GT, unmatched) then IoU. That is what a score-ordered greedy matcher
// produces, derived here from its defining property instead of a loop.
//
// Precision/recall: interpolated precision at recall r is the maximum
// precision over all operating points with recall >= r, averaged over
// r = 0, 0.01, ..., 1.00.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

struct Box {
  double x1, y1, x2, y2;
  double area() const { return (x2 - x1) * (y2 - y1); }
};

struct Det {
  int cls;
  Box box;
  double score;
};

struct Gt {
  int cls;
  Box box;
};

struct Image {
  std::vector<Gt> gts;
  std::vector<Det> dets;
};

enum class Size { kAll, kSmall, kMedium, kLarge };

inline double box_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

inline bool in_size(const Box& b, Size s) {
  const double a = b.area();
  switch (s) {
    case Size::kAll: return true;
    case Size::kSmall: return a < 32.0 * 32.0;
    case Size::kMedium: return a >= 32.0 * 32.0 && a <= 96.0 * 96.0;
    case Size::kLarge: return a > 96.0 * 96.0;
  }
  return false;
}

namespace detail {

struct Key {
  int tier;  // 2 counted GT, 1 ignored GT, 0 unmatched
  double iou;
};

inline bool key_less(const std::vector<Key>& a, const std::vector<Key>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].tier != b[i].tier) return a[i].tier < b[i].tier;
    if (a[i].iou != b[i].iou) return a[i].iou < b[i].iou;
  }
  return false;
}

struct Search {
  const std::vector<Det>* dets;
  const std::vector<Gt>* gts;
  const std::vector<bool>* ignored;
  double thr;
  std::vector<int> current;
  std::vector<bool> used;
  std::vector<int> best;
  std::vector<Key> best_key;
  bool have_best = false;

  std::vector<Key> key_of(const std::vector<int>& assign) const {
    std::vector<Key> k;
    for (std::size_t d = 0; d < assign.size(); ++d) {
      const int g = assign[d];
      if (g < 0) {
        k.push_back({0, 0.0});
      } else {
        k.push_back({(*ignored)[g] ? 1 : 2, box_iou((*dets)[d].box, (*gts)[g].box)});
      }
    }
    return k;
  }

  void run(std::size_t d) {
    if (d == dets->size()) {
      auto k = key_of(current);
      if (!have_best || key_less(best_key, k)) {
        best = current;
        best_key = std::move(k);
        have_best = true;
      }
      return;
    }
    current[d] = -1;
    run(d + 1);
    for (std::size_t g = 0; g < gts->size(); ++g) {
      if (used[g]) continue;
      if (box_iou((*dets)[d].box, (*gts)[g].box) < thr) continue;
      used[g] = true;
      current[d] = static_cast<int>(g);
      run(d + 1);
      used[g] = false;
    }
    current[d] = -1;
  }
};

}  // namespace detail

// AP of one class, or nullopt when it has no counted ground truth.
inline std::optional<double> class_ap(const std::vector<Image>& images, int cls, double thr, Size size) {
  struct Point {
    double score;
    bool tp;
  };
  std::vector<Point> points;
  int positives = 0;
  for (const auto& img : images) {
    std::vector<Gt> gts;
    std::vector<bool> ignored;
    for (const auto& g : img.gts) {
      if (g.cls != cls) continue;
      gts.push_back(g);
      ignored.push_back(!in_size(g.box, size));
      if (!ignored.back()) ++positives;
    }
    std::vector<Det> dets;
    for (const auto& d : img.dets) {
      if (d.cls == cls) dets.push_back(d);
    }
    std::stable_sort(dets.begin(), dets.end(), [](const Det& a, const Det& b) { return a.score > b.score; });

    detail::Search s{&dets, &gts, &ignored, thr, std::vector<int>(dets.size(), -1),
                     std::vector<bool>(gts.size(), false), {}, {}, false};
    s.run(0);
    for (std::size_t d = 0; d < dets.size(); ++d) {
      const int g = s.best[d];
      if (g >= 0 && ignored[g]) continue;
      if (g < 0 && !in_size(dets[d].box, size)) continue;
      points.push_back({dets[d].score, g >= 0});
    }
  }
  if (positives == 0) return std::nullopt;

  std::stable_sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.score > b.score; });
  std::vector<double> rec;
  std::vector<double> prec;
  int tp = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    tp += points[i].tp;
    rec.push_back(static_cast<double>(tp) / positives);
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  double total = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = 0.01 * r;
    double best = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (rec[i] >= level) best = std::max(best, prec[i]);
    }
    total += best;
  }
  return total / 101.0;
}

inline double mean_ap(const std::vector<Image>& images, double thr, Size size) {
  std::vector<int> classes;
  for (const auto& img : images) {
    for (const auto& g : img.gts) classes.push_back(g.cls);
  }
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  double sum = 0.0;
  int n = 0;
  for (int c : classes) {
    if (auto ap = class_ap(images, c, thr, size)) {
      sum += *ap;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

}  // namespace oracle
