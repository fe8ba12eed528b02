#include "flowguard/detection.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "flowguard/error.hpp"

namespace flowguard {

ConfidenceGrid::ConfidenceGrid(std::size_t rows, std::size_t cols, std::size_t k)
    : rows_(rows), cols_(cols), k_(k), confidence_(rows * cols * k, 0.0), boxes_(rows * cols * k) {
  if (rows == 0 || cols == 0 || k == 0) throw DimensionError("confidence grid dimensions must be positive");
}

void ConfidenceGrid::set(std::size_t i, std::size_t j, std::size_t k, double confidence,
                         const Box& box) {
  if (i >= rows_ || j >= cols_ || k >= k_) throw DimensionError("grid index out of range");
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw ValidationError("confidence outside [0, 1]");
  if (!(box.w >= 0.0 && box.h >= 0.0)) throw ValidationError("box size must be non-negative");
  confidence_[index(i, j, k)] = confidence;
  boxes_[index(i, j, k)] = box;
}

namespace detection {

namespace {

template <typename ThresholdAt>
std::vector<Detection> admit(const ConfidenceGrid& grid, ThresholdAt&& threshold_at) {
  std::vector<Detection> out;
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      std::optional<std::size_t> best;
      for (std::size_t k = 0; k < grid.k(); ++k) {
        const double c = grid.confidence(i, j, k);
        if (!(c > threshold_at(grid.index(i, j, k)))) continue;
        if (!best || c > grid.confidence(i, j, *best)) best = k;
      }
      if (best) {
        out.push_back(Detection{i, j, *best, grid.confidence(i, j, *best), grid.box(i, j, *best), {}});
      }
    }
  }
  return out;
}

auto index_key(const Detection& d) { return std::tie(d.i, d.j, d.k); }

bool higher_priority(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return index_key(a) < index_key(b);
}

}  // namespace

std::vector<Detection> threshold_detections(const ConfidenceGrid& grid, double threshold) {
  return admit(grid, [threshold](std::size_t) { return threshold; });
}

std::vector<Detection> threshold_detections(const ConfidenceGrid& grid,
                                            std::span<const double> thresholds) {
  if (thresholds.size() != grid.size()) {
    throw DimensionError("threshold vector length " + std::to_string(thresholds.size()) +
                          " does not match grid size " + std::to_string(grid.size()));
  }
  return admit(grid, [thresholds](std::size_t n) { return thresholds[n]; });
}

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2);
  const double iy = std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2);
  const double inter = std::max(0.0, ix) * std::max(0.0, iy);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::sort(dets.begin(), dets.end(), higher_priority);
  std::vector<Detection> kept;
  for (auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

DetectionMetrics score_against_truth(std::span<const Detection> dets, std::span<const Box> truth,
                                     double match_iou) {
  std::vector<const Detection*> order;
  order.reserve(dets.size());
  for (const auto& d : dets) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(),
                   [](const Detection* a, const Detection* b) { return higher_priority(*a, *b); });

  std::vector<bool> matched(truth.size(), false);
  DetectionMetrics m;
  m.total_detected = dets.size();
  for (const Detection* d : order) {
    std::optional<std::size_t> fresh;
    double fresh_iou = 0.0;
    bool hits_matched = false;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double v = iou(d->box, truth[t]);
      if (v < match_iou) continue;
      if (matched[t]) {
        hits_matched = true;
      } else if (!fresh || v > fresh_iou) {
        fresh = t;
        fresh_iou = v;
      }
    }
    if (fresh) {
      matched[*fresh] = true;
      ++m.correctly_detected;
    } else if (hits_matched) {
      ++m.overlapped_detected;
    } else {
      ++m.falsely_detected;
    }
  }
  m.true_positive_rate = true_positive_rate(m);
  return m;
}

double true_positive_rate(const DetectionMetrics& m) {
  const std::size_t denom = m.total_detected - m.overlapped_detected;
  if (denom == 0) return 0.0;
  return static_cast<double>(m.correctly_detected) / static_cast<double>(denom);
}

}  // namespace detection
}  // namespace flowguard
