#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "flowguard/flowmap.hpp"

namespace flowguard {

/// Axis-aligned box in normalized image coordinates (center and size).
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// rows x cols cells with K candidate boxes each. Entry (i, j, k) lives at
/// k * rows * cols + i * cols + j, the same layout flowmap::process emits.
class ConfidenceGrid {
 public:
  ConfidenceGrid() = default;
  ConfidenceGrid(std::size_t rows, std::size_t cols, std::size_t k);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t k() const { return k_; }
  std::size_t size() const { return confidence_.size(); }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return k * rows_ * cols_ + i * cols_ + j;
  }

  double confidence(std::size_t i, std::size_t j, std::size_t k) const {
    return confidence_[index(i, j, k)];
  }
  const Box& box(std::size_t i, std::size_t j, std::size_t k) const { return boxes_[index(i, j, k)]; }

  /// Throws ValidationError unless 0 <= confidence <= 1 and w, h >= 0.
  void set(std::size_t i, std::size_t j, std::size_t k, double confidence, const Box& box);

  std::span<const double> confidences() const { return confidence_; }

  friend bool operator==(const ConfidenceGrid&, const ConfidenceGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t k_ = 0;
  std::vector<double> confidence_;
  std::vector<Box> boxes_;
};

struct Detection {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  double confidence = 0.0;
  Box box;
  std::optional<int> label;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionMetrics {
  std::size_t total_detected = 0;
  std::size_t correctly_detected = 0;
  std::size_t falsely_detected = 0;
  std::size_t overlapped_detected = 0;
  double true_positive_rate = 0.0;

  friend bool operator==(const DetectionMetrics&, const DetectionMetrics&) = default;
};

namespace detection {

/// Entries with confidence strictly above the scalar threshold, at most one per cell
/// (the highest-confidence admitted box; lower k wins ties). Row-major cell order.
std::vector<Detection> threshold_detections(const ConfidenceGrid& grid, double threshold);

/// Per-entry thresholds; thresholds.size() must equal grid.size().
std::vector<Detection> threshold_detections(const ConfidenceGrid& grid,
                                            std::span<const double> thresholds);

double iou(const Box& a, const Box& b);

/// Greedy non-maximum suppression. Suppresses a candidate when its IoU with an
/// already kept detection exceeds iou_threshold. Output is sorted by descending
/// confidence; equal confidences order by (i, j, k).
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

/// Greedy one-to-one matching in descending confidence order.
DetectionMetrics score_against_truth(std::span<const Detection> dets, std::span<const Box> truth,
                                     double match_iou = 0.5);

/// correct / (total - overlapped), or 0 when that denominator is zero.
double true_positive_rate(const DetectionMetrics& m);

}  // namespace detection
}  // namespace flowguard
