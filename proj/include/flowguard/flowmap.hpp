#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowguard {

/// Dense M x N matrix of per-pixel flow magnitudes, stored row-major.
class FlowMap {
 public:
  FlowMap() = default;
  /// Constant-valued map. Throws DimensionError when either dimension is zero.
  FlowMap(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of row-major values; values.size() must equal rows * cols.
  FlowMap(std::size_t rows, std::size_t cols, std::vector<double> values);
  /// Builds from nested rows, e.g. {{1, 3}, {5, 7}}. Rows must be equally long.
  static FlowMap from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double min() const;
  double max() const;
  /// Median over all entries; even counts average the two middle values.
  double median() const;

  friend bool operator==(const FlowMap&, const FlowMap&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Per-cell confidence thresholds, length rows * cols * K. Layout is K
/// consecutive copies of the row-major flattened grid: index k*rows*cols + i*cols + j.
using ThresholdVector = std::vector<double>;

namespace flowmap {

/// Throws DimensionError for an empty map and ValidationError for non-finite values.
void validate(const FlowMap& map);

/// Subtracts the global minimum so the smallest entry becomes 0.
FlowMap shift_min(const FlowMap& map);

/// Full min-max scaling to [0,1]; a constant map maps to all zeros.
/// Experimental alternative to shift_min, not used by process() unless requested.
FlowMap minmax_normalize(const FlowMap& map);

/// |e - median(map)| elementwise.
FlowMap center_abs_median(const FlowMap& map);

/// Logistic sigmoid elementwise.
FlowMap squash(const FlowMap& map);

struct ResizeOptions {
  double kernel_a = -0.5;
  // Bicubic lobes overshoot; clamping keeps outputs inside the source value range.
  bool clamp_to_source_range = true;
};

/// Separable bicubic (Keys) resampling with clamp-to-edge borders.
/// Sample positions use corner alignment: output index d maps to source
/// coordinate d * (src - 1) / (dst - 1), so equal shapes give the identity.
FlowMap resize_bicubic(const FlowMap& map, std::size_t target_rows, std::size_t target_cols,
                       const ResizeOptions& options = {});

/// c_th / (1 + exp(2 f)) over the row-major flattening, replicated K times.
ThresholdVector vectorize_thresholds(const FlowMap& squashed, std::size_t k, double c_th);

struct ProcessOptions {
  bool full_minmax = false;
  ResizeOptions resize;
};

/// shift_min -> center_abs_median -> squash -> resize to the grid -> vectorize.
ThresholdVector process(const FlowMap& map, std::size_t grid_rows, std::size_t grid_cols,
                        std::size_t k, double c_th, const ProcessOptions& options = {});

/// Keys cubic convolution kernel.
double keys_kernel(double x, double a = -0.5);

}  // namespace flowmap
}  // namespace flowguard
