#include "flowguard/flowmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "flowguard/error.hpp"

namespace flowguard {

FlowMap::FlowMap(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw DimensionError("flow map dimensions must be positive");
}

FlowMap::FlowMap(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) throw DimensionError("flow map dimensions must be positive");
  if (values_.size() != rows * cols) {
    throw DimensionError("flow map expects " + std::to_string(rows * cols) + " values, got " +
                         std::to_string(values_.size()));
  }
}

FlowMap FlowMap::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw DimensionError("flow map is empty");
  const std::size_t cols = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw DimensionError("ragged flow map rows");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return FlowMap(rows.size(), cols, std::move(flat));
}

double FlowMap::min() const { return *std::min_element(values_.begin(), values_.end()); }

double FlowMap::max() const { return *std::max_element(values_.begin(), values_.end()); }

namespace {

// Consumes its argument as scratch space.
double median_in_place(std::vector<double>& scratch) {
  const std::size_t n = scratch.size();
  const auto upper = scratch.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(scratch.begin(), upper, scratch.end());
  if (n % 2 == 1) return *upper;
  // Lower middle is the largest element of the left partition.
  const double lower = *std::max_element(scratch.begin(), upper);
  return 0.5 * (lower + *upper);
}

}  // namespace

double FlowMap::median() const {
  if (values_.empty()) throw DimensionError("median of empty flow map");
  std::vector<double> scratch(values_);
  return median_in_place(scratch);
}

namespace flowmap {

namespace {

template <typename F>
FlowMap map_values(const FlowMap& map, F&& f) {
  std::vector<double> out(map.size());
  std::transform(map.values().begin(), map.values().end(), out.begin(), f);
  return FlowMap(map.rows(), map.cols(), std::move(out));
}

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

// Source taps and weights for each output position along one axis.
std::vector<Taps> axis_taps(std::size_t src, std::size_t dst, double a) {
  std::vector<Taps> taps(dst);
  const auto last = static_cast<std::ptrdiff_t>(src) - 1;
  for (std::size_t d = 0; d < dst; ++d) {
    double pos;
    if (src == dst) {
      pos = static_cast<double>(d);
    } else if (dst == 1) {
      pos = 0.5 * static_cast<double>(src - 1);
    } else {
      pos = static_cast<double>(d) * static_cast<double>(src - 1) / static_cast<double>(dst - 1);
    }
    const double base = std::floor(pos);
    const double frac = pos - base;
    const auto b = static_cast<std::ptrdiff_t>(base);
    for (int t = 0; t < 4; ++t) {
      const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(b - 1 + t, 0, last);
      taps[d].index[t] = static_cast<std::size_t>(idx);
      taps[d].weight[t] = keys_kernel(frac - static_cast<double>(t - 1), a);
    }
  }
  return taps;
}

}  // namespace

void validate(const FlowMap& map) {
  if (map.empty()) throw DimensionError("flow map is empty");
  for (double v : map.values()) {
    if (!std::isfinite(v)) throw ValidationError("flow map contains a non-finite value");
  }
}

FlowMap shift_min(const FlowMap& map) {
  validate(map);
  const double lo = map.min();
  return map_values(map, [lo](double e) { return e - lo; });
}

FlowMap minmax_normalize(const FlowMap& map) {
  validate(map);
  const double lo = map.min();
  const double range = map.max() - lo;
  if (range == 0.0) return FlowMap(map.rows(), map.cols(), 0.0);
  return map_values(map, [lo, range](double e) { return (e - lo) / range; });
}

FlowMap center_abs_median(const FlowMap& map) {
  validate(map);
  const double med = map.median();
  return map_values(map, [med](double e) { return std::abs(e - med); });
}

FlowMap squash(const FlowMap& map) {
  validate(map);
  return map_values(map, [](double e) { return 1.0 / (1.0 + std::exp(-e)); });
}

double keys_kernel(double x, double a) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

FlowMap resize_bicubic(const FlowMap& map, std::size_t target_rows, std::size_t target_cols,
                       const ResizeOptions& options) {
  if (target_rows == 0 || target_cols == 0) {
    throw DimensionError("resize target dimensions must be positive");
  }
  validate(map);
  if (target_rows == map.rows() && target_cols == map.cols()) return map;

  const auto col_taps = axis_taps(map.cols(), target_cols, options.kernel_a);
  const auto row_taps = axis_taps(map.rows(), target_rows, options.kernel_a);

  // Horizontal pass: rows() x target_cols.
  std::vector<double> horizontal(map.rows() * target_cols);
  for (std::size_t i = 0; i < map.rows(); ++i) {
    for (std::size_t j = 0; j < target_cols; ++j) {
      const Taps& tp = col_taps[j];
      double acc = 0.0;
      for (int t = 0; t < 4; ++t) acc += tp.weight[t] * map(i, tp.index[t]);
      horizontal[i * target_cols + j] = acc;
    }
  }

  std::vector<double> out(target_rows * target_cols);
  for (std::size_t i = 0; i < target_rows; ++i) {
    const Taps& tp = row_taps[i];
    for (std::size_t j = 0; j < target_cols; ++j) {
      double acc = 0.0;
      for (int t = 0; t < 4; ++t) acc += tp.weight[t] * horizontal[tp.index[t] * target_cols + j];
      out[i * target_cols + j] = acc;
    }
  }

  if (options.clamp_to_source_range) {
    const double lo = map.min();
    const double hi = map.max();
    for (double& v : out) v = std::clamp(v, lo, hi);
  }
  return FlowMap(target_rows, target_cols, std::move(out));
}

ThresholdVector vectorize_thresholds(const FlowMap& squashed, std::size_t k, double c_th) {
  validate(squashed);
  if (!(c_th > 0.0 && c_th <= 1.0)) throw ValidationError("c_th must lie in (0, 1]");
  if (k == 0) throw DimensionError("K must be at least 1");

  const std::size_t cells = squashed.size();
  ThresholdVector out(cells * k);
  for (std::size_t n = 0; n < cells; ++n) {
    out[n] = c_th / (1.0 + std::exp(2.0 * squashed.values()[n]));
  }
  for (std::size_t block = 1; block < k; ++block) {
    std::copy_n(out.begin(), cells, out.begin() + static_cast<std::ptrdiff_t>(block * cells));
  }
  return out;
}

ThresholdVector process(const FlowMap& map, std::size_t grid_rows, std::size_t grid_cols,
                        std::size_t k, double c_th, const ProcessOptions& options) {
  if (!(c_th > 0.0 && c_th <= 1.0)) throw ValidationError("c_th must lie in (0, 1]");
  if (k == 0) throw DimensionError("K must be at least 1");
  if (options.full_minmax) {
    const FlowMap squashed = squash(center_abs_median(minmax_normalize(map)));
    return vectorize_thresholds(resize_bicubic(squashed, grid_rows, grid_cols, options.resize), k, c_th);
  }
  // Same arithmetic as squash(center_abs_median(shift_min(map))) with two buffers
  // instead of one per stage; large maps are memory bound.
  validate(map);
  const double lo = map.min();
  std::vector<double> work(map.size());
  std::transform(map.values().begin(), map.values().end(), work.begin(), [lo](double e) { return e - lo; });
  std::vector<double> scratch(work);
  const double med = median_in_place(scratch);
  scratch = {};
  for (double& e : work) e = 1.0 / (1.0 + std::exp(-std::abs(e - med)));
  const FlowMap squashed(map.rows(), map.cols(), std::move(work));
  return vectorize_thresholds(resize_bicubic(squashed, grid_rows, grid_cols, options.resize), k, c_th);
}

}  // namespace flowmap
}  // namespace flowguard
