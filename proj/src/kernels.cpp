#include "gradsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gradsim/errors.hpp"

namespace gradsim {

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::BlockDiagonal: return "block_diagonal";
    case MetricKind::Diagonal: return "diagonal";
    case MetricKind::MaskedBlockDiagonal: return "masked_block_diagonal";
    case MetricKind::ElementwiseReduced: return "elementwise_reduced";
  }
  return "unknown";
}

namespace {

void check_layout(std::span<const double> g, const Metric& m) {
  if (g.size() != m.size()) {
    throw std::invalid_argument("gradient feature length " + std::to_string(g.size()) +
                                " does not match metric size " + std::to_string(m.size()));
  }
}

}  // namespace

Metric Metric::block_diagonal(const Parameters& params) {
  Metric m;
  m.kind_ = MetricKind::BlockDiagonal;
  m.theta_.assign(params.flat().begin(), params.flat().end());
  m.offsets_.assign(params.layer_offsets().begin(), params.layer_offsets().end());
  return m;
}

Metric Metric::diagonal(const Parameters& params) {
  Metric m = block_diagonal(params);
  m.kind_ = MetricKind::Diagonal;
  return m;
}

std::size_t Metric::layer_of(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("parameter index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

double Metric::entry(std::size_t i, std::size_t j) const {
  if (!keeps(i) || !keeps(j)) return 0.0;
  switch (kind_) {
    case MetricKind::Diagonal:
      return i == j ? theta_[i] * theta_[i] : 0.0;
    case MetricKind::MaskedBlockDiagonal:
      if (std::binary_search(mask_.begin(), mask_.end(), IndexPair{i, j})) return 0.0;
      [[fallthrough]];
    case MetricKind::BlockDiagonal:
    case MetricKind::ElementwiseReduced:
      return layer_of(i) == layer_of(j) ? theta_[i] * theta_[j] : 0.0;
  }
  return 0.0;
}

Metric metric_mask(const Metric& block, std::span<const IndexPair> pairs) {
  if (block.kind() != MetricKind::BlockDiagonal) {
    throw std::invalid_argument("metric_mask expects a BlockDiagonal metric");
  }
  Metric m = block;
  m.kind_ = MetricKind::MaskedBlockDiagonal;
  m.mask_.clear();
  m.mask_.reserve(2 * pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i >= m.size() || j >= m.size()) throw std::out_of_range("mask index out of range");
    if (m.layer_of(i) != m.layer_of(j)) {
      throw std::invalid_argument("mask pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") crosses layers");
    }
    m.mask_.emplace_back(i, j);
    m.mask_.emplace_back(j, i);
  }
  std::sort(m.mask_.begin(), m.mask_.end());
  m.mask_.erase(std::unique(m.mask_.begin(), m.mask_.end()), m.mask_.end());
  return m;
}

Metric metric_reduce(const Metric& metric, std::span<const std::size_t> keep_set) {
  if (metric.kind() != MetricKind::BlockDiagonal && metric.kind() != MetricKind::Diagonal) {
    throw std::invalid_argument("metric_reduce expects a BlockDiagonal or Diagonal metric");
  }
  if (keep_set.empty()) throw std::invalid_argument("keep set is empty");
  Metric m = metric;
  if (m.kind_ == MetricKind::BlockDiagonal) m.kind_ = MetricKind::ElementwiseReduced;
  m.keep_flags_.assign(m.size(), 0);
  for (std::size_t i : keep_set) {
    if (i >= m.size()) throw std::out_of_range("keep index out of range");
    m.keep_flags_[i] = 1;
  }
  m.keep_set_.clear();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.keep_flags_[i]) m.keep_set_.push_back(i);
  }
  return m;
}

double kernel_output(double f_x, double f_y) { return f_x * f_y; }

double kernel_last_layer(std::span<const double> h_x, std::span<const double> h_y) {
  if (h_x.size() != h_y.size()) throw std::invalid_argument("activation length mismatch");
  return std::inner_product(h_x.begin(), h_x.end(), h_y.begin(), 0.0);
}

std::vector<double> metric_layer_scalars(std::span<const double> g, const Metric& m) {
  check_layout(g, m);
  const auto theta = m.theta();
  const auto offsets = m.layer_offsets();
  std::vector<double> s(m.layer_count(), 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double acc = 0.0;
    if (m.restricted()) {
      for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
        if (m.keeps(i)) acc += theta[i] * g[i];
      }
    } else {
      for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) acc += theta[i] * g[i];
    }
    s[k] = acc;
  }
  return s;
}

std::vector<double> kernel_metric_per_layer(std::span<const double> g_x,
                                            std::span<const double> g_y, const Metric& m) {
  check_layout(g_x, m);
  check_layout(g_y, m);
  const auto theta = m.theta();
  const auto offsets = m.layer_offsets();
  std::vector<double> out(m.layer_count(), 0.0);

  if (m.kind() == MetricKind::Diagonal) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      double acc = 0.0;
      for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
        if (m.keeps(i)) acc += theta[i] * theta[i] * (g_x[i] * g_y[i]);
      }
      out[k] = acc;
    }
    return out;
  }

  const auto sx = metric_layer_scalars(g_x, m);
  const auto sy = metric_layer_scalars(g_y, m);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sx[k] * sy[k];

  // The mask holds both orders; each unordered pair is handled once in a form
  // that is symmetric in (x, y) bit for bit.
  for (const auto& [i, j] : m.mask()) {
    if (i > j) continue;
    const double cross = i == j ? g_x[i] * g_y[i] : g_x[i] * g_y[j] + g_x[j] * g_y[i];
    out[m.layer_of(i)] -= theta[i] * theta[j] * cross;
  }
  return out;
}

double kernel_metric(std::span<const double> g_x, std::span<const double> g_y, const Metric& m) {
  const auto parts = kernel_metric_per_layer(g_x, g_y, m);
  return std::accumulate(parts.begin(), parts.end(), 0.0);
}

double metric_norm(std::span<const double> g, const Metric& m) {
  const double q = kernel_metric(g, g, m);
  if (q < -1e-12) {
    throw NumericalError("metric quadratic form is negative (" + std::to_string(q) +
                         "); the metric is not positive semi-definite");
  }
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

double kernel_normalized(std::span<const double> g_x, std::span<const double> g_y,
                         const Metric& m, double eps) {
  const double nx = metric_norm(g_x, m);
  const double ny = metric_norm(g_y, m);
  if (nx <= eps || ny <= eps) return 0.0;
  return kernel_metric(g_x, g_y, m) / (nx * ny);
}

LastLayerBound last_layer_bound(const Parameters& params) {
  const auto out = params.output_weights();
  LastLayerBound b{out[0] * out[0], out[0] * out[0]};
  for (double w : out) {
    b.omega_min = std::min(b.omega_min, w * w);
    b.omega_max = std::max(b.omega_max, w * w);
  }
  return b;
}

std::vector<std::size_t> last_layer_indices(const Parameters& params) {
  const std::size_t k = params.layer_count() - 1;
  std::vector<std::size_t> idx(params.layer_size(k));
  std::iota(idx.begin(), idx.end(), params.layer_offset(k));
  return idx;
}

}  // namespace gradsim
