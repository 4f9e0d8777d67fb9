#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gradsim/network.hpp"

namespace gradsim {

inline constexpr double kDefaultNormEps = 1e-12;

enum class MetricKind { BlockDiagonal, Diagonal, MaskedBlockDiagonal, ElementwiseReduced };

const char* to_string(MetricKind kind);

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Structured metric over the flat parameter layout. Never materialized as a
/// dense |theta| x |theta| array:
///   BlockDiagonal        [M]_ij = [l(i) = l(j)] theta_i theta_j (rank one per layer)
///   Diagonal             [M]_ij = [i = j] theta_i^2
///   MaskedBlockDiagonal  BlockDiagonal with the listed pairs set to zero
///   ElementwiseReduced   BlockDiagonal restricted to the keep set
/// A Diagonal metric may also carry a keep set (see metric_reduce).
class Metric {
 public:
  static Metric block_diagonal(const Parameters& params);
  static Metric diagonal(const Parameters& params);

  MetricKind kind() const { return kind_; }
  std::size_t size() const { return theta_.size(); }
  std::size_t layer_count() const { return offsets_.size() - 1; }
  std::span<const double> theta() const { return theta_; }
  std::span<const std::size_t> layer_offsets() const { return offsets_; }
  std::size_t layer_of(std::size_t i) const;

  /// Symmetric, sorted, every pair present in both orders.
  const std::vector<IndexPair>& mask() const { return mask_; }
  /// Sorted retained indices; empty means unrestricted.
  const std::vector<std::size_t>& keep_set() const { return keep_set_; }
  bool restricted() const { return !keep_set_.empty(); }
  bool keeps(std::size_t i) const { return keep_flags_.empty() || keep_flags_[i] != 0; }

  /// Explicit entry [M]_ij, for oracles and small-scale inspection.
  double entry(std::size_t i, std::size_t j) const;

 private:
  friend Metric metric_mask(const Metric& block, std::span<const IndexPair> pairs);
  friend Metric metric_reduce(const Metric& metric, std::span<const std::size_t> keep_set);

  MetricKind kind_ = MetricKind::BlockDiagonal;
  std::vector<double> theta_;
  std::vector<std::size_t> offsets_;
  std::vector<IndexPair> mask_;
  std::vector<std::size_t> keep_set_;
  std::vector<char> keep_flags_;
};

/// Zero out the given within-layer pairs of a BlockDiagonal metric. Pairs are
/// symmetrized; a cross-layer pair is rejected.
Metric metric_mask(const Metric& block, std::span<const IndexPair> pairs);

/// Keep only the rows and columns in `keep_set`. A BlockDiagonal input yields
/// ElementwiseReduced; a Diagonal input yields a restricted Diagonal.
Metric metric_reduce(const Metric& metric, std::span<const std::size_t> keep_set);

/// K_f(x, y) = f(x) f(y).
double kernel_output(double f_x, double f_y);

/// K_{f^L}(x, y) = <h^L(x), h^L(y)>.
double kernel_last_layer(std::span<const double> h_x, std::span<const double> h_y);

/// g_x^T M g_y evaluated structurally (O(|theta|) plus O(|mask|)).
double kernel_metric(std::span<const double> g_x, std::span<const double> g_y, const Metric& m);

/// Per-layer split of kernel_metric; entries sum to the kernel value.
std::vector<double> kernel_metric_per_layer(std::span<const double> g_x,
                                            std::span<const double> g_y, const Metric& m);

/// Per-layer sums of theta_i g_i over the retained indices. For BlockDiagonal
/// and ElementwiseReduced the kernel is the dot product of these vectors.
std::vector<double> metric_layer_scalars(std::span<const double> g, const Metric& m);

/// sqrt(g^T M g). Throws NumericalError if the form is below -1e-12.
double metric_norm(std::span<const double> g, const Metric& m);

/// kernel_metric divided by both metric norms; 0 when either norm is <= eps.
double kernel_normalized(std::span<const double> g_x, std::span<const double> g_y,
                         const Metric& m, double eps = kDefaultNormEps);

struct LastLayerBound {
  double omega_min = 0.0;
  double omega_max = 0.0;
};

/// min and max of theta_i^2 over the output row.
LastLayerBound last_layer_bound(const Parameters& params);

/// Flat indices of the output row.
std::vector<std::size_t> last_layer_indices(const Parameters& params);

}  // namespace gradsim
