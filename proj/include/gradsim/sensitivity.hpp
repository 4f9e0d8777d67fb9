#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gradsim/network.hpp"

namespace gradsim {

/// The d x |theta| matrix S(A) with g(x) = S(A)^T x for every x whose
/// activation pattern is A.
///
/// Freezing the ReLU masks makes every backward multiplier a constant and every
/// layer input a fixed linear map of x, so the column of a weight W_k[r][c] is
/// delta_k[r] * J_k[c, :], where delta_k is the masked backpropagated output
/// weight and J_k the masked product of the earlier weight matrices. S is kept
/// in that factored form: one block per weight layer holding the row scales and
/// the basis rows. A dense d x m matrix is the special case of one block with a
/// single unit row scale.
class SensitivityMatrix {
 public:
  static SensitivityMatrix from_pattern(const Parameters& params, const ActivationPattern& pattern);
  /// `columns` is m x d row-major: row i is column i of S.
  static SensitivityMatrix from_columns(std::size_t input_dim, std::size_t column_count,
                                        std::vector<double> columns);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t column_count() const { return column_count_; }
  const ActivationPattern& pattern() const { return pattern_; }

  std::vector<double> column(std::size_t i) const;
  /// S^T x, i.e. the gradient feature of x when x lies in the pattern's region.
  std::vector<double> apply(std::span<const double> x) const;
  /// d x m row-major copy. Only sensible for small networks.
  std::vector<double> dense() const;

  /// Tr[S* S*^T] over the columns flagged in `keep` (all columns when empty).
  double trace(std::span<const char> keep = {}) const;

  /// Quadratic form x -> ||S*^T x||^2 restricted to the kept columns,
  /// precomputed so each evaluation costs one pass over the basis rows in use.
  class RestrictedNorm {
   public:
    double operator()(std::span<const double> x) const;
    double trace() const { return trace_; }

   private:
    friend class SensitivityMatrix;
    std::size_t input_dim_ = 0;
    std::vector<const double*> rows_;
    std::vector<double> weights_;
    std::vector<std::size_t> coords_;  // identity-basis rows: u = x[coord]
    std::vector<double> coord_weights_;
    double trace_ = 0.0;
  };

  /// The returned object references this matrix; keep it alive meanwhile.
  RestrictedNorm restricted_norm(std::span<const char> keep = {}) const;

 private:
  struct Block {
    std::size_t offset = 0;
    std::vector<double> row_scale;
    std::vector<double> basis;  // basis_rows x input_dim; empty when identity
    std::size_t basis_rows = 0;
    bool identity = false;
    double basis_entry(std::size_t c, std::size_t p, std::size_t dim) const {
      return identity ? (c == p ? 1.0 : 0.0) : basis[c * dim + p];
    }
    std::size_t size() const { return row_scale.size() * basis_rows; }
  };

  std::vector<double> basis_weights(const Block& block, std::span<const char> keep) const;

  std::size_t input_dim_ = 0;
  std::size_t column_count_ = 0;
  std::vector<Block> blocks_;
  ActivationPattern pattern_;
};

}  // namespace gradsim
