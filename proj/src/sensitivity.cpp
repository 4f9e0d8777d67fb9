#include "gradsim/sensitivity.hpp"

#include <stdexcept>
#include <string>

namespace gradsim {

SensitivityMatrix SensitivityMatrix::from_pattern(const Parameters& params,
                                                  const ActivationPattern& pattern) {
  const auto& cfg = params.config();
  if (pattern.signs.size() != cfg.neuron_count()) {
    throw std::invalid_argument("activation pattern has " + std::to_string(pattern.signs.size()) +
                                " signs, network has " + std::to_string(cfg.neuron_count()) +
                                " neurons");
  }
  const std::size_t d = cfg.input_dim;
  const std::size_t hidden = cfg.hidden_layer_count();

  std::vector<std::vector<double>> masks(hidden);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < hidden; ++k) {
    masks[k].resize(cfg.hidden_sizes[k]);
    for (double& m : masks[k]) m = pattern.signs[cursor++] > 0 ? 1.0 : 0.0;
  }

  // deltas[k] = d f / d z^k with frozen masks.
  std::vector<std::vector<double>> deltas(hidden);
  {
    const auto out = params.output_weights();
    deltas[hidden - 1].resize(out.size());
    for (std::size_t r = 0; r < out.size(); ++r) deltas[hidden - 1][r] = out[r] * masks[hidden - 1][r];
    for (std::size_t k = hidden - 1; k > 0; --k) {
      const auto w = params.layer(k);
      const std::size_t rows = params.rows(k);
      const std::size_t cols = params.cols(k);
      auto& next = deltas[k - 1];
      next.assign(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) next[c] += w[r * cols + c] * deltas[k][r];
      }
      for (std::size_t c = 0; c < cols; ++c) next[c] *= masks[k - 1][c];
    }
  }

  SensitivityMatrix s;
  s.input_dim_ = d;
  s.column_count_ = params.size();
  s.pattern_ = pattern;

  // basis = J_k, the frozen linear map from x to the input of weight layer k.
  // J_0 is the identity and is never materialized.
  std::vector<double> basis;
  std::size_t basis_rows = d;
  bool identity = true;

  for (std::size_t k = 0; k <= hidden; ++k) {
    Block block;
    block.offset = params.layer_offset(k);
    block.row_scale = k < hidden ? deltas[k] : std::vector<double>{1.0};
    block.basis = basis;
    block.basis_rows = basis_rows;
    block.identity = identity;

    if (k < hidden) {
      const auto w = params.layer(k);
      const std::size_t rows = params.rows(k);
      const std::size_t cols = params.cols(k);
      std::vector<double> next(rows * d, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        if (masks[k][r] == 0.0) continue;
        double* dst = next.data() + r * d;
        if (identity) {
          for (std::size_t c = 0; c < cols; ++c) dst[c] = w[r * cols + c];
          continue;
        }
        for (std::size_t c = 0; c < cols; ++c) {
          const double wv = w[r * cols + c];
          if (wv == 0.0) continue;
          const double* src = basis.data() + c * d;
          for (std::size_t p = 0; p < d; ++p) dst[p] += wv * src[p];
        }
      }
      basis = std::move(next);
      basis_rows = rows;
      identity = false;
    }
    s.blocks_.push_back(std::move(block));
  }
  return s;
}

SensitivityMatrix SensitivityMatrix::from_columns(std::size_t input_dim, std::size_t column_count,
                                                  std::vector<double> columns) {
  if (input_dim == 0) throw std::invalid_argument("input dimension must be positive");
  if (columns.size() != input_dim * column_count) {
    throw std::invalid_argument("column data does not match the stated shape");
  }
  SensitivityMatrix s;
  s.input_dim_ = input_dim;
  s.column_count_ = column_count;
  Block block;
  block.row_scale = {1.0};
  block.basis = std::move(columns);
  block.basis_rows = column_count;
  s.blocks_.push_back(std::move(block));
  return s;
}

std::vector<double> SensitivityMatrix::column(std::size_t i) const {
  if (i >= column_count_) throw std::out_of_range("column index out of range");
  for (const auto& b : blocks_) {
    if (i < b.offset + b.size()) {
      const std::size_t local = i - b.offset;
      const double scale = b.row_scale[local / b.basis_rows];
      const std::size_t c = local % b.basis_rows;
      std::vector<double> col(input_dim_);
      for (std::size_t p = 0; p < input_dim_; ++p) col[p] = scale * b.basis_entry(c, p, input_dim_);
      return col;
    }
  }
  throw std::logic_error("column not covered by any block");
}

std::vector<double> SensitivityMatrix::apply(std::span<const double> x) const {
  if (x.size() != input_dim_) throw std::invalid_argument("input dimension mismatch");
  std::vector<double> g(column_count_, 0.0);
  for (const auto& b : blocks_) {
    std::vector<double> u(x.begin(), x.end());
    if (!b.identity) {
      u.assign(b.basis_rows, 0.0);
      for (std::size_t c = 0; c < b.basis_rows; ++c) {
        const double* row = b.basis.data() + c * input_dim_;
        double acc = 0.0;
        for (std::size_t p = 0; p < input_dim_; ++p) acc += row[p] * x[p];
        u[c] = acc;
      }
    }
    for (std::size_t r = 0; r < b.row_scale.size(); ++r) {
      double* dst = g.data() + b.offset + r * b.basis_rows;
      for (std::size_t c = 0; c < b.basis_rows; ++c) dst[c] = b.row_scale[r] * u[c];
    }
  }
  return g;
}

std::vector<double> SensitivityMatrix::dense() const {
  std::vector<double> out(input_dim_ * column_count_, 0.0);
  for (std::size_t i = 0; i < column_count_; ++i) {
    const auto col = column(i);
    for (std::size_t p = 0; p < input_dim_; ++p) out[p * column_count_ + i] = col[p];
  }
  return out;
}

std::vector<double> SensitivityMatrix::basis_weights(const Block& b,
                                                     std::span<const char> keep) const {
  std::vector<double> w(b.basis_rows, 0.0);
  for (std::size_t r = 0; r < b.row_scale.size(); ++r) {
    const double s2 = b.row_scale[r] * b.row_scale[r];
    for (std::size_t c = 0; c < b.basis_rows; ++c) {
      if (keep.empty() || keep[b.offset + r * b.basis_rows + c]) w[c] += s2;
    }
  }
  return w;
}

double SensitivityMatrix::trace(std::span<const char> keep) const {
  return restricted_norm(keep).trace();
}

SensitivityMatrix::RestrictedNorm SensitivityMatrix::restricted_norm(
    std::span<const char> keep) const {
  if (!keep.empty() && keep.size() != column_count_) {
    throw std::invalid_argument("keep mask length does not match the column count");
  }
  RestrictedNorm norm;
  norm.input_dim_ = input_dim_;
  for (const auto& b : blocks_) {
    const auto w = basis_weights(b, keep);
    for (std::size_t c = 0; c < b.basis_rows; ++c) {
      if (w[c] == 0.0) continue;
      if (b.identity) {
        norm.coords_.push_back(c);
        norm.coord_weights_.push_back(w[c]);
        norm.trace_ += w[c];
        continue;
      }
      const double* row = b.basis.data() + c * input_dim_;
      double sq = 0.0;
      for (std::size_t p = 0; p < input_dim_; ++p) sq += row[p] * row[p];
      if (sq == 0.0) continue;
      norm.rows_.push_back(row);
      norm.weights_.push_back(w[c]);
      norm.trace_ += w[c] * sq;
    }
  }
  return norm;
}

double SensitivityMatrix::RestrictedNorm::operator()(std::span<const double> x) const {
  if (x.size() != input_dim_) throw std::invalid_argument("input dimension mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    total += coord_weights_[k] * x[coords_[k]] * x[coords_[k]];
  }
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const double* row = rows_[k];
    double u = 0.0;
    for (std::size_t p = 0; p < input_dim_; ++p) u += row[p] * x[p];
    total += weights_[k] * u * u;
  }
  return total;
}

}  // namespace gradsim
