#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gradsim/dataset.hpp"
#include "gradsim/kernels.hpp"
#include "gradsim/network.hpp"

namespace gradsim {

/// A trained network paired with labelled inputs. Outputs and last hidden
/// activations are cached; gradient features are recomputed on demand so that
/// large networks never hold n x |theta| values at once.
class LabeledSet {
 public:
  LabeledSet(Parameters params, const Dataset& data);

  std::size_t size() const { return labels_.size(); }
  const Parameters& params() const { return params_; }
  std::span<const std::int8_t> labels() const { return labels_; }
  std::int8_t label(std::size_t i) const { return labels_[i]; }
  std::size_t count(std::int8_t label) const;

  std::span<const double> input(std::size_t i) const;
  double output(std::size_t i) const { return outputs_[i]; }
  std::span<const double> last_hidden(std::size_t i) const;
  std::vector<double> gradient(std::size_t i) const;

 private:
  Parameters params_;
  std::size_t dim_ = 0;
  std::size_t width_ = 0;
  std::vector<double> inputs_;
  std::vector<std::int8_t> labels_;
  std::vector<double> outputs_;
  std::vector<double> hidden_;
};

/// Pairwise similarity over a fixed sample set. Kernels that split into a sum
/// over blocks (weight layers) report the split through accumulate_blocks.
class PairKernel {
 public:
  virtual ~PairKernel() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t block_count() const { return 1; }
  virtual double value(std::size_t a, std::size_t b) const = 0;
  /// Adds the block contributions of K(a, b) to `out` (length block_count()).
  virtual void accumulate_blocks(std::size_t a, std::size_t b, std::span<double> out) const {
    out[0] += value(a, b);
  }
  /// K(a, b) / sqrt(K(a, a) K(b, b)), 0 when either side has norm <= eps.
  virtual std::unique_ptr<PairKernel> normalized_copy(double eps = kDefaultNormEps) const;
  /// Copy with sample a additionally scaled by factor[a].
  virtual std::unique_ptr<PairKernel> rescaled(std::span<const double> factor) const;
};

/// 1 / sqrt(K(a, a)) per sample, 0 when the norm is <= eps. Applied through
/// PairKernel::rescaled this normalizes a sparse kernel by the norm of a
/// reference (typically the full block-diagonal) kernel.
std::vector<double> inverse_norms(const PairKernel& kernel, double eps = kDefaultNormEps);

/// Wraps an arbitrary callable; a single block.
class FunctionKernel final : public PairKernel {
 public:
  FunctionKernel(std::size_t n, std::function<double(std::size_t, std::size_t)> fn)
      : n_(n), fn_(std::move(fn)) {}
  std::size_t size() const override { return n_; }
  double value(std::size_t a, std::size_t b) const override { return fn_(a, b); }

 private:
  std::size_t n_;
  std::function<double(std::size_t, std::size_t)> fn_;
};

/// K(a, b) = scale_a scale_b <phi_a, phi_b>, with the coordinates of phi
/// partitioned into contiguous blocks.
class EmbeddingKernel final : public PairKernel {
 public:
  EmbeddingKernel(std::size_t n, std::size_t dim, std::vector<double> rows,
                  std::vector<std::size_t> block_offsets, std::vector<double> scale);

  std::size_t size() const override { return n_; }
  std::size_t block_count() const override { return offsets_.size() - 1; }
  double value(std::size_t a, std::size_t b) const override;
  void accumulate_blocks(std::size_t a, std::size_t b, std::span<double> out) const override;
  std::unique_ptr<PairKernel> normalized_copy(double eps = kDefaultNormEps) const override;
  std::unique_ptr<PairKernel> rescaled(std::span<const double> factor) const override;

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> rows_;
  std::vector<std::size_t> offsets_;
  std::vector<double> scale_;
};

/// Masked block-diagonal kernel: per-layer scalar products minus the masked
/// pair terms, optionally scaled per sample.
class MaskedKernel final : public PairKernel {
 public:
  MaskedKernel(const LabeledSet& set, const Metric& metric, bool normalized, double eps);

  std::size_t size() const override { return n_; }
  std::size_t block_count() const override { return layers_; }
  double value(std::size_t a, std::size_t b) const override;
  void accumulate_blocks(std::size_t a, std::size_t b, std::span<double> out) const override;
  std::unique_ptr<PairKernel> normalized_copy(double eps = kDefaultNormEps) const override;
  std::unique_ptr<PairKernel> rescaled(std::span<const double> factor) const override;

 private:
  MaskedKernel() = default;
  std::size_t n_ = 0;
  std::size_t layers_ = 0;
  std::vector<double> scalars_;  // n x layers
  std::vector<double> touched_;  // n x |touched| gradient values
  std::size_t touched_count_ = 0;
  struct Term {
    std::size_t layer, i, j;  // i, j index into touched
    double weight;            // theta_i theta_j
  };
  // g_a[i] g_b[j] + g_a[j] g_b[i] for i != j, g_a[i] g_b[i] on the diagonal.
  static double cross(const Term& t, const double* ga, const double* gb) {
    return t.i == t.j ? ga[t.i] * gb[t.i] : ga[t.i] * gb[t.j] + ga[t.j] * gb[t.i];
  }
  std::vector<Term> terms_;
  std::vector<double> scale_;
};

std::unique_ptr<PairKernel> make_output_kernel(const LabeledSet& set, bool normalized,
                                               double eps = kDefaultNormEps);
std::unique_ptr<PairKernel> make_last_layer_kernel(const LabeledSet& set, bool normalized,
                                                   double eps = kDefaultNormEps);
/// One kernel per metric, computing each sample's gradient only once.
std::vector<std::unique_ptr<PairKernel>> make_metric_kernels(const LabeledSet& set,
                                                             std::span<const Metric> metrics,
                                                             bool normalized,
                                                             double eps = kDefaultNormEps);
std::unique_ptr<PairKernel> make_metric_kernel(const LabeledSet& set, const Metric& metric,
                                               bool normalized, double eps = kDefaultNormEps);

struct GapReport {
  double mean_same = 0.0;
  double mean_diff = 0.0;
  double gamma = 0.0;
  std::vector<double> per_layer_gamma;
  std::size_t pairs_same = 0;
  std::size_t pairs_diff = 0;
};

/// Averages over all ordered same-label pairs (self pairs included) and all
/// ordered cross-label pairs. Throws UsageError if a class is empty.
GapReport gap_estimate(const PairKernel& kernel, std::span<const std::int8_t> labels);

/// Class means of (optionally metric-normalized) gradient features. The
/// finite-sample gap decomposes entrywise as
///   psi_ij = M_ij (w+ a_i a_j + w- b_i b_j - (a_i b_j + b_i a_j) / 2),
/// a = mean over class +1, b = mean over class -1, w+- = n+-^2 / (n+^2 + n-^2),
/// and sum_ij psi_ij equals the gap of the corresponding kernel. Samples with
/// metric norm <= eps count as zero vectors (their similarities are 0).
class PsiSummary {
 public:
  static PsiSummary from_means(Metric metric, std::vector<double> mu_plus,
                               std::vector<double> mu_minus, std::size_t count_plus,
                               std::size_t count_minus, bool normalized);

  const Metric& metric() const { return metric_; }
  std::span<const double> mu_plus() const { return mu_plus_; }
  std::span<const double> mu_minus() const { return mu_minus_; }
  std::size_t count_plus() const { return count_plus_; }
  std::size_t count_minus() const { return count_minus_; }
  std::size_t skipped_plus() const { return skipped_plus_; }
  std::size_t skipped_minus() const { return skipped_minus_; }
  bool normalized() const { return normalized_; }
  double weight_plus() const;
  double weight_minus() const { return 1.0 - weight_plus(); }

  double entry(std::size_t i, std::size_t j) const;
  /// Sum of the entries inside each layer block.
  std::vector<double> layer_sums() const;
  double gap() const;

 private:
  friend PsiSummary psi_accumulate(const LabeledSet&, const Metric&, bool, double);
  double pair_factor(std::size_t i, std::size_t j) const;

  Metric metric_;
  std::vector<double> mu_plus_;
  std::vector<double> mu_minus_;
  std::size_t count_plus_ = 0;
  std::size_t count_minus_ = 0;
  std::size_t skipped_plus_ = 0;
  std::size_t skipped_minus_ = 0;
  bool normalized_ = true;
};

/// Throws UsageError if a class is empty or every sample of a class has zero norm.
PsiSummary psi_accumulate(const LabeledSet& set, const Metric& metric, bool normalize = true,
                          double eps = kDefaultNormEps);

/// imp_ij = max(0, psi_ij) and imp_i = sum over same-layer j of imp_ij.
class ImportanceReport {
 public:
  explicit ImportanceReport(PsiSummary summary, std::vector<double> per_parameter);

  const PsiSummary& summary() const { return summary_; }
  double pair(std::size_t i, std::size_t j) const;
  std::span<const double> per_parameter() const { return per_parameter_; }
  std::size_t layer_count() const { return summary_.metric().layer_count(); }
  /// Flat indices of layer k ordered by decreasing imp_i, ties by lower index.
  std::vector<std::size_t> ranking(std::size_t layer) const;

 private:
  PsiSummary summary_;
  std::vector<double> per_parameter_;
};

/// Block-type metrics use an O(|theta_k| log |theta_k|) angular sweep: each
/// psi row is a linear functional of 2-d points, so the positive part is a
/// half-plane sum. Other metric kinds fall back to explicit row sums.
ImportanceReport importance(const PsiSummary& summary);

/// Row sums of max(0, entry) for an explicit symmetric n x n block (row-major).
std::vector<double> positive_row_sums(std::span<const double> block, std::size_t n);

/// Top ceil(fraction * size) indices by imp_i, per layer or globally; ties go
/// to the lower flat index. Result is sorted.
std::vector<std::size_t> select_keep_set(const ImportanceReport& report, double keep_fraction,
                                         bool per_layer = true);

/// Within-layer pairs with imp_ij <= threshold, both orders, sorted. Quadratic
/// in layer size; refuses more than kMaxPairwiseEntries candidate pairs.
std::vector<IndexPair> select_mask(const PsiSummary& summary, double threshold);

/// Within-layer pairs with psi_ij < 0 (both orders, sorted).
std::vector<IndexPair> select_negative_pairs(const PsiSummary& summary);

inline constexpr std::size_t kMaxPairwiseEntries = 50'000'000;

}  // namespace gradsim
