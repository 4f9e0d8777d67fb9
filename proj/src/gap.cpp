#include "gradsim/gap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "gradsim/errors.hpp"

namespace gradsim {

// ---------------------------------------------------------------------------
// LabeledSet

LabeledSet::LabeledSet(Parameters params, const Dataset& data) : params_(std::move(params)) {
  data.validate();
  if (data.dim != params_.config().input_dim) {
    throw UsageError("dataset dimension " + std::to_string(data.dim) +
                     " does not match network input dimension " +
                     std::to_string(params_.config().input_dim));
  }
  dim_ = data.dim;
  width_ = params_.config().hidden_sizes.back();
  inputs_ = data.inputs;
  labels_ = data.labels;
  outputs_.reserve(size());
  hidden_.reserve(size() * width_);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto trace = forward(params_, input(i));
    outputs_.push_back(trace.output);
    hidden_.insert(hidden_.end(), trace.last_hidden().begin(), trace.last_hidden().end());
  }
}

std::size_t LabeledSet::count(std::int8_t label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::span<const double> LabeledSet::input(std::size_t i) const {
  return std::span<const double>(inputs_).subspan(i * dim_, dim_);
}

std::span<const double> LabeledSet::last_hidden(std::size_t i) const {
  return std::span<const double>(hidden_).subspan(i * width_, width_);
}

std::vector<double> LabeledSet::gradient(std::size_t i) const {
  return param_gradient(params_, input(i));
}

// ---------------------------------------------------------------------------
// Pair kernels

namespace {

double inverse_norm(double squared_norm, double eps) {
  if (squared_norm < -1e-12) {
    throw NumericalError("negative squared metric norm; metric is not positive semi-definite");
  }
  const double norm = squared_norm > 0.0 ? std::sqrt(squared_norm) : 0.0;
  return norm > eps ? 1.0 / norm : 0.0;
}

double squared(std::span<const double> v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace

std::unique_ptr<PairKernel> PairKernel::normalized_copy(double /*eps*/) const {
  throw std::logic_error("this kernel does not support normalization");
}

std::unique_ptr<PairKernel> PairKernel::rescaled(std::span<const double> /*factor*/) const {
  throw std::logic_error("this kernel does not support rescaling");
}

std::vector<double> inverse_norms(const PairKernel& kernel, double eps) {
  std::vector<double> out(kernel.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = inverse_norm(kernel.value(a, a), eps);
  return out;
}

std::unique_ptr<PairKernel> EmbeddingKernel::rescaled(std::span<const double> factor) const {
  if (factor.size() != n_) throw std::invalid_argument("scale vector length mismatch");
  std::vector<double> scale(n_);
  for (std::size_t a = 0; a < n_; ++a) scale[a] = scale_[a] * factor[a];
  return std::make_unique<EmbeddingKernel>(n_, dim_, rows_, offsets_, std::move(scale));
}

std::unique_ptr<PairKernel> MaskedKernel::rescaled(std::span<const double> factor) const {
  if (factor.size() != n_) throw std::invalid_argument("scale vector length mismatch");
  auto copy = std::unique_ptr<MaskedKernel>(new MaskedKernel(*this));
  for (std::size_t a = 0; a < n_; ++a) copy->scale_[a] = scale_[a] * factor[a];
  return copy;
}

std::unique_ptr<PairKernel> EmbeddingKernel::normalized_copy(double eps) const {
  std::vector<double> scale(n_);
  for (std::size_t a = 0; a < n_; ++a) {
    const std::span<const double> phi(rows_.data() + a * dim_, dim_);
    scale[a] = inverse_norm(scale_[a] * scale_[a] * squared(phi), eps);
    scale[a] *= scale_[a];
  }
  return std::make_unique<EmbeddingKernel>(n_, dim_, rows_, offsets_, std::move(scale));
}

std::unique_ptr<PairKernel> MaskedKernel::normalized_copy(double eps) const {
  auto copy = std::unique_ptr<MaskedKernel>(new MaskedKernel(*this));
  for (std::size_t a = 0; a < n_; ++a) {
    copy->scale_[a] = scale_[a] * inverse_norm(value(a, a), eps);
  }
  return copy;
}

EmbeddingKernel::EmbeddingKernel(std::size_t n, std::size_t dim, std::vector<double> rows,
                                 std::vector<std::size_t> block_offsets, std::vector<double> scale)
    : n_(n), dim_(dim), rows_(std::move(rows)), offsets_(std::move(block_offsets)),
      scale_(std::move(scale)) {
  if (rows_.size() != n_ * dim_ || scale_.size() != n_ || offsets_.size() < 2 ||
      offsets_.front() != 0 || offsets_.back() != dim_) {
    throw std::invalid_argument("inconsistent embedding kernel shape");
  }
}

double EmbeddingKernel::value(std::size_t a, std::size_t b) const {
  const double s = scale_[a] * scale_[b];
  if (s == 0.0) return 0.0;
  const double* x = rows_.data() + a * dim_;
  const double* y = rows_.data() + b * dim_;
  double acc = 0.0;
  for (std::size_t p = 0; p < dim_; ++p) acc += x[p] * y[p];
  return s * acc;
}

void EmbeddingKernel::accumulate_blocks(std::size_t a, std::size_t b,
                                        std::span<double> out) const {
  const double s = scale_[a] * scale_[b];
  if (s == 0.0) return;
  const double* x = rows_.data() + a * dim_;
  const double* y = rows_.data() + b * dim_;
  for (std::size_t k = 0; k + 1 < offsets_.size(); ++k) {
    double acc = 0.0;
    for (std::size_t p = offsets_[k]; p < offsets_[k + 1]; ++p) acc += x[p] * y[p];
    out[k] += s * acc;
  }
}

MaskedKernel::MaskedKernel(const LabeledSet& set, const Metric& metric, bool normalized,
                           double eps)
    : n_(set.size()), layers_(metric.layer_count()) {
  std::unordered_map<std::size_t, std::size_t> position;
  std::vector<std::size_t> touched;
  for (const auto& [i, j] : metric.mask()) {
    for (std::size_t idx : {i, j}) {
      if (position.emplace(idx, touched.size()).second) touched.push_back(idx);
    }
  }
  touched_count_ = touched.size();
  const auto theta = metric.theta();
  for (const auto& [i, j] : metric.mask()) {
    if (i > j) continue;  // both orders are present; keep one per unordered pair
    terms_.push_back({metric.layer_of(i), position[i], position[j], theta[i] * theta[j]});
  }

  scalars_.reserve(n_ * layers_);
  touched_.reserve(n_ * touched_count_);
  scale_.reserve(n_);
  for (std::size_t a = 0; a < n_; ++a) {
    const auto g = set.gradient(a);
    const auto s = metric_layer_scalars(g, metric);
    scalars_.insert(scalars_.end(), s.begin(), s.end());
    for (std::size_t idx : touched) touched_.push_back(g[idx]);
    scale_.push_back(1.0);
    if (normalized) {
      // scale_ is still 1 here, so value() is the raw quadratic form.
      scale_[a] = inverse_norm(value(a, a), eps);
    }
  }
}

double MaskedKernel::value(std::size_t a, std::size_t b) const {
  const double s = scale_[a] * scale_[b];
  if (s == 0.0) return 0.0;
  const double* sa = scalars_.data() + a * layers_;
  const double* sb = scalars_.data() + b * layers_;
  double acc = 0.0;
  for (std::size_t k = 0; k < layers_; ++k) acc += sa[k] * sb[k];
  const double* ga = touched_.data() + a * touched_count_;
  const double* gb = touched_.data() + b * touched_count_;
  for (const auto& t : terms_) acc -= t.weight * cross(t, ga, gb);
  return s * acc;
}

void MaskedKernel::accumulate_blocks(std::size_t a, std::size_t b, std::span<double> out) const {
  const double s = scale_[a] * scale_[b];
  if (s == 0.0) return;
  const double* sa = scalars_.data() + a * layers_;
  const double* sb = scalars_.data() + b * layers_;
  for (std::size_t k = 0; k < layers_; ++k) out[k] += s * sa[k] * sb[k];
  const double* ga = touched_.data() + a * touched_count_;
  const double* gb = touched_.data() + b * touched_count_;
  for (const auto& t : terms_) out[t.layer] -= s * t.weight * cross(t, ga, gb);
}

std::unique_ptr<PairKernel> make_output_kernel(const LabeledSet& set, bool normalized,
                                               double eps) {
  const std::size_t n = set.size();
  std::vector<double> rows(n), scale(n, 1.0);
  for (std::size_t a = 0; a < n; ++a) {
    rows[a] = set.output(a);
    if (normalized) scale[a] = inverse_norm(rows[a] * rows[a], eps);
  }
  return std::make_unique<EmbeddingKernel>(n, 1, std::move(rows), std::vector<std::size_t>{0, 1},
                                           std::move(scale));
}

std::unique_ptr<PairKernel> make_last_layer_kernel(const LabeledSet& set, bool normalized,
                                                   double eps) {
  const std::size_t n = set.size();
  const std::size_t width = set.params().config().hidden_sizes.back();
  std::vector<double> rows;
  rows.reserve(n * width);
  std::vector<double> scale(n, 1.0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto h = set.last_hidden(a);
    rows.insert(rows.end(), h.begin(), h.end());
    if (normalized) scale[a] = inverse_norm(squared(h), eps);
  }
  return std::make_unique<EmbeddingKernel>(n, width, std::move(rows),
                                           std::vector<std::size_t>{0, width}, std::move(scale));
}

namespace {

// Embedding layout of one metric: the coordinates phi(g) and their block offsets.
struct EmbeddingPlan {
  const Metric* metric = nullptr;
  std::size_t dim = 0;
  std::vector<std::size_t> offsets;
  std::vector<double> rows;
  std::vector<double> scale;
};

EmbeddingPlan plan_embedding(const Metric& m) {
  EmbeddingPlan plan;
  plan.metric = &m;
  plan.offsets.push_back(0);
  const auto offsets = m.layer_offsets();
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    std::size_t width = 1;
    if (m.kind() == MetricKind::Diagonal) {
      width = 0;
      for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) width += m.keeps(i) ? 1 : 0;
    }
    plan.offsets.push_back(plan.offsets.back() + width);
  }
  plan.dim = plan.offsets.back();
  return plan;
}

void append_embedding(EmbeddingPlan& plan, std::span<const double> g, bool normalized,
                      double eps) {
  const Metric& m = *plan.metric;
  const std::size_t start = plan.rows.size();
  if (m.kind() == MetricKind::Diagonal) {
    const auto theta = m.theta();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m.keeps(i)) plan.rows.push_back(theta[i] * g[i]);
    }
  } else {
    const auto s = metric_layer_scalars(g, m);
    plan.rows.insert(plan.rows.end(), s.begin(), s.end());
  }
  const std::span<const double> phi(plan.rows.data() + start, plan.dim);
  plan.scale.push_back(normalized ? inverse_norm(squared(phi), eps) : 1.0);
}

}  // namespace

std::vector<std::unique_ptr<PairKernel>> make_metric_kernels(const LabeledSet& set,
                                                             std::span<const Metric> metrics,
                                                             bool normalized, double eps) {
  std::vector<std::unique_ptr<PairKernel>> out(metrics.size());
  std::vector<EmbeddingPlan> plans;
  std::vector<std::size_t> plan_slot;
  for (std::size_t q = 0; q < metrics.size(); ++q) {
    if (metrics[q].size() != set.params().size()) {
      throw std::invalid_argument("metric layout does not match the network");
    }
    if (metrics[q].kind() == MetricKind::MaskedBlockDiagonal) {
      out[q] = std::make_unique<MaskedKernel>(set, metrics[q], normalized, eps);
    } else {
      plans.push_back(plan_embedding(metrics[q]));
      plans.back().rows.reserve(set.size() * plans.back().dim);
      plan_slot.push_back(q);
    }
  }
  if (!plans.empty()) {
    for (std::size_t a = 0; a < set.size(); ++a) {
      const auto g = set.gradient(a);
      for (auto& plan : plans) append_embedding(plan, g, normalized, eps);
    }
  }
  for (std::size_t p = 0; p < plans.size(); ++p) {
    out[plan_slot[p]] = std::make_unique<EmbeddingKernel>(
        set.size(), plans[p].dim, std::move(plans[p].rows), std::move(plans[p].offsets),
        std::move(plans[p].scale));
  }
  return out;
}

std::unique_ptr<PairKernel> make_metric_kernel(const LabeledSet& set, const Metric& metric,
                                               bool normalized, double eps) {
  auto kernels = make_metric_kernels(set, std::span<const Metric>(&metric, 1), normalized, eps);
  return std::move(kernels.front());
}

// ---------------------------------------------------------------------------
// Gap estimation

GapReport gap_estimate(const PairKernel& kernel, std::span<const std::int8_t> labels) {
  const std::size_t n = kernel.size();
  if (labels.size() != n) throw std::invalid_argument("label count does not match the kernel");
  const auto n_plus = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_minus = n - n_plus;
  if (n_plus == 0 || n_minus == 0) {
    throw UsageError("gap estimation needs both classes to be nonempty");
  }

  const std::size_t blocks = kernel.block_count();
  std::vector<double> same(blocks, 0.0), diff(blocks, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      auto& target = labels[a] == labels[b] ? same : diff;
      if (blocks == 1) {
        target[0] += kernel.value(a, b);
      } else {
        kernel.accumulate_blocks(a, b, target);
      }
    }
  }

  GapReport report;
  report.pairs_same = n_plus * n_plus + n_minus * n_minus;
  report.pairs_diff = 2 * n_plus * n_minus;
  const double inv_same = 1.0 / static_cast<double>(report.pairs_same);
  const double inv_diff = 1.0 / static_cast<double>(report.pairs_diff);
  report.per_layer_gamma.resize(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    report.mean_same += same[k];
    report.mean_diff += diff[k];
    report.per_layer_gamma[k] = same[k] * inv_same - diff[k] * inv_diff;
  }
  report.mean_same *= inv_same;
  report.mean_diff *= inv_diff;
  report.gamma = report.mean_same - report.mean_diff;
  return report;
}

// ---------------------------------------------------------------------------
// Psi summary

PsiSummary PsiSummary::from_means(Metric metric, std::vector<double> mu_plus,
                                  std::vector<double> mu_minus, std::size_t count_plus,
                                  std::size_t count_minus, bool normalized) {
  if (mu_plus.size() != metric.size() || mu_minus.size() != metric.size()) {
    throw std::invalid_argument("class means do not match the metric layout");
  }
  if (count_plus == 0 || count_minus == 0) throw UsageError("both classes must be nonempty");
  PsiSummary s;
  s.metric_ = std::move(metric);
  s.mu_plus_ = std::move(mu_plus);
  s.mu_minus_ = std::move(mu_minus);
  s.count_plus_ = count_plus;
  s.count_minus_ = count_minus;
  s.normalized_ = normalized;
  return s;
}

double PsiSummary::weight_plus() const {
  const double p = static_cast<double>(count_plus_) * static_cast<double>(count_plus_);
  const double m = static_cast<double>(count_minus_) * static_cast<double>(count_minus_);
  return p / (p + m);
}

double PsiSummary::pair_factor(std::size_t i, std::size_t j) const {
  const double a_i = mu_plus_[i], a_j = mu_plus_[j];
  const double b_i = mu_minus_[i], b_j = mu_minus_[j];
  return weight_plus() * (a_i * a_j) + weight_minus() * (b_i * b_j) - 0.5 * (a_i * b_j + b_i * a_j);
}

double PsiSummary::entry(std::size_t i, std::size_t j) const {
  const double m = metric_.entry(i, j);
  return m == 0.0 ? 0.0 : m * pair_factor(i, j);
}

std::vector<double> PsiSummary::layer_sums() const {
  const auto theta = metric_.theta();
  const auto offsets = metric_.layer_offsets();
  std::vector<double> sums(metric_.layer_count(), 0.0);
  if (metric_.kind() == MetricKind::Diagonal) {
    for (std::size_t k = 0; k < sums.size(); ++k) {
      for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
        if (metric_.keeps(i)) sums[k] += theta[i] * theta[i] * pair_factor(i, i);
      }
    }
    return sums;
  }
  const double wp = weight_plus(), wm = weight_minus();
  for (std::size_t k = 0; k < sums.size(); ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
      if (!metric_.keeps(i)) continue;
      a += theta[i] * mu_plus_[i];
      b += theta[i] * mu_minus_[i];
    }
    sums[k] = wp * a * a + wm * b * b - a * b;
  }
  for (const auto& [i, j] : metric_.mask()) {
    sums[metric_.layer_of(i)] -= theta[i] * theta[j] * pair_factor(i, j);
  }
  return sums;
}

double PsiSummary::gap() const {
  const auto sums = layer_sums();
  return std::accumulate(sums.begin(), sums.end(), 0.0);
}

PsiSummary psi_accumulate(const LabeledSet& set, const Metric& metric, bool normalize,
                          double eps) {
  if (metric.size() != set.params().size()) {
    throw std::invalid_argument("metric layout does not match the network");
  }
  const std::size_t n_plus = set.count(1);
  const std::size_t n_minus = set.count(-1);
  if (n_plus == 0 || n_minus == 0) throw UsageError("psi needs both classes to be nonempty");

  std::vector<double> sum_plus(metric.size(), 0.0), sum_minus(metric.size(), 0.0);
  std::size_t skipped_plus = 0, skipped_minus = 0;
  for (std::size_t a = 0; a < set.size(); ++a) {
    const bool plus = set.label(a) == 1;
    const auto g = set.gradient(a);
    double scale = 1.0;
    if (normalize) {
      const double norm = metric_norm(g, metric);
      if (norm <= eps) {
        ++(plus ? skipped_plus : skipped_minus);
        continue;
      }
      scale = 1.0 / norm;
    }
    auto& sum = plus ? sum_plus : sum_minus;
    for (std::size_t i = 0; i < g.size(); ++i) sum[i] += scale * g[i];
  }
  if (skipped_plus == n_plus || skipped_minus == n_minus) {
    throw UsageError("every sample of a class has zero metric norm");
  }
  for (double& v : sum_plus) v /= static_cast<double>(n_plus);
  for (double& v : sum_minus) v /= static_cast<double>(n_minus);

  PsiSummary s = PsiSummary::from_means(metric, std::move(sum_plus), std::move(sum_minus), n_plus,
                                        n_minus, normalize);
  s.skipped_plus_ = skipped_plus;
  s.skipped_minus_ = skipped_minus;
  return s;
}

// ---------------------------------------------------------------------------
// Importance

ImportanceReport::ImportanceReport(PsiSummary summary, std::vector<double> per_parameter)
    : summary_(std::move(summary)), per_parameter_(std::move(per_parameter)) {
  if (per_parameter_.size() != summary_.metric().size()) {
    throw std::invalid_argument("importance vector does not match the metric layout");
  }
}

double ImportanceReport::pair(std::size_t i, std::size_t j) const {
  return std::max(0.0, summary_.entry(i, j));
}

std::vector<std::size_t> ImportanceReport::ranking(std::size_t layer) const {
  const auto offsets = summary_.metric().layer_offsets();
  std::vector<std::size_t> idx(offsets[layer + 1] - offsets[layer]);
  std::iota(idx.begin(), idx.end(), offsets[layer]);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return per_parameter_[a] > per_parameter_[b];
  });
  return idx;
}

std::vector<double> positive_row_sums(std::span<const double> block, std::size_t n) {
  if (block.size() != n * n) throw std::invalid_argument("block is not n x n");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += std::max(0.0, block[i * n + j]);
  }
  return out;
}

namespace {

// psi_ij = c_i . p_j with p_j = theta_j (a_j, b_j) and
// c_i = theta_i (w+ a_i - b_i / 2, w- b_i - a_i / 2). For a fixed row the
// positive terms are the points strictly inside the half-plane c_i . p > 0,
// an angular window of width pi, so sorted angles plus prefix sums answer
// each row in O(log m).
void sweep_layer(const PsiSummary& s, std::size_t begin, std::size_t end,
                 std::span<double> out) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const Metric& m = s.metric();
  const auto theta = m.theta();
  const auto a = s.mu_plus();
  const auto b = s.mu_minus();
  const double wp = s.weight_plus(), wm = s.weight_minus();

  struct Point {
    double angle, u, v;
  };
  std::vector<Point> pts;
  for (std::size_t j = begin; j < end; ++j) {
    if (!m.keeps(j)) continue;
    const double u = theta[j] * a[j];
    const double v = theta[j] * b[j];
    if (u != 0.0 || v != 0.0) pts.push_back({std::atan2(v, u), u, v});
  }
  if (pts.empty()) return;
  std::sort(pts.begin(), pts.end(), [](const Point& x, const Point& y) { return x.angle < y.angle; });

  const std::size_t count = pts.size();
  std::vector<double> angles(2 * count);
  std::vector<double> pre_u(2 * count + 1, 0.0), pre_v(2 * count + 1, 0.0);
  for (std::size_t t = 0; t < 2 * count; ++t) {
    const Point& p = pts[t % count];
    angles[t] = p.angle + (t >= count ? kTwoPi : 0.0);
    pre_u[t + 1] = pre_u[t] + p.u;
    pre_v[t + 1] = pre_v[t] + p.v;
  }

  const double first = angles.front();
  for (std::size_t i = begin; i < end; ++i) {
    if (!m.keeps(i)) continue;
    const double cx = theta[i] * (wp * a[i] - 0.5 * b[i]);
    const double cy = theta[i] * (wm * b[i] - 0.5 * a[i]);
    if (cx == 0.0 && cy == 0.0) continue;
    double lo = std::atan2(cy, cx) - 0.5 * std::numbers::pi;
    while (lo < first) lo += kTwoPi;
    while (lo >= first + kTwoPi) lo -= kTwoPi;
    const auto lo_it = std::upper_bound(angles.begin(), angles.end(), lo);
    const auto hi_it = std::lower_bound(lo_it, angles.end(), lo + std::numbers::pi);
    const auto lo_pos = static_cast<std::size_t>(lo_it - angles.begin());
    const auto hi_pos = static_cast<std::size_t>(hi_it - angles.begin());
    const double sum = cx * (pre_u[hi_pos] - pre_u[lo_pos]) + cy * (pre_v[hi_pos] - pre_v[lo_pos]);
    out[i] = std::max(0.0, sum);
  }
}

std::size_t pairwise_cost(const Metric& m) {
  const auto offsets = m.layer_offsets();
  std::size_t total = 0;
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    const std::size_t w = offsets[k + 1] - offsets[k];
    total += w * w;
  }
  return total;
}

void require_pairwise_budget(const Metric& m) {
  if (pairwise_cost(m) > kMaxPairwiseEntries) {
    throw UsageError("pairwise selection over " + std::to_string(pairwise_cost(m)) +
                     " within-layer pairs exceeds the small-scale limit");
  }
}

}  // namespace

ImportanceReport importance(const PsiSummary& summary) {
  const Metric& m = summary.metric();
  const auto offsets = m.layer_offsets();
  std::vector<double> imp(m.size(), 0.0);
  switch (m.kind()) {
    case MetricKind::BlockDiagonal:
    case MetricKind::ElementwiseReduced:
      for (std::size_t k = 0; k < m.layer_count(); ++k) {
        sweep_layer(summary, offsets[k], offsets[k + 1], imp);
      }
      break;
    case MetricKind::Diagonal:
      for (std::size_t i = 0; i < m.size(); ++i) imp[i] = std::max(0.0, summary.entry(i, i));
      break;
    case MetricKind::MaskedBlockDiagonal:
      require_pairwise_budget(m);
      for (std::size_t k = 0; k < m.layer_count(); ++k) {
        for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
          for (std::size_t j = offsets[k]; j < offsets[k + 1]; ++j) {
            imp[i] += std::max(0.0, summary.entry(i, j));
          }
        }
      }
      break;
  }
  return ImportanceReport(summary, std::move(imp));
}

namespace {

std::size_t keep_count(double fraction, std::size_t n) {
  const auto raw = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(raw, 1, n);
}

}  // namespace

std::vector<std::size_t> select_keep_set(const ImportanceReport& report, double keep_fraction,
                                         bool per_layer) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw UsageError("keep fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> keep;
  if (per_layer) {
    for (std::size_t k = 0; k < report.layer_count(); ++k) {
      const auto ranked = report.ranking(k);
      const std::size_t n = keep_count(keep_fraction, ranked.size());
      keep.insert(keep.end(), ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
    }
  } else {
    const auto imp = report.per_parameter();
    std::vector<std::size_t> idx(imp.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
    const std::size_t n = keep_count(keep_fraction, idx.size());
    keep.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

namespace {

template <typename Pred>
std::vector<IndexPair> select_pairs(const PsiSummary& summary, Pred pred) {
  const Metric& m = summary.metric();
  require_pairwise_budget(m);
  const auto offsets = m.layer_offsets();
  std::vector<IndexPair> pairs;
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
      for (std::size_t j = offsets[k]; j < offsets[k + 1]; ++j) {
        if (pred(summary.entry(i, j))) pairs.emplace_back(i, j);
      }
    }
  }
  return pairs;
}

}  // namespace

std::vector<IndexPair> select_mask(const PsiSummary& summary, double threshold) {
  return select_pairs(summary, [threshold](double psi) { return std::max(0.0, psi) <= threshold; });
}

std::vector<IndexPair> select_negative_pairs(const PsiSummary& summary) {
  return select_pairs(summary, [](double psi) { return psi < 0.0; });
}

}  // namespace gradsim
