#include "gradsim/concentration.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gradsim/errors.hpp"

namespace gradsim {

double monte_carlo_slack(double bound, std::size_t n_samples) {
  return 3.0 * std::sqrt(bound / static_cast<double>(n_samples));
}

ConcentrationReport concentration_check(const SensitivityMatrix& s,
                                        std::span<const std::size_t> keep_set,
                                        std::span<const double> deltas, std::size_t n_samples,
                                        std::uint64_t seed) {
  if (keep_set.empty()) throw UsageError("concentration check needs a nonempty keep set");
  if (n_samples < kMinConcentrationSamples) {
    throw UsageError("concentration check needs at least " +
                     std::to_string(kMinConcentrationSamples) + " samples");
  }
  for (double d : deltas) {
    if (!(d > 0.0)) throw UsageError("every delta must be positive");
  }
  std::vector<char> keep(s.column_count(), 0);
  for (std::size_t i : keep_set) {
    if (i >= keep.size()) throw UsageError("keep index out of range");
    keep[i] = 1;
  }

  ConcentrationReport report;
  report.trace_full = s.trace();
  const auto norm = s.restricted_norm(keep);
  report.trace_sparse = norm.trace();
  for (char k : keep) report.kept_columns += k ? 1 : 0;
  if (report.trace_sparse > 0.0) {
    report.trace_ratio = report.trace_full / report.trace_sparse;
  } else {
    report.trace_ratio = report.trace_full > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }

  std::vector<double> thresholds;
  for (double d : deltas) thresholds.push_back(report.trace_sparse * (1.0 + 4.0 * d));
  std::vector<std::size_t> exceed(deltas.size(), 0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(s.input_dim());
  for (std::size_t t = 0; t < n_samples; ++t) {
    for (double& v : x) v = normal(rng);
    const double value = norm(x);
    for (std::size_t q = 0; q < thresholds.size(); ++q) {
      if (value > thresholds[q]) ++exceed[q];
    }
  }

  for (std::size_t q = 0; q < deltas.size(); ++q) {
    report.rows.push_back({deltas[q], static_cast<double>(exceed[q]) / static_cast<double>(n_samples),
                           std::exp(-deltas[q]), n_samples});
  }
  return report;
}

}  // namespace gradsim
