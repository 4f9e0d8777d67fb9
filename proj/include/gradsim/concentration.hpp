#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gradsim/sensitivity.hpp"

namespace gradsim {

struct ConcentrationRow {
  double delta = 0.0;
  double tail_emp = 0.0;    // fraction of draws with ||S*^T x||^2 > Tr[S* S*^T] (1 + 4 delta)
  double tail_bound = 0.0;  // exp(-delta)
  std::size_t n_samples = 0;
};

struct ConcentrationReport {
  double trace_full = 0.0;
  double trace_sparse = 0.0;
  double trace_ratio = 1.0;  // trace_full / trace_sparse
  std::size_t kept_columns = 0;
  std::vector<ConcentrationRow> rows;
};

inline constexpr std::size_t kMinConcentrationSamples = 1000;

/// Monte-Carlo tail of ||S*^T x||^2 for x ~ N(0, I_d), where S* keeps the
/// columns in keep_set. Deterministic for a given seed.
ConcentrationReport concentration_check(const SensitivityMatrix& s,
                                        std::span<const std::size_t> keep_set,
                                        std::span<const double> deltas, std::size_t n_samples,
                                        std::uint64_t seed);

/// Three standard errors of a Bernoulli(bound) mean over n draws.
double monte_carlo_slack(double bound, std::size_t n_samples);

}  // namespace gradsim
