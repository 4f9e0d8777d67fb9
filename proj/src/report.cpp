#include "gradsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gradsim {

HistogramData pair_histogram(const PairKernel& kernel, std::span<const std::int8_t> labels,
                             std::string name, std::size_t bins) {
  const std::size_t n = kernel.size();
  if (labels.size() != n) throw std::invalid_argument("label count does not match the kernel");
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double v = kernel.value(a, b);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n == 0) lo = hi = 0.0;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }

  HistogramData hist;
  hist.kernel = std::move(name);
  hist.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) hist.edges[k] = lo + static_cast<double>(k) * width;
  hist.edges[bins] = hi;
  hist.same.assign(bins, 0);
  hist.diff.assign(bins, 0);

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double v = kernel.value(a, b);
      auto bin = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
      bin = std::min(bin, bins - 1);
      ++(labels[a] == labels[b] ? hist.same : hist.diff)[bin];
    }
  }
  return hist;
}

std::string histogram_csv(const HistogramData& hist, const std::vector<std::string>& preamble) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "# kernel: " << hist.kernel << '\n';
  out << "bin_lo,bin_hi,same,diff\n";
  for (std::size_t k = 0; k < hist.same.size(); ++k) {
    out << hist.edges[k] << ',' << hist.edges[k + 1] << ',' << hist.same[k] << ',' << hist.diff[k]
        << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const GapReport& report) {
  return {{"mean_same", report.mean_same},         {"mean_diff", report.mean_diff},
          {"gamma", report.gamma},                 {"per_layer_gamma", report.per_layer_gamma},
          {"pairs_same", report.pairs_same},       {"pairs_diff", report.pairs_diff}};
}

nlohmann::json to_json(const ConcentrationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"delta", r.delta},
                    {"tail_emp", r.tail_emp},
                    {"tail_bound", r.tail_bound},
                    {"mc_slack", monte_carlo_slack(r.tail_bound, r.n_samples)},
                    {"n_samples", r.n_samples}});
  }
  return {{"trace_full", report.trace_full},
          {"trace_sparse", report.trace_sparse},
          {"trace_ratio", report.trace_ratio},
          {"kept_columns", report.kept_columns},
          {"rows", rows}};
}

}  // namespace gradsim
