#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradsim/concentration.hpp"
#include "gradsim/gap.hpp"

namespace gradsim {

/// Pair-value histogram split by same-label and different-label pairs.
struct HistogramData {
  std::string kernel;
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<std::size_t> same;
  std::vector<std::size_t> diff;
};

inline constexpr std::size_t kDefaultBins = 101;

/// Uniform bins over the observed [min, max] of all ordered pairs. A constant
/// kernel gets the range [v - 0.5, v + 0.5].
HistogramData pair_histogram(const PairKernel& kernel, std::span<const std::int8_t> labels,
                             std::string name, std::size_t bins = kDefaultBins);

/// CSV columns bin_lo,bin_hi,same,diff. Each line of `preamble` is written
/// first as a '#' comment.
std::string histogram_csv(const HistogramData& hist, const std::vector<std::string>& preamble = {});

nlohmann::json to_json(const GapReport& report);
nlohmann::json to_json(const ConcentrationReport& report);

}  // namespace gradsim
