#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gradsim {

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at kStdFloor
};

inline constexpr double kStdFloor = 1e-8;

/// Binary-labelled inputs, labels in {-1, +1}, inputs row-major n x dim.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> inputs;
  std::vector<std::int8_t> labels;
  std::string provenance;
  std::optional<StandardizationStats> stats;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * dim, dim);
  }
  std::size_t count(std::int8_t label) const;
  /// Shape and label checks; throws UsageError.
  void validate() const;
  /// Throws UsageError unless both classes are present.
  void require_both_classes() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

// CIFAR-10 binary batches: records of 1 label byte + 3072 pixel bytes (R, G, B
// planes of 32 x 32). class_a maps to +1, class_b to -1, everything else is
// dropped. Pixels are scaled to [0, 1].
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixels = 3072;

Dataset parse_cifar10(std::string_view bytes, int class_a, int class_b);
Dataset load_cifar10(const std::vector<std::filesystem::path>& files, int class_a, int class_b);

/// Class +1 ~ N(+shift/sqrt(d) * 1, I), class -1 ~ N(-shift/sqrt(d) * 1, I).
Dataset synth_gaussians(std::size_t dim, std::size_t n_per_class, double mean_shift,
                        std::uint64_t seed);

StandardizationStats fit_standardization(const Dataset& train);
Dataset apply_standardization(const Dataset& ds, const StandardizationStats& stats);

/// Fit per-feature stats on `train` and apply them to `train` and to every
/// dataset in `apply_to`. Returns the standardized train set first.
std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train,
                                                     const std::vector<Dataset>& apply_to = {});

/// Stratified seeded split. Each class keeps at least one sample on each side.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

// Dataset cache: "GRADSIM-DS v1 n=<n> d=<d> source=<tag>\n", then n*d
// little-endian float64 inputs, then n signed-byte labels.
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::string_view bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace gradsim
