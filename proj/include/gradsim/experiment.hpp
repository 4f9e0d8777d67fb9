#pragma once

// Command implementations behind the `gradsim` tool. Each command validates its
// options before doing any work, writes its artifacts, and returns a JSON
// summary. Every written file embeds the resolved options and, where a
// checkpoint is involved, its git blob hash.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradsim/train.hpp"

namespace gradsim::cli {

struct DatasetCacheOptions {
  std::string source = "synthetic";  // synthetic | cifar10
  std::size_t dim = 3072;
  std::size_t n_per_class = 1000;
  double mean_shift = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> cifar_files;
  int class_a = 0;
  int class_b = 1;
  bool standardize = true;
  double test_fraction = 0.0;  // > 0 also writes test_out
  std::string out;
  std::string test_out;
};

struct TrainOptions {
  std::string train_data;
  std::string test_data;  // optional
  std::string out;        // checkpoint; metadata goes to <out>.json
  std::vector<std::size_t> hidden = {64, 64, 64, 64, 64};
  double init_scale = 2.449489742783178;  // sqrt(6): He-uniform bound
  std::uint64_t init_seed = 0;
  TrainConfig train;
  bool dry_run = false;
};

struct GapOptions {
  std::string checkpoint;
  std::string data;
  std::string out_dir;
  std::vector<std::string> kernels = {"output", "last-layer", "block", "diagonal", "sparse"};
  std::string normalize = "both";  // off | on | both
  double keep_fraction = 0.5;
  bool per_layer = true;
  bool renormalize = false;
  double mask_threshold = 0.0;
  std::string keep_file;  // overrides the importance-based keep set
  std::string mask_file;  // overrides the threshold-based mask
  std::size_t bins = 101;
  std::size_t max_samples = 0;
  std::uint64_t seed = 0;
};

struct SweepOptions {
  std::string checkpoint;
  std::string data;
  std::string out_dir;
  std::vector<double> fractions = {0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  double test_fraction = 0.5;
  bool per_layer = true;
  bool renormalize = false;
  bool mask_negative = false;
  std::size_t bins = 101;
  std::size_t max_samples = 0;
};

struct ConcentrationOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::size_t probe_index = 0;
  double keep_fraction = 0.5;
  bool per_layer = true;
  std::vector<double> deltas = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const DatasetCacheOptions& o);
nlohmann::json to_json(const TrainOptions& o);
nlohmann::json to_json(const GapOptions& o);
nlohmann::json to_json(const SweepOptions& o);
nlohmann::json to_json(const ConcentrationOptions& o);

nlohmann::json run_dataset_cache(const DatasetCacheOptions& o);
nlohmann::json run_train(const TrainOptions& o);
nlohmann::json run_gap(const GapOptions& o);
nlohmann::json run_prune_sweep(const SweepOptions& o);
nlohmann::json run_concentration(const ConcentrationOptions& o);

/// Kernel names accepted by `gap`.
const std::vector<std::string>& known_kernels();

}  // namespace gradsim::cli
