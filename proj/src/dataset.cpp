#include "gradsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gradsim/errors.hpp"
#include "gradsim/io.hpp"

namespace gradsim {

std::size_t Dataset::count(std::int8_t label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void Dataset::validate() const {
  if (dim == 0) throw UsageError("dataset has zero input dimension");
  if (inputs.size() != labels.size() * dim) {
    throw UsageError("dataset inputs do not match n x d");
  }
  for (std::int8_t y : labels) {
    if (y != 1 && y != -1) throw UsageError("dataset labels must be -1 or +1");
  }
}

void Dataset::require_both_classes() const {
  if (count(1) == 0 || count(-1) == 0) {
    throw UsageError("dataset '" + provenance + "' needs samples of both classes");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.dim = dim;
  out.provenance = provenance;
  out.stats = stats;
  out.inputs.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.inputs.insert(out.inputs.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

Dataset parse_cifar10(std::string_view bytes, int class_a, int class_b) {
  if (class_a < 0 || class_a > 9 || class_b < 0 || class_b > 9) {
    throw UsageError("CIFAR-10 classes must lie in 0..9");
  }
  if (class_a == class_b) throw UsageError("CIFAR-10 class pair must be two distinct classes");
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw UsageError("CIFAR-10 batch size " + std::to_string(bytes.size()) +
                     " is not a multiple of 3073");
  }
  Dataset ds;
  ds.dim = kCifarPixels;
  ds.provenance = "cifar10:" + std::to_string(class_a) + "," + std::to_string(class_b);
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  for (std::size_t r = 0; r < records; ++r) {
    const auto* rec = reinterpret_cast<const unsigned char*>(bytes.data() + r * kCifarRecordBytes);
    const int label = rec[0];
    if (label > 9) throw UsageError("CIFAR-10 label byte " + std::to_string(label) + " > 9");
    if (label != class_a && label != class_b) continue;
    ds.labels.push_back(label == class_a ? 1 : -1);
    for (std::size_t p = 0; p < kCifarPixels; ++p) ds.inputs.push_back(rec[1 + p] / 255.0);
  }
  return ds;
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& files, int class_a, int class_b) {
  if (files.empty()) throw UsageError("no CIFAR-10 batch files given");
  Dataset all;
  for (const auto& f : files) {
    Dataset part = parse_cifar10(read_file(f), class_a, class_b);
    if (all.dim == 0) {
      all = std::move(part);
    } else {
      all.inputs.insert(all.inputs.end(), part.inputs.begin(), part.inputs.end());
      all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
    }
  }
  return all;
}

Dataset synth_gaussians(std::size_t dim, std::size_t n_per_class, double mean_shift,
                        std::uint64_t seed) {
  if (dim == 0 || n_per_class == 0) throw UsageError("synthetic dataset needs d, n >= 1");
  Dataset ds;
  ds.dim = dim;
  std::ostringstream tag;
  tag << "synthetic:d=" << dim << ",n=" << n_per_class << ",shift=" << mean_shift
      << ",seed=" << seed;
  ds.provenance = tag.str();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double offset = mean_shift / std::sqrt(static_cast<double>(dim));
  ds.inputs.reserve(2 * n_per_class * dim);
  for (std::int8_t label : {std::int8_t{1}, std::int8_t{-1}}) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t p = 0; p < dim; ++p) ds.inputs.push_back(label * offset + normal(rng));
      ds.labels.push_back(label);
    }
  }
  return ds;
}

StandardizationStats fit_standardization(const Dataset& train) {
  if (train.size() == 0) throw UsageError("cannot standardize on an empty dataset");
  const std::size_t n = train.size();
  StandardizationStats stats;
  stats.mean.assign(train.dim, 0.0);
  stats.stddev.assign(train.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t p = 0; p < train.dim; ++p) stats.mean[p] += r[p];
  }
  for (double& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t p = 0; p < train.dim; ++p) {
      const double c = r[p] - stats.mean[p];
      stats.stddev[p] += c * c;
    }
  }
  for (double& s : stats.stddev) s = std::max(std::sqrt(s / static_cast<double>(n)), kStdFloor);
  return stats;
}

Dataset apply_standardization(const Dataset& ds, const StandardizationStats& stats) {
  if (stats.mean.size() != ds.dim) throw UsageError("standardization stats dimension mismatch");
  Dataset out = ds;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double* r = out.inputs.data() + i * out.dim;
    for (std::size_t p = 0; p < out.dim; ++p) {
      // A floored (constant) feature is exactly mean-centred, so it maps to 0.
      r[p] = (r[p] - stats.mean[p]) / stats.stddev[p];
    }
  }
  out.stats = stats;
  return out;
}

std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train,
                                                     const std::vector<Dataset>& apply_to) {
  const auto stats = fit_standardization(train);
  std::vector<Dataset> others;
  others.reserve(apply_to.size());
  for (const auto& ds : apply_to) others.push_back(apply_standardization(ds, stats));
  return {apply_standardization(train, stats), std::move(others)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test fraction must lie strictly between 0 and 1");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::int8_t label : {std::int8_t{1}, std::int8_t{-1}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == label) idx.push_back(i);
    }
    if (idx.size() < 2) {
      throw UsageError("class " + std::to_string(label) + " has fewer than 2 samples to split");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

namespace {

constexpr std::string_view kDatasetMagic = "GRADSIM-DS v1";

}  // namespace

std::string encode_dataset(const Dataset& ds) {
  ds.validate();
  std::string tag = ds.provenance.empty() ? "unknown" : ds.provenance;
  std::replace_if(tag.begin(), tag.end(), [](char c) { return c == ' ' || c == '\n'; }, '_');
  std::string out = std::string(kDatasetMagic) + " n=" + std::to_string(ds.size()) +
                    " d=" + std::to_string(ds.dim) + " source=" + tag + "\n";
  append_f64_le(out, ds.inputs);
  for (std::int8_t y : ds.labels) out.push_back(static_cast<char>(y));
  return out;
}

Dataset decode_dataset(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos || !bytes.starts_with(kDatasetMagic)) {
    throw UsageError("not a GRADSIM-DS v1 dataset");
  }
  std::istringstream fields{std::string(bytes.substr(kDatasetMagic.size(),
                                                     newline - kDatasetMagic.size()))};
  Dataset ds;
  std::size_t n = 0;
  bool have_n = false, have_d = false;
  std::string field;
  while (fields >> field) {
    if (field.starts_with("n=")) {
      n = parse_size_list(std::string_view(field).substr(2)).at(0);
      have_n = true;
    } else if (field.starts_with("d=")) {
      ds.dim = parse_size_list(std::string_view(field).substr(2)).at(0);
      have_d = true;
    } else if (field.starts_with("source=")) {
      ds.provenance = field.substr(7);
    } else {
      throw UsageError("unknown dataset header field '" + field + "'");
    }
  }
  if (!have_n || !have_d) throw UsageError("dataset header is missing n= or d=");
  const std::string_view payload = bytes.substr(newline + 1);
  if (payload.size() != 8 * n * ds.dim + n) {
    throw UsageError("dataset payload size does not match its header");
  }
  ds.inputs = read_f64_le(payload, n * ds.dim);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = static_cast<std::int8_t>(payload[8 * n * ds.dim + i]);
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

}  // namespace gradsim
