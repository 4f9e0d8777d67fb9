#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>

#include "gradsim/dataset.hpp"
#include "gradsim/errors.hpp"
#include "gradsim/io.hpp"

using namespace gradsim;

namespace {

std::string cifar_record(unsigned char label, unsigned char fill) {
  std::string r(kCifarRecordBytes, static_cast<char>(fill));
  r[0] = static_cast<char>(label);
  return r;
}

// Logistic regression by plain gradient descent; returns accuracy on `test`.
double logistic_oracle(const Dataset& train, const Dataset& test) {
  std::vector<double> w(train.dim, 0.0);
  for (int it = 0; it < 300; ++it) {
    std::vector<double> grad(train.dim, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      const auto x = train.row(i);
      double m = 0.0;
      for (std::size_t p = 0; p < train.dim; ++p) m += w[p] * x[p];
      m *= train.labels[i];
      const double slope = -train.labels[i] / (1.0 + std::exp(m));
      for (std::size_t p = 0; p < train.dim; ++p) grad[p] += slope * x[p] / static_cast<double>(train.size());
    }
    for (std::size_t p = 0; p < train.dim; ++p) w[p] -= 0.5 * grad[p];
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    double f = 0.0;
    for (std::size_t p = 0; p < test.dim; ++p) f += w[p] * test.row(i)[p];
    ok += (f > 0 ? 1 : -1) == test.labels[i];
  }
  return static_cast<double>(ok) / static_cast<double>(test.size());
}

}  // namespace

TEST_CASE("CIFAR-10 binary parsing") {
  std::string bytes = cifar_record(3, 255) + cifar_record(7, 0) + cifar_record(5, 51);
  const auto ds = parse_cifar10(bytes, 3, 5);
  CHECK(ds.size() == 2);
  CHECK(ds.dim == kCifarPixels);
  CHECK(ds.labels == std::vector<std::int8_t>{1, -1});
  CHECK(ds.row(0)[0] == 1.0);
  CHECK(ds.row(1)[kCifarPixels - 1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(ds.provenance == "cifar10:3,5");

  const auto swapped = parse_cifar10(bytes, 5, 3);
  CHECK(swapped.labels == std::vector<std::int8_t>{-1, 1});

  CHECK_THROWS_AS(parse_cifar10(bytes.substr(1), 3, 5), UsageError);
  CHECK_THROWS_AS(parse_cifar10(cifar_record(10, 0), 3, 5), UsageError);
  CHECK_THROWS_AS(parse_cifar10(bytes, 3, 3), UsageError);
  CHECK_THROWS_AS(parse_cifar10(bytes, 3, 11), UsageError);
}

TEST_CASE("CIFAR-10 files") {
  const auto dir = std::filesystem::temp_directory_path() / "gradsim_cifar_test";
  std::filesystem::create_directories(dir);
  // 1000 records cycling through the ten labels: 100 per class
  std::string batch;
  for (int r = 0; r < 1000; ++r) batch += cifar_record(static_cast<unsigned char>(r % 10), 7);
  write_file(dir / "data_batch_1.bin", batch);
  write_file(dir / "data_batch_2.bin", batch);
  const auto ds = load_cifar10({dir / "data_batch_1.bin", dir / "data_batch_2.bin"}, 0, 1);
  CHECK(ds.size() == 400);
  CHECK(ds.count(1) == 200);
  CHECK(ds.count(-1) == 200);
  CHECK_THROWS_AS(load_cifar10({dir / "missing.bin"}, 0, 1), UsageError);
  CHECK_THROWS_AS(load_cifar10({}, 0, 1), UsageError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic Gaussians") {
  const auto a = synth_gaussians(10, 50, 1.0, 3);
  const auto b = synth_gaussians(10, 50, 1.0, 3);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.count(1) == 50);
  CHECK(a.count(-1) == 50);
  CHECK_THROWS_AS(synth_gaussians(0, 5, 1.0, 0), UsageError);

  // per-class means sit near +-shift/sqrt(d)
  const auto big = synth_gaussians(4, 20000, 2.0, 1);
  std::vector<double> mp(4, 0.0), mm(4, 0.0);
  for (std::size_t i = 0; i < big.size(); ++i) {
    auto& m = big.labels[i] == 1 ? mp : mm;
    for (std::size_t p = 0; p < 4; ++p) m[p] += big.row(i)[p] / 20000.0;
  }
  for (std::size_t p = 0; p < 4; ++p) {
    CHECK(std::fabs(mp[p] - 1.0) < 0.03);
    CHECK(std::fabs(mm[p] + 1.0) < 0.03);
  }

  const auto [tr, te] = split(synth_gaussians(10, 500, 4.0, 5), 0.3, 0);
  CHECK(logistic_oracle(tr, te) > 0.95);
}

TEST_CASE("standardization") {
  Dataset ds;
  ds.dim = 3;
  ds.inputs = {1, 5, 2, 3, 5, 4, 5, 5, 9};
  ds.labels = {1, -1, 1};
  const auto stats = fit_standardization(ds);
  CHECK(stats.mean == std::vector<double>{3, 5, 5});
  CHECK(stats.stddev[1] == kStdFloor);
  const auto z = apply_standardization(ds, stats);
  for (std::size_t p = 0; p < 3; ++p) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 3; ++i) mean += z.row(i)[p] / 3.0;
    for (std::size_t i = 0; i < 3; ++i) var += (z.row(i)[p] - mean) * (z.row(i)[p] - mean) / 3.0;
    CHECK(std::fabs(mean) <= 1e-6);
    if (p != 1) CHECK(std::fabs(var - 1.0) <= 1e-6);
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(z.row(i)[1] == 0.0);
  CHECK(z.stats.has_value());

  Dataset other = ds;
  other.inputs = {0, 0, 0, 10, 10, 10, 2, 2, 2};
  const auto [train, rest] = standardize(ds, {other});
  CHECK(train.inputs == z.inputs);
  const auto self = apply_standardization(other, fit_standardization(other));
  CHECK(rest[0].inputs != self.inputs);

  Dataset empty;
  empty.dim = 3;
  CHECK_THROWS_AS(fit_standardization(empty), UsageError);
}

TEST_CASE("stratified split") {
  Dataset ds;
  ds.dim = 1;
  for (int i = 0; i < 20; ++i) {
    ds.inputs.push_back(i);
    ds.labels.push_back(i < 10 ? 1 : -1);
  }
  const auto [tr, te] = split(ds, 0.5, 9);
  CHECK(tr.count(1) == 5);
  CHECK(tr.count(-1) == 5);
  CHECK(te.count(1) == 5);
  CHECK(te.count(-1) == 5);
  const auto [tr2, te2] = split(ds, 0.5, 9);
  CHECK(tr.inputs == tr2.inputs);
  CHECK(te.inputs == te2.inputs);
  std::vector<double> all = tr.inputs;
  all.insert(all.end(), te.inputs.begin(), te.inputs.end());
  std::sort(all.begin(), all.end());
  CHECK(all == ds.inputs);

  // uneven classes keep their ratio within one sample
  Dataset uneven = synth_gaussians(2, 30, 1.0, 0);
  uneven = uneven.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 30, 31, 32, 33, 34, 35});
  const auto [u_tr, u_te] = split(uneven, 0.25, 1);
  CHECK(std::fabs(static_cast<double>(u_te.count(1)) - 12 * 0.25) <= 1.0);
  CHECK(std::fabs(static_cast<double>(u_te.count(-1)) - 6 * 0.25) <= 1.0);

  CHECK_THROWS_AS(split(ds, 0.0, 0), UsageError);
  CHECK_THROWS_AS(split(ds, 1.0, 0), UsageError);
  Dataset tiny = ds.subset(std::vector<std::size_t>{0, 1, 10});
  CHECK_THROWS_AS(split(tiny, 0.5, 0), UsageError);
}

TEST_CASE("dataset cache round trip") {
  const auto ds = synth_gaussians(7, 13, 0.5, 2);
  const auto bytes = encode_dataset(ds);
  CHECK(bytes.rfind("GRADSIM-DS v1 n=26 d=7 source=", 0) == 0);
  const auto back = decode_dataset(bytes);
  CHECK(back.inputs == ds.inputs);
  CHECK(back.labels == ds.labels);
  CHECK(back.provenance == ds.provenance);
  CHECK_THROWS_AS(decode_dataset(bytes.substr(0, bytes.size() - 1)), UsageError);
  CHECK_THROWS_AS(decode_dataset("GRADSIM v1 d=2\n"), UsageError);

  Dataset bad = ds;
  bad.labels[0] = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  Dataset one = ds.subset(std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(one.require_both_classes(), UsageError);
}
