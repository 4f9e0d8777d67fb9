// One pass/fail line per acceptance criterion. Exit status is nonzero when any
// line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradsim/concentration.hpp"
#include "gradsim/dataset.hpp"
#include "gradsim/errors.hpp"
#include "gradsim/experiment.hpp"
#include "gradsim/gap.hpp"
#include "gradsim/io.hpp"
#include "gradsim/kernels.hpp"
#include "gradsim/network.hpp"
#include "gradsim/sensitivity.hpp"
#include "gradsim/train.hpp"
#include "oracles.hpp"

using namespace gradsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kGradTol = 1e-5;         // analytic vs central differences
constexpr double kFdStep = 1e-5;
constexpr double kBoundaryMargin = 1e-3;  // min |preactivation| for FD inputs
constexpr double kGradSeconds = 10.0;
constexpr double kEulerTol = 1e-9;
constexpr double kSignTol = 1e-12;        // rounding in g^T M g / (|g| |g|)
constexpr double kSandwichSlack = 1e-12;  // relative rounding slack
constexpr double kPsiTol = 1e-8;
constexpr double kLinearityTol = 1e-9;
constexpr double kRegionTol = 1e-9;
constexpr double kDeskSeconds = 1800.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double a, double b) {
  const double scale = std::fabs(b);
  if (scale == 0.0) return a == 0.0 ? 0.0 : INFINITY;
  return std::fabs(a - b) / scale;
}

// Random net and two inputs with their gradients.
struct Pair {
  Parameters p;
  std::vector<double> x, y, gx, gy;
  double fx = 0.0, fy = 0.0;
};

Pair random_pair(std::mt19937_64& rng, const Parameters& p) {
  Pair q{p, oracle::random_vector(rng, p.config().input_dim),
         oracle::random_vector(rng, p.config().input_dim), {}, {}, 0, 0};
  q.gx = param_gradient(p, q.x);
  q.gy = param_gradient(p, q.y);
  q.fx = forward(p, q.x).output;
  q.fy = forward(p, q.y).output;
  return q;
}

Dataset random_data(std::mt19937_64& rng, std::size_t dim, std::size_t n) {
  Dataset ds;
  ds.dim = dim;
  ds.inputs = oracle::random_vector(rng, dim * n);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(coin(rng) ? 1 : -1);
  ds.labels[0] = 1;
  ds.labels[1] = -1;
  ds.provenance = "acceptance";
  return ds;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int nets = 0;
  while (nets < 100) {
    const auto p = oracle::random_net(rng, 20, 3, 16);
    std::vector<double> x;
    for (int tries = 0; tries < 50 && x.empty(); ++tries) {
      auto cand = oracle::random_vector(rng, p.config().input_dim);
      if (oracle::min_abs_preactivation(p, cand) > kBoundaryMargin) x = std::move(cand);
    }
    if (x.empty()) continue;
    const auto g = param_gradient(p, x);
    worst = std::max(worst, oracle::max_rel_err(g, finite_diff_gradient(p, x, kFdStep)));
    ++nets;
  }
  const double secs = seconds_since(t0);
  return {worst <= kGradTol && secs < kGradSeconds,
          fmt("max rel err %.3g over %d nets (tol %.0e), %.2f s (limit %.0f s)", worst, nets, kGradTol,
              secs, kGradSeconds)};
}

Outcome euler_identity() {
  std::mt19937_64 rng(102);
  double worst_layer = 0.0, worst_kernel = 0.0;
  int pairs = 0;
  for (int net = 0; net < 100; ++net) {
    const auto p = oracle::random_net(rng, 20, 3, 16);
    const auto block = Metric::block_diagonal(p);
    const double P = static_cast<double>(p.layer_count());
    for (int t = 0; t < 100; ++t, ++pairs) {
      const auto q = random_pair(rng, p);
      for (double s : layer_scalars(p, q.gx)) worst_layer = std::max(worst_layer, rel_err(s, q.fx));
      for (double s : layer_scalars(p, q.gy)) worst_layer = std::max(worst_layer, rel_err(s, q.fy));
      worst_kernel =
          std::max(worst_kernel, rel_err(kernel_metric(q.gx, q.gy, block), P * kernel_output(q.fx, q.fy)));
    }
  }
  return {worst_layer <= kEulerTol && worst_kernel <= kEulerTol,
          fmt("per-layer max rel err %.3g, K_block vs P*K_f max rel err %.3g over %d pairs (tol %.0e)",
              worst_layer, worst_kernel, pairs, kEulerTol)};
}

Outcome sign_collapse() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  int pairs = 0, exact = 0, zero_rule = 0;
  for (int net = 0; net < 100; ++net) {
    const auto p = oracle::random_net(rng, 20, 3, 16);
    const auto block = Metric::block_diagonal(p);
    for (int t = 0; t < 100; ++t, ++pairs) {
      const auto q = random_pair(rng, p);
      const double v = kernel_normalized(q.gx, q.gy, block);
      double expect = 0.0;
      if (metric_norm(q.gx, block) > kDefaultNormEps && metric_norm(q.gy, block) > kDefaultNormEps) {
        expect = (q.fx > 0 ? 1.0 : -1.0) * (q.fy > 0 ? 1.0 : -1.0);
      } else {
        ++zero_rule;
      }
      worst = std::max(worst, std::fabs(v - expect));
      exact += v == expect;
    }
  }
  return {worst <= kSignTol,
          fmt("max |K_hat - sgn*sgn| %.3g over %d pairs (tol %.0e), %d bit-exact, %d by the zero-norm rule",
              worst, pairs, kSignTol, exact, zero_rule)};
}

Outcome sandwich() {
  std::mt19937_64 rng(104);
  int pairs = 0, violations = 0, strict = 0;
  for (int net = 0; net < 100; ++net) {
    const auto p = oracle::random_net(rng, 20, 3, 16);
    const auto bound = last_layer_bound(p);
    const auto theta = p.output_weights();
    for (int t = 0; t < 100; ++t, ++pairs) {
      const auto x = oracle::random_vector(rng, p.config().input_dim);
      const auto y = oracle::random_vector(rng, p.config().input_dim);
      const auto tx = forward(p, x), ty = forward(p, y);
      const auto hx = tx.last_hidden(), hy = ty.last_hidden();
      double mid = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) mid += theta[i] * theta[i] * hx[i] * hy[i];
      const double k = kernel_last_layer(hx, hy);
      const double lo = bound.omega_min * k, hi = bound.omega_max * k;
      const double slack = kSandwichSlack * std::fabs(mid);
      violations += !(lo <= mid + slack && mid <= hi + slack);
      strict += !(lo <= mid && mid <= hi);
    }
  }
  return {violations == 0, fmt("%d violations over %d pairs (rel slack %.0e; %d without slack)",
                               violations, pairs, kSandwichSlack, strict)};
}

Outcome psi_brute_force() {
  std::mt19937_64 rng(105);
  double worst = 0.0, worst_gap = 0.0;
  int done = 0;
  while (done < 20) {
    const auto p = oracle::random_net(rng, 8, 3, 6);
    if (p.size() > 100) continue;
    std::uniform_int_distribution<std::size_t> nd(4, 50);
    const auto ds = random_data(rng, p.config().input_dim, nd(rng));
    const LabeledSet set(p, ds);
    const auto block = Metric::block_diagonal(p);
    std::optional<PsiSummary> s;
    try {
      s = psi_accumulate(set, block, true);
    } catch (const UsageError&) {
      continue;  // a class with only zero-norm gradients
    }
    std::vector<std::vector<double>> g;
    for (std::size_t a = 0; a < ds.size(); ++a) g.push_back(param_gradient(p, ds.row(a)));
    const auto entry = [&](std::size_t i, std::size_t j) { return block.entry(i, j); };
    const auto brute = oracle::brute_psi(g, ds.labels, entry, true);
    const std::size_t m = p.size();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::fabs(s->entry(i, j) - brute[i * m + j]));
    }
    const double gamma = gap_estimate(*make_metric_kernel(set, block, true), set.labels()).gamma;
    worst_gap = std::max(worst_gap, std::fabs(s->gap() - gamma));
    ++done;
  }
  return {worst <= kPsiTol && worst_gap <= kPsiTol,
          fmt("max |psi - brute| %.3g, |sum psi - gamma| %.3g over %d instances (tol %.0e)", worst,
              worst_gap, done, kPsiTol)};
}

Outcome gamma_linearity(const fs::path& work) {
  const fs::path dir = work / "linearity";
  fs::create_directories(dir);
  cli::DatasetCacheOptions cache;
  cache.dim = 8;
  cache.n_per_class = 60;
  cache.mean_shift = 2.0;
  cache.seed = 6;
  cache.out = (dir / "data.ds").string();
  cli::run_dataset_cache(cache);
  cli::TrainOptions train;
  train.train_data = cache.out;
  train.out = (dir / "net.ckpt").string();
  train.hidden = {8, 8, 8};
  train.train.epochs = 10;
  cli::run_train(train);
  cli::GapOptions gap;
  gap.checkpoint = train.out;
  gap.data = cache.out;
  gap.out_dir = (dir / "gap").string();
  gap.kernels = {"output", "block"};
  gap.normalize = "off";
  cli::run_gap(gap);
  const double g_out = json::parse(read_file(dir / "gap" / "gap_output.json"))["gamma"];
  const double g_block = json::parse(read_file(dir / "gap" / "gap_block.json"))["gamma"];
  const auto summary = json::parse(read_file(dir / "gap" / "summary.json"));
  const double P = summary["weight_layers"];
  const double err = rel_err(g_block, P * g_out);
  return {err <= kLinearityTol, fmt("gamma_block %.10g, P*gamma_output %.10g (P=%g), rel err %.3g (tol %.0e)",
                                    g_block, P * g_out, P, err, kLinearityTol)};
}

Outcome mask_monotonicity() {
  std::mt19937_64 rng(107);
  int done = 0, decreased = 0;
  double min_gain = INFINITY;
  while (done < 20) {
    const auto p = oracle::random_net(rng, 8, 3, 6);
    if (p.size() > 100) continue;
    std::uniform_int_distribution<std::size_t> nd(4, 40);
    const auto ds = random_data(rng, p.config().input_dim, nd(rng));
    const LabeledSet set(p, ds);
    const auto block = Metric::block_diagonal(p);
    const auto s = psi_accumulate(set, block, false);
    const auto masked = metric_mask(block, select_negative_pairs(s));
    const double base = gap_estimate(*make_metric_kernel(set, block, false), set.labels()).gamma;
    const double after = gap_estimate(*make_metric_kernel(set, masked, false), set.labels()).gamma;
    decreased += after < base;
    min_gain = std::min(min_gain, after - base);
    ++done;
  }
  return {decreased == 0, fmt("%d of %d instances decreased, smallest gain %.3g", decreased, done, min_gain)};
}

Outcome concentration() {
  const Dataset ds = synth_gaussians(32, 200, 2.0, 8);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  const auto [p, hist] = train_sgd(init_network(NetworkConfig{32, {16, 16, 16}}, 0, std::sqrt(6.0)), ds,
                                   nullptr, cfg);
  const auto probe = ds.row(0);
  const auto s = SensitivityMatrix::from_pattern(p, activation_pattern(forward(p, probe)));
  const LabeledSet set(p, ds);
  const auto keep = select_keep_set(importance(psi_accumulate(set, Metric::block_diagonal(p), true)), 0.5, true);
  std::vector<std::size_t> all(s.column_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<double> deltas{0.25, 0.5, 1.0, 2.0, 4.0};
  const std::size_t draws = 100000;
  bool ok = true;
  std::string detail = fmt("train acc %.3f;", evaluate(p, ds));
  for (const auto& [name, cols] : {std::pair{"full", all}, std::pair{"reduced", keep}}) {
    const auto rep = concentration_check(s, cols, deltas, draws, 9);
    detail += fmt(" %s (%zu cols):", name, rep.kept_columns);
    for (const auto& row : rep.rows) {
      const double limit = row.tail_bound + 3.0 * std::sqrt(row.tail_bound / static_cast<double>(draws));
      ok = ok && row.tail_emp <= limit;
      detail += fmt(" d=%g %.4f<=%.4f", row.delta, row.tail_emp, limit);
    }
  }
  return {ok, detail};
}

Outcome region_linearity() {
  std::mt19937_64 rng(109);
  const auto p = oracle::random_net(rng, 12, 3, 12);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 3.0);
  std::map<std::vector<std::int8_t>, std::vector<std::vector<double>>> groups;
  for (int a = 0; a < 100; ++a) {
    const auto anchor = oracle::random_vector(rng, p.config().input_dim);
    for (int k = 0; k < 10; ++k) {
      auto x = anchor;
      // rays keep the pattern; small jitter sometimes crosses a boundary
      const double c = k < 5 ? scale(rng) : 1.0;
      for (auto& v : x) v = c * v + (k < 5 ? 0.0 : 0.05 * normal(rng));
      groups[activation_pattern(forward(p, x)).signs].push_back(x);
    }
  }
  double worst = 0.0;
  std::size_t inputs = 0, largest = 0;
  for (const auto& [signs, xs] : groups) {
    const auto s = SensitivityMatrix::from_pattern(p, ActivationPattern{signs});
    largest = std::max(largest, xs.size());
    for (const auto& x : xs) {
      worst = std::max(worst, oracle::max_rel_err(s.apply(x), param_gradient(p, x)));
      ++inputs;
    }
  }
  return {worst <= kRegionTol, fmt("max rel err %.3g over %zu inputs in %zu patterns (largest %zu; tol %.0e)",
                                   worst, inputs, groups.size(), largest, kRegionTol)};
}

Outcome desk_reproduction(const fs::path& work, std::vector<std::string>& notes) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = work / "desk";
  fs::create_directories(dir);
  cli::DatasetCacheOptions cache;
  cache.source = "synthetic";
  cache.dim = 3072;
  cache.n_per_class = 1500;
  cache.seed = 0;
  cache.test_fraction = 0.4;
  cache.out = (dir / "train.ds").string();
  cache.test_out = (dir / "test.ds").string();
  cli::run_dataset_cache(cache);

  cli::TrainOptions train;
  train.train_data = cache.out;
  train.test_data = cache.test_out;
  train.out = (dir / "net.ckpt").string();
  train.hidden = {64, 64, 64, 64, 64};
  const auto meta = cli::run_train(train);

  cli::SweepOptions sweep;
  sweep.checkpoint = train.out;
  sweep.data = cache.test_out;
  sweep.out_dir = (dir / "sweep").string();
  sweep.fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  sweep.seeds = {0, 1, 2, 3, 4};
  const auto report = cli::run_prune_sweep(sweep);
  const double secs = seconds_since(t0);

  bool files = fs::exists(dir / "sweep" / "sweep.csv") && fs::exists(dir / "sweep" / "hist_block_normalized.csv");
  for (double f : sweep.fractions) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%.4g", f);
    files = files && fs::exists(dir / "sweep" / ("hist_sparse_" + std::string(tag) + "_normalized.csv"));
  }
  const auto& v = report["verdict"];
  notes.push_back(fmt("synthetic stand-in d=3072, %zu train / %zu held-out samples, %zu parameters, "
                      "train acc %.3f, test acc %.3f",
                      load_dataset(cache.out).size(), load_dataset(cache.test_out).size(),
                      meta["network"]["parameter_count"].get<std::size_t>(),
                      meta["final_train_accuracy"].get<double>(), meta["final_test_accuracy"].get<double>()));
  notes.push_back(fmt("verdict: gap increased = %s (%zu of %zu seeds improved, block-norm normalization)",
                      v["gap_increased"].get<bool>() ? "yes" : "no", v["seeds_improved"].get<std::size_t>(),
                      v["seeds_total"].get<std::size_t>()));
  notes.push_back(fmt("own-norm normalization: %zu of %zu seeds improved; unnormalized: %zu of %zu",
                      v["seeds_improved_renorm"].get<std::size_t>(), v["seeds_total"].get<std::size_t>(),
                      v["seeds_improved_unnorm"].get<std::size_t>(), v["seeds_total"].get<std::size_t>()));
  notes.push_back("caveat: " + report["caveat"].get<std::string>());
  notes.push_back("outputs: " + (dir / "sweep").string());
  return {files && secs < kDeskSeconds,
          fmt("sweep over 9 fractions x 5 seeds completed, histogram CSVs %s, %.0f s (limit %.0f s); "
              "verdict reported below, not asserted",
              files ? "written" : "MISSING", secs, kDeskSeconds)};
}

}  // namespace

int main() {
  const fs::path work = fs::current_path() / "acceptance_out";
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<std::string> notes;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"layer identity", euler_identity},
      {"sign collapse", sign_collapse},
      {"last-layer sandwich", sandwich},
      {"psi vs brute force", psi_brute_force},
      {"gamma linearity (gap command)", [&] { return gamma_linearity(work); }},
      {"negative-pair masking", mask_monotonicity},
      {"concentration", concentration},
      {"region linearity", region_linearity},
      {"desk reproduction", [&] { return desk_reproduction(work, notes); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::printf("criterion %zu [%s] %s: %s\n", i + 1, out.pass ? "PASS" : "FAIL", criteria[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  for (const auto& n : notes) std::printf("  %s\n", n.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
