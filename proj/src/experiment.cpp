#include "gradsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>

#include "gradsim/concentration.hpp"
#include "gradsim/dataset.hpp"
#include "gradsim/errors.hpp"
#include "gradsim/gap.hpp"
#include "gradsim/io.hpp"
#include "gradsim/kernels.hpp"
#include "gradsim/network.hpp"
#include "gradsim/report.hpp"
#include "gradsim/sensitivity.hpp"

namespace gradsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCaveat =
    "Desk-scale, qualitative check only. One architecture and one data source do not "
    "settle whether sparsifying the metric widens the gap in general; more experiments "
    "are required before drawing that conclusion.";

json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},   {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"momentum", c.momentum}, {"seed", c.seed},           {"eval_every", c.eval_every}};
}

void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
}

void require_existing(const std::string& path, const char* what) {
  require_path(path, what);
  if (!fs::is_regular_file(path)) {
    throw UsageError(std::string(what) + " '" + path + "' does not exist");
  }
}

void check_fraction(double f, const char* what) {
  if (!(f > 0.0 && f <= 1.0)) throw UsageError(std::string(what) + " must lie in (0, 1]");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// CSV preamble lines shared by every table.
std::vector<std::string> preamble(const json& config, const std::string& hash) {
  return {"config: " + config.dump(), "checkpoint_hash: " + hash};
}

struct Loaded {
  Parameters params;
  std::string hash;
  Dataset data;
};

Loaded load_inputs(const std::string& checkpoint, const std::string& data) {
  require_existing(checkpoint, "checkpoint");
  require_existing(data, "dataset");
  const std::string bytes = read_file(checkpoint);
  Loaded out{decode_checkpoint(bytes), git_blob_hash(bytes), load_dataset(data)};
  if (out.data.dim != out.params.config().input_dim) {
    throw UsageError("dataset dimension " + std::to_string(out.data.dim) +
                     " does not match the checkpoint input dimension " +
                     std::to_string(out.params.config().input_dim));
  }
  out.data.require_both_classes();
  return out;
}

// Stratified subsample of about max_samples rows (0 keeps everything).
Dataset limit_samples(const Dataset& ds, std::size_t max_samples, std::uint64_t seed) {
  if (max_samples == 0 || max_samples >= ds.size()) return ds;
  const double frac = static_cast<double>(max_samples) / static_cast<double>(ds.size());
  return split(ds, frac, seed).second;
}

std::string fraction_tag(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", f);
  return buf;
}


}  // namespace

const std::vector<std::string>& known_kernels() {
  static const std::vector<std::string> names = {"output", "last-layer", "block",
                                                 "diagonal", "sparse", "masked"};
  return names;
}

// ---------------------------------------------------------------------------
// Option serialization

json to_json(const DatasetCacheOptions& o) {
  return {{"command", "dataset cache"}, {"source", o.source},       {"dim", o.dim},
          {"n_per_class", o.n_per_class}, {"mean_shift", o.mean_shift}, {"seed", o.seed},
          {"cifar_files", o.cifar_files}, {"class_a", o.class_a},     {"class_b", o.class_b},
          {"standardize", o.standardize}, {"test_fraction", o.test_fraction}, {"out", o.out},
          {"test_out", o.test_out}};
}

json to_json(const TrainOptions& o) {
  return {{"command", "train"},       {"train_data", o.train_data}, {"test_data", o.test_data},
          {"out", o.out},             {"hidden", o.hidden},         {"init_scale", o.init_scale},
          {"init_seed", o.init_seed}, {"train", train_config_json(o.train)}};
}

json to_json(const GapOptions& o) {
  return {{"command", "gap"},           {"checkpoint", o.checkpoint},
          {"data", o.data},             {"out_dir", o.out_dir},
          {"kernels", o.kernels},       {"normalize", o.normalize},
          {"keep_fraction", o.keep_fraction}, {"per_layer", o.per_layer},
          {"renormalize", o.renormalize}, {"mask_threshold", o.mask_threshold},
          {"keep_file", o.keep_file},   {"mask_file", o.mask_file},
          {"bins", o.bins},             {"max_samples", o.max_samples},
          {"seed", o.seed}};
}

json to_json(const SweepOptions& o) {
  return {{"command", "prune-sweep"},   {"checkpoint", o.checkpoint},
          {"data", o.data},             {"out_dir", o.out_dir},
          {"fractions", o.fractions},   {"seeds", o.seeds},
          {"test_fraction", o.test_fraction}, {"per_layer", o.per_layer},
          {"renormalize", o.renormalize}, {"mask_negative", o.mask_negative},
          {"bins", o.bins},             {"max_samples", o.max_samples}};
}

json to_json(const ConcentrationOptions& o) {
  return {{"command", "concentration"}, {"checkpoint", o.checkpoint},
          {"data", o.data},             {"out", o.out},
          {"probe_index", o.probe_index}, {"keep_fraction", o.keep_fraction},
          {"per_layer", o.per_layer},   {"deltas", o.deltas},
          {"n_samples", o.n_samples},   {"seed", o.seed}};
}

// ---------------------------------------------------------------------------
// dataset cache

json run_dataset_cache(const DatasetCacheOptions& o) {
  require_path(o.out, "--out");
  if (o.source != "synthetic" && o.source != "cifar10") {
    throw UsageError("unknown dataset source '" + o.source + "' (synthetic or cifar10)");
  }
  if (o.test_fraction < 0.0 || o.test_fraction >= 1.0) {
    throw UsageError("test fraction must lie in [0, 1)");
  }
  if (o.test_fraction > 0.0) require_path(o.test_out, "--test-out");

  Dataset ds;
  if (o.source == "synthetic") {
    ds = synth_gaussians(o.dim, o.n_per_class, o.mean_shift, o.seed);
  } else {
    std::vector<fs::path> files(o.cifar_files.begin(), o.cifar_files.end());
    for (const auto& f : o.cifar_files) require_existing(f, "CIFAR-10 batch");
    ds = load_cifar10(files, o.class_a, o.class_b);
  }
  ds.require_both_classes();

  Dataset train = ds;
  std::vector<Dataset> rest;
  if (o.test_fraction > 0.0) {
    auto [tr, te] = split(ds, o.test_fraction, o.seed);
    train = std::move(tr);
    rest.push_back(std::move(te));
  }
  if (o.standardize) {
    auto [tr, others] = standardize(train, rest);
    train = std::move(tr);
    rest = std::move(others);
  }

  json summary = {{"config", to_json(o)}, {"provenance", ds.provenance}};
  save_dataset(o.out, train);
  summary["out"] = {{"path", o.out}, {"n", train.size()}, {"dim", train.dim},
                    {"n_plus", train.count(1)}, {"n_minus", train.count(-1)},
                    {"hash", git_blob_hash(read_file(o.out))}};
  if (!rest.empty()) {
    save_dataset(o.test_out, rest.front());
    summary["test_out"] = {{"path", o.test_out}, {"n", rest.front().size()},
                           {"n_plus", rest.front().count(1)},
                           {"n_minus", rest.front().count(-1)},
                           {"hash", git_blob_hash(read_file(o.test_out))}};
  }
  write_file(o.out + ".json", dump(summary));
  return summary;
}

// ---------------------------------------------------------------------------
// train

json run_train(const TrainOptions& o) {
  require_existing(o.train_data, "training dataset");
  if (!o.test_data.empty()) require_existing(o.test_data, "test dataset");
  require_path(o.out, "--out");
  o.train.validate();
  if (!(o.init_scale > 0.0) || !std::isfinite(o.init_scale)) {
    throw UsageError("init scale must be positive");
  }
  if (o.hidden.empty()) throw UsageError("at least one hidden layer is required");

  const json config = to_json(o);
  if (o.dry_run) return {{"config", config}, {"dry_run", true}};

  const Dataset train = load_dataset(o.train_data);
  train.require_both_classes();
  std::optional<Dataset> test;
  if (!o.test_data.empty()) {
    test = load_dataset(o.test_data);
    if (test->dim != train.dim) throw UsageError("train and test dimensions differ");
  }

  NetworkConfig net{train.dim, o.hidden};
  net.validate();
  Parameters init = init_network(net, o.init_seed, o.init_scale);
  auto [params, history] = train_sgd(std::move(init), train, test ? &*test : nullptr, o.train);

  save_checkpoint(o.out, params);
  const std::string hash = git_blob_hash(read_file(o.out));

  json meta = {{"config", config},
               {"checkpoint_hash", hash},
               {"network", {{"input_dim", net.input_dim}, {"hidden_sizes", net.hidden_sizes},
                            {"parameter_count", net.parameter_count()}}},
               {"train_provenance", train.provenance},
               {"history", {{"train_loss", history.train_loss},
                            {"train_accuracy", history.train_accuracy},
                            {"test_accuracy", history.test_accuracy}}},
               {"final_train_accuracy", evaluate(params, train)}};
  if (test) {
    meta["test_provenance"] = test->provenance;
    meta["final_test_accuracy"] = evaluate(params, *test);
  }
  write_file(o.out + ".json", dump(meta));
  return meta;
}

// ---------------------------------------------------------------------------
// gap

json run_gap(const GapOptions& o) {
  require_path(o.out_dir, "--out-dir");
  if (o.kernels.empty()) throw UsageError("no kernels requested");
  for (const auto& k : o.kernels) {
    const auto& names = known_kernels();
    if (std::find(names.begin(), names.end(), k) == names.end()) {
      throw UsageError("unknown kernel '" + k + "'");
    }
  }
  if (o.normalize != "off" && o.normalize != "on" && o.normalize != "both") {
    throw UsageError("--normalize must be off, on or both");
  }
  check_fraction(o.keep_fraction, "keep fraction");
  if (o.bins == 0) throw UsageError("histogram needs at least one bin");

  Loaded in = load_inputs(o.checkpoint, o.data);
  const Dataset ds = limit_samples(in.data, o.max_samples, o.seed);
  const LabeledSet set(in.params, ds);
  const json config = to_json(o);
  const auto pre = preamble(config, in.hash);

  const bool want_raw = o.normalize != "on";
  const bool want_norm = o.normalize != "off";
  auto wants = [&](const char* name) {
    return std::find(o.kernels.begin(), o.kernels.end(), name) != o.kernels.end();
  };

  const Metric block = Metric::block_diagonal(in.params);
  std::vector<Metric> metrics;
  std::vector<std::string> metric_names;
  if (wants("block") || wants("sparse") || wants("masked")) {
    metrics.push_back(block);
    metric_names.push_back("block");
  }
  if (wants("diagonal")) {
    metrics.push_back(Metric::diagonal(in.params));
    metric_names.push_back("diagonal");
  }

  json selection = json::object();
  fs::create_directories(o.out_dir);
  if (wants("sparse") || wants("masked")) {
    if (!o.keep_file.empty()) require_existing(o.keep_file, "keep-set file");
    if (!o.mask_file.empty()) require_existing(o.mask_file, "mask file");
    const bool fit = (wants("sparse") && o.keep_file.empty()) || (wants("masked") && o.mask_file.empty());
    const std::optional<PsiSummary> psi =
        fit ? std::optional<PsiSummary>(psi_accumulate(set, block, true)) : std::nullopt;
    if (wants("sparse")) {
      const auto keep = o.keep_file.empty()
                            ? select_keep_set(importance(*psi), o.keep_fraction, o.per_layer)
                            : parse_index_list(read_file(o.keep_file));
      metrics.push_back(metric_reduce(block, keep));
      metric_names.push_back("sparse");
      write_file(fs::path(o.out_dir) / "keep_set_sparse.txt", format_index_list(keep));
      selection["sparse"] = {{"kept_params", keep.size()}, {"total_params", block.size()}};
    }
    if (wants("masked")) {
      const auto pairs = o.mask_file.empty() ? select_mask(*psi, o.mask_threshold)
                                             : parse_pair_list(read_file(o.mask_file));
      metrics.push_back(metric_mask(block, pairs));
      metric_names.push_back("masked");
      write_file(fs::path(o.out_dir) / "mask_masked.txt", format_pair_list(metrics.back().mask()));
      selection["masked"] = {{"masked_pairs", metrics.back().mask().size()}};
    }
  }

  auto raw_metric = make_metric_kernels(set, metrics, false);
  std::vector<double> block_inv;
  if (!metrics.empty() && metric_names.front() == "block") block_inv = inverse_norms(*raw_metric.front());

  json summary = {{"config", config}, {"checkpoint_hash", in.hash}, {"n_samples", set.size()},
                  {"n_plus", set.count(1)}, {"n_minus", set.count(-1)},
                  {"weight_layers", in.params.layer_count()}, {"selection", selection},
                  {"kernels", json::object()}};

  auto emit = [&](const std::string& name, bool normalized, const PairKernel& k) {
    const std::string stem = name + (normalized ? "_normalized" : "");
    const GapReport report = gap_estimate(k, set.labels());
    json j = to_json(report);
    j["kernel"] = name;
    j["normalized"] = normalized;
    json file = j;
    file["config"] = config;
    file["checkpoint_hash"] = in.hash;
    write_file(fs::path(o.out_dir) / ("gap_" + stem + ".json"), dump(file));
    const HistogramData hist = pair_histogram(k, set.labels(), stem, o.bins);
    write_file(fs::path(o.out_dir) / ("hist_" + stem + ".csv"), histogram_csv(hist, pre));
    summary["kernels"][stem] = j;
  };

  for (const auto& name : o.kernels) {
    if (name == "output" || name == "last-layer") {
      auto make = name == "output" ? make_output_kernel : make_last_layer_kernel;
      if (want_raw) emit(name, false, *make(set, false, kDefaultNormEps));
      if (want_norm) emit(name, true, *make(set, true, kDefaultNormEps));
      continue;
    }
    const auto slot = static_cast<std::size_t>(
        std::find(metric_names.begin(), metric_names.end(), name) - metric_names.begin());
    const PairKernel& raw = *raw_metric[slot];
    if (want_raw) emit(name, false, raw);
    if (!want_norm) continue;
    const bool sparse_like = name == "sparse" || name == "masked";
    if (sparse_like && !o.renormalize) {
      emit(name, true, *raw.rescaled(block_inv));
    } else {
      emit(name, true, *raw.normalized_copy());
    }
  }

  write_file(fs::path(o.out_dir) / "summary.json", dump(summary));
  return summary;
}

// ---------------------------------------------------------------------------
// prune-sweep

namespace {

double gamma_of(const PairKernel& k, const LabeledSet& set) {
  return gap_estimate(k, set.labels()).gamma;
}

}  // namespace

json run_prune_sweep(const SweepOptions& o) {
  require_path(o.out_dir, "--out-dir");
  if (o.fractions.empty()) throw UsageError("no keep fractions given");
  for (double f : o.fractions) check_fraction(f, "keep fraction");
  if (o.seeds.empty()) throw UsageError("no seeds given");
  if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) {
    throw UsageError("test fraction must lie strictly between 0 and 1");
  }
  if (o.bins == 0) throw UsageError("histogram needs at least one bin");

  Loaded in = load_inputs(o.checkpoint, o.data);
  const Dataset all = limit_samples(in.data, o.max_samples, o.seeds.front());
  const json config = to_json(o);
  const auto pre = preamble(config, in.hash);
  const Metric block = Metric::block_diagonal(in.params);
  fs::create_directories(o.out_dir);

  std::ostringstream csv;
  csv.precision(17);
  for (const auto& line : pre) csv << "# " << line << '\n';
  csv << "seed,keep_fraction,kept_params,gamma_train_unnorm,gamma_test_unnorm,"
         "gamma_train_norm,gamma_test_norm,gamma_train_renorm,gamma_test_renorm,"
         "base_train_unnorm,base_test_unnorm,base_train_norm,base_test_norm,psi_gamma_train\n";

  json seeds_json = json::array();
  json masked_json = json::array();
  std::size_t seeds_improved = 0;
  std::size_t seeds_improved_unnorm = 0;
  std::size_t seeds_improved_renorm = 0;

  for (std::size_t s = 0; s < o.seeds.size(); ++s) {
    const std::uint64_t seed = o.seeds[s];
    const auto [train_ds, test_ds] = split(all, o.test_fraction, seed);
    const LabeledSet train(in.params, train_ds);
    const LabeledSet test(in.params, test_ds);

    const PsiSummary psi = psi_accumulate(train, block, true);
    const ImportanceReport imp = importance(psi);

    std::vector<Metric> metrics{block};
    std::vector<std::vector<std::size_t>> keeps;
    for (double f : o.fractions) {
      keeps.push_back(select_keep_set(imp, f, o.per_layer));
      metrics.push_back(metric_reduce(block, keeps.back()));
    }
    auto train_k = make_metric_kernels(train, metrics, false);
    auto test_k = make_metric_kernels(test, metrics, false);
    const auto train_inv = inverse_norms(*train_k.front());
    const auto test_inv = inverse_norms(*test_k.front());

    const double base_train = gamma_of(*train_k.front(), train);
    const double base_test = gamma_of(*test_k.front(), test);
    const double base_train_norm = gamma_of(*train_k.front()->rescaled(train_inv), train);
    const double base_test_norm = gamma_of(*test_k.front()->rescaled(test_inv), test);

    json rows = json::array();
    bool improved = false;
    bool improved_unnorm = false;
    bool improved_renorm = false;
    for (std::size_t q = 0; q < o.fractions.size(); ++q) {
      const PairKernel& tr = *train_k[q + 1];
      const PairKernel& te = *test_k[q + 1];
      const auto tr_norm = tr.rescaled(train_inv);
      const auto te_norm = te.rescaled(test_inv);
      const auto tr_renorm = tr.normalized_copy();
      const auto te_renorm = te.normalized_copy();

      const double g_tr = gamma_of(tr, train), g_te = gamma_of(te, test);
      const double g_tr_n = gamma_of(*tr_norm, train), g_te_n = gamma_of(*te_norm, test);
      const double g_tr_r = gamma_of(*tr_renorm, train), g_te_r = gamma_of(*te_renorm, test);
      const double psi_gamma =
          o.renormalize ? psi_accumulate(train, metrics[q + 1], true).gap()
                        : PsiSummary::from_means(metrics[q + 1],
                                                 {psi.mu_plus().begin(), psi.mu_plus().end()},
                                                 {psi.mu_minus().begin(), psi.mu_minus().end()},
                                                 psi.count_plus(), psi.count_minus(), true)
                              .gap();

      const double held_out = o.renormalize ? g_te_r : g_te_n;
      if (held_out > base_test_norm) improved = true;
      if (g_te > base_test) improved_unnorm = true;
      if (g_te_r > base_test_norm) improved_renorm = true;

      csv << seed << ',' << o.fractions[q] << ',' << keeps[q].size() << ',' << g_tr << ','
          << g_te << ',' << g_tr_n << ',' << g_te_n << ',' << g_tr_r << ',' << g_te_r << ','
          << base_train << ',' << base_test << ',' << base_train_norm << ',' << base_test_norm
          << ',' << psi_gamma << '\n';
      rows.push_back({{"keep_fraction", o.fractions[q]}, {"kept_params", keeps[q].size()},
                      {"gamma_test_norm", g_te_n}, {"gamma_test_renorm", g_te_r},
                      {"gamma_test_unnorm", g_te}});

      if (s == 0) {
        const std::string tag = fraction_tag(o.fractions[q]);
        const auto& held = o.renormalize ? *te_renorm : *te_norm;
        write_file(fs::path(o.out_dir) / ("hist_sparse_" + tag + "_normalized.csv"),
                   histogram_csv(pair_histogram(held, test.labels(),
                                                "sparse_" + tag + "_normalized", o.bins),
                                 pre));
      }
    }
    if (s == 0) {
      write_file(fs::path(o.out_dir) / "hist_block.csv",
                 histogram_csv(pair_histogram(*test_k.front(), test.labels(), "block", o.bins),
                               pre));
      write_file(fs::path(o.out_dir) / "hist_block_normalized.csv",
                 histogram_csv(pair_histogram(*test_k.front()->rescaled(test_inv), test.labels(),
                                              "block_normalized", o.bins),
                               pre));
    }
    seeds_improved += improved ? 1 : 0;
    seeds_improved_unnorm += improved_unnorm ? 1 : 0;
    seeds_improved_renorm += improved_renorm ? 1 : 0;
    seeds_json.push_back({{"seed", seed}, {"improved", improved},
                          {"improved_unnorm", improved_unnorm},
                          {"improved_renorm", improved_renorm},
                          {"base_test_norm", base_test_norm}, {"base_test_unnorm", base_test},
                          {"rows", rows}});

    if (o.mask_negative) {
      const PsiSummary raw_psi = psi_accumulate(train, block, false);
      const auto pairs = select_negative_pairs(raw_psi);
      const Metric masked = metric_mask(block, pairs);
      const auto tr_m = make_metric_kernel(train, masked, false);
      const auto te_m = make_metric_kernel(test, masked, false);
      const double g_tr = gamma_of(*tr_m, train);
      masked_json.push_back({{"seed", seed},
                             {"masked_pairs", pairs.size()},
                             {"gamma_train_unnorm", g_tr},
                             {"gamma_test_unnorm", gamma_of(*te_m, test)},
                             {"base_train_unnorm", base_train},
                             {"base_test_unnorm", base_test},
                             {"train_not_decreased", g_tr >= base_train}});
    }
  }

  write_file(fs::path(o.out_dir) / "sweep.csv", csv.str());

  const bool majority = 2 * seeds_improved > o.seeds.size();
  json report = {
      {"config", config},
      {"checkpoint_hash", in.hash},
      {"n_samples", all.size()},
      {"seeds", seeds_json},
      {"verdict",
       {{"criterion",
         "held-out normalized gamma of the elementwise sparse similarity exceeds the "
         "block-diagonal baseline for at least one keep fraction"},
        {"kernel", o.renormalize ? "sparse, own-norm normalization" : "sparse, block-norm normalization"},
        {"seeds_improved", seeds_improved},
        {"seeds_total", o.seeds.size()},
        {"majority", majority},
        {"seeds_improved_unnorm", seeds_improved_unnorm},
        {"seeds_improved_renorm", seeds_improved_renorm},
        {"gap_increased", majority}}},
      {"caveat", kCaveat}};
  if (o.mask_negative) report["masked_negative"] = masked_json;
  write_file(fs::path(o.out_dir) / "sweep.json", dump(report));
  return report;
}

// ---------------------------------------------------------------------------
// concentration

json run_concentration(const ConcentrationOptions& o) {
  require_path(o.out, "--out");
  check_fraction(o.keep_fraction, "keep fraction");
  if (o.n_samples < kMinConcentrationSamples) {
    throw UsageError("n_samples must be at least " + std::to_string(kMinConcentrationSamples));
  }
  if (o.deltas.empty()) throw UsageError("no deltas given");
  for (double d : o.deltas) {
    if (!(d > 0.0)) throw UsageError("every delta must be positive");
  }

  Loaded in = load_inputs(o.checkpoint, o.data);
  if (o.probe_index >= in.data.size()) {
    throw UsageError("probe index " + std::to_string(o.probe_index) + " is out of range");
  }
  const auto probe = in.data.row(o.probe_index);
  const ActivationPattern pattern = activation_pattern(forward(in.params, probe));
  const SensitivityMatrix s = SensitivityMatrix::from_pattern(in.params, pattern);

  const LabeledSet set(in.params, in.data);
  const Metric block = Metric::block_diagonal(in.params);
  const auto keep = select_keep_set(importance(psi_accumulate(set, block, true)),
                                    o.keep_fraction, o.per_layer);
  std::vector<std::size_t> all(s.column_count());
  std::iota(all.begin(), all.end(), std::size_t{0});

  const auto full = concentration_check(s, all, o.deltas, o.n_samples, o.seed);
  const auto reduced = concentration_check(s, keep, o.deltas, o.n_samples, o.seed);

  auto annotate = [](const ConcentrationReport& r) {
    json j = to_json(r);
    bool ok = true;
    for (const auto& row : r.rows) {
      ok = ok && row.tail_emp <= row.tail_bound + monte_carlo_slack(row.tail_bound, row.n_samples);
    }
    j["within_bound"] = ok;
    return j;
  };
  json out = {{"config", to_json(o)},
              {"checkpoint_hash", in.hash},
              {"probe_output", forward(in.params, probe).output},
              {"full", annotate(full)},
              {"reduced", annotate(reduced)}};
  write_file(o.out, dump(out));
  return out;
}

}  // namespace gradsim::cli
