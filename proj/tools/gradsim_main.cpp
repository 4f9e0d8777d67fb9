// gradsim: train bias-free ReLU nets and measure gradient-space similarity gaps.

#include <cstdio>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "gradsim/errors.hpp"
#include "gradsim/experiment.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

void add_train(CLI::App& app, gradsim::cli::TrainOptions& o, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("train", "Train a network and write a checkpoint");
  cmd->add_option("--train-data", o.train_data, "Training dataset cache")->required();
  cmd->add_option("--test-data", o.test_data, "Held-out dataset cache");
  cmd->add_option("--out", o.out, "Checkpoint path; metadata goes to <out>.json")->required();
  cmd->add_option("--hidden", o.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
  cmd->add_option("--init-scale", o.init_scale, "Uniform init bound times 1/sqrt(fan_in)")
      ->capture_default_str();
  cmd->add_option("--init-seed", o.init_seed)->capture_default_str();
  cmd->add_option("--epochs", o.train.epochs)->capture_default_str();
  cmd->add_option("--batch-size", o.train.batch_size)->capture_default_str();
  cmd->add_option("--lr", o.train.learning_rate)->capture_default_str();
  cmd->add_option("--momentum", o.train.momentum)->capture_default_str();
  cmd->add_option("--seed", o.train.seed, "Shuffling seed")->capture_default_str();
  cmd->add_option("--eval-every", o.train.eval_every)->capture_default_str();
  cmd->add_flag("--dry-run", o.dry_run, "Validate the configuration and exit");
  cmd->callback([&] { run = [&] { std::cout << gradsim::cli::run_train(o).dump(2) << '\n'; }; });
}

void add_gap(CLI::App& app, gradsim::cli::GapOptions& o, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("gap", "Similarity gap and pair histograms per kernel");
  cmd->add_option("--checkpoint", o.checkpoint)->required();
  cmd->add_option("--data", o.data)->required();
  cmd->add_option("--out-dir", o.out_dir)->required();
  cmd->add_option("--kernels", o.kernels, "output,last-layer,block,diagonal,sparse,masked")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--normalize", o.normalize, "off, on or both")->capture_default_str();
  cmd->add_option("--keep-fraction", o.keep_fraction)->capture_default_str();
  cmd->add_flag("--per-layer,!--global", o.per_layer, "Rank importance per layer")
      ->capture_default_str();
  cmd->add_flag("--renormalize", o.renormalize, "Normalize sparse kernels by their own norm");
  cmd->add_option("--mask-threshold", o.mask_threshold)->capture_default_str();
  cmd->add_option("--keep-file", o.keep_file, "Flat parameter indices, one per line");
  cmd->add_option("--mask-file", o.mask_file, "Index pairs \"i j\", one per line");
  cmd->add_option("--bins", o.bins)->capture_default_str();
  cmd->add_option("--max-samples", o.max_samples, "Stratified subsample, 0 = all")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed)->capture_default_str();
  cmd->callback([&] { run = [&] { std::cout << gradsim::cli::run_gap(o).dump(2) << '\n'; }; });
}

void add_sweep(CLI::App& app, gradsim::cli::SweepOptions& o, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("prune-sweep", "Importance pruning sweep over keep fractions");
  cmd->add_option("--checkpoint", o.checkpoint)->required();
  cmd->add_option("--data", o.data)->required();
  cmd->add_option("--out-dir", o.out_dir)->required();
  cmd->add_option("--fractions", o.fractions)->delimiter(',')->capture_default_str();
  cmd->add_option("--seeds", o.seeds)->delimiter(',')->capture_default_str();
  cmd->add_option("--test-fraction", o.test_fraction)->capture_default_str();
  cmd->add_flag("--per-layer,!--global", o.per_layer)->capture_default_str();
  cmd->add_flag("--renormalize", o.renormalize);
  cmd->add_flag("--mask-negative", o.mask_negative, "Also mask negative pairs (small nets)");
  cmd->add_option("--bins", o.bins)->capture_default_str();
  cmd->add_option("--max-samples", o.max_samples)->capture_default_str();
  cmd->callback(
      [&] { run = [&] { std::cout << gradsim::cli::run_prune_sweep(o).dump(2) << '\n'; }; });
}

void add_concentration(CLI::App& app, gradsim::cli::ConcentrationOptions& o,
                       std::function<void()>& run) {
  auto* cmd = app.add_subcommand("concentration", "Gaussian tail check of ||S^T x||^2");
  cmd->add_option("--checkpoint", o.checkpoint)->required();
  cmd->add_option("--data", o.data)->required();
  cmd->add_option("--out", o.out)->required();
  cmd->add_option("--probe-index", o.probe_index)->capture_default_str();
  cmd->add_option("--keep-fraction", o.keep_fraction)->capture_default_str();
  cmd->add_flag("--per-layer,!--global", o.per_layer)->capture_default_str();
  cmd->add_option("--deltas", o.deltas)->delimiter(',')->capture_default_str();
  cmd->add_option("--n-samples", o.n_samples)->capture_default_str();
  cmd->add_option("--seed", o.seed)->capture_default_str();
  cmd->callback(
      [&] { run = [&] { std::cout << gradsim::cli::run_concentration(o).dump(2) << '\n'; }; });
}

void add_dataset(CLI::App& app, gradsim::cli::DatasetCacheOptions& o, std::function<void()>& run) {
  auto* ds = app.add_subcommand("dataset", "Dataset utilities");
  ds->require_subcommand(1);
  auto* cmd = ds->add_subcommand("cache", "Build a binary dataset cache");
  cmd->add_option("--source", o.source, "synthetic or cifar10")->capture_default_str();
  cmd->add_option("--dim", o.dim)->capture_default_str();
  cmd->add_option("--n-per-class", o.n_per_class)->capture_default_str();
  cmd->add_option("--mean-shift", o.mean_shift)->capture_default_str();
  cmd->add_option("--seed", o.seed)->capture_default_str();
  cmd->add_option("--cifar-files", o.cifar_files)->delimiter(',');
  cmd->add_option("--class-a", o.class_a, "CIFAR-10 class mapped to +1")->capture_default_str();
  cmd->add_option("--class-b", o.class_b, "CIFAR-10 class mapped to -1")->capture_default_str();
  cmd->add_flag("--standardize,!--no-standardize", o.standardize)->capture_default_str();
  cmd->add_option("--test-fraction", o.test_fraction)->capture_default_str();
  cmd->add_option("--out", o.out)->required();
  cmd->add_option("--test-out", o.test_out);
  cmd->callback(
      [&] { run = [&] { std::cout << gradsim::cli::run_dataset_cache(o).dump(2) << '\n'; }; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradsim: gradient-space similarity for bias-free ReLU networks"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  gradsim::cli::TrainOptions train;
  gradsim::cli::GapOptions gap;
  gradsim::cli::SweepOptions sweep;
  gradsim::cli::ConcentrationOptions conc;
  gradsim::cli::DatasetCacheOptions cache;
  std::function<void()> run;
  add_train(app, train, run);
  add_gap(app, gap, run);
  add_sweep(app, sweep, run);
  add_concentration(app, conc, run);
  add_dataset(app, cache, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run) run();
    return 0;
  } catch (const gradsim::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
