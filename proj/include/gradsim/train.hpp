#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gradsim/dataset.hpp"
#include "gradsim/network.hpp"

namespace gradsim {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;

  void validate() const;
};

/// One entry per epoch; accuracies are NaN on epochs that were not evaluated
/// (and test accuracy is NaN throughout without a test set).
struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> train_accuracy;
  std::vector<double> test_accuracy;
};

/// ln(1 + exp(-y f)).
double logistic_loss(double f, int y);
/// d/df of logistic_loss.
double logistic_loss_slope(double f, int y);

/// Mean logistic loss over the given rows.
double batch_loss(const Parameters& params, const Dataset& ds, std::span<const std::size_t> rows);
/// Gradient of batch_loss with respect to the flat parameters.
std::vector<double> batch_loss_gradient(const Parameters& params, const Dataset& ds,
                                        std::span<const std::size_t> rows);

/// Mini-batch SGD with momentum on the mean logistic loss. Deterministic per
/// seed. Throws NumericalError on a non-finite loss.
std::pair<Parameters, TrainHistory> train_sgd(Parameters params, const Dataset& train,
                                              const Dataset* test, const TrainConfig& cfg);

/// Fraction of samples with sgn(f) == y, where f = 0 counts as -1.
double evaluate(const Parameters& params, const Dataset& ds);

}  // namespace gradsim
