#include "gradsim/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "gradsim/errors.hpp"

namespace gradsim {

void TrainConfig::validate() const {
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (eval_every == 0) throw UsageError("eval_every must be positive");
}

double logistic_loss(double f, int y) {
  const double margin = static_cast<double>(y) * f;
  if (margin > 30.0) return std::exp(-margin);
  if (margin < -30.0) return -margin + std::log1p(std::exp(margin));
  return std::log1p(std::exp(-margin));
}

double logistic_loss_slope(double f, int y) {
  const double margin = static_cast<double>(y) * f;
  // -y * sigmoid(-margin), written to avoid overflow in exp.
  const double s = margin >= 0.0 ? std::exp(-margin) / (1.0 + std::exp(-margin))
                                 : 1.0 / (1.0 + std::exp(margin));
  return -static_cast<double>(y) * s;
}

double batch_loss(const Parameters& params, const Dataset& ds, std::span<const std::size_t> rows) {
  double total = 0.0;
  for (std::size_t r : rows) total += logistic_loss(forward(params, ds.row(r)).output, ds.labels[r]);
  return total / static_cast<double>(rows.size());
}

namespace {

// Accumulates the mean loss gradient into `grad` and returns the summed loss.
double accumulate_batch(const Parameters& params, const Dataset& ds,
                        std::span<const std::size_t> rows, std::vector<double>& grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (std::size_t r : rows) {
    const auto x = ds.row(r);
    const auto trace = forward(params, x);
    loss += logistic_loss(trace.output, ds.labels[r]);
    const double slope = logistic_loss_slope(trace.output, ds.labels[r]) * inv;
    if (slope == 0.0) continue;
    const auto g = param_gradient(params, trace, x);
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += slope * g[i];
  }
  return loss;
}

}  // namespace

std::vector<double> batch_loss_gradient(const Parameters& params, const Dataset& ds,
                                        std::span<const std::size_t> rows) {
  std::vector<double> grad(params.size());
  accumulate_batch(params, ds, rows, grad);
  return grad;
}

std::pair<Parameters, TrainHistory> train_sgd(Parameters params, const Dataset& train,
                                              const Dataset* test, const TrainConfig& cfg) {
  cfg.validate();
  train.validate();
  if (train.size() == 0) throw UsageError("training set is empty");
  if (train.dim != params.config().input_dim || (test && test->dim != train.dim)) {
    throw UsageError("dataset dimension does not match the network");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad(params.size(), 0.0);
  TrainHistory history;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const double loss = accumulate_batch(params, train, rows, grad);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += loss;
      auto theta = params.flat();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * grad[i];
        theta[i] += velocity[i];
      }
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    const bool eval = (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs;
    history.train_accuracy.push_back(eval ? evaluate(params, train) : kNaN);
    history.test_accuracy.push_back(eval && test ? evaluate(params, *test) : kNaN);
  }
  return {std::move(params), std::move(history)};
}

double evaluate(const Parameters& params, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int predicted = forward(params, ds.row(i)).output > 0.0 ? 1 : -1;
    if (predicted == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace gradsim
