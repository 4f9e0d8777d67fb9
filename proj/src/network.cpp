#include "gradsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "gradsim/errors.hpp"

namespace gradsim {

void NetworkConfig::validate() const {
  if (input_dim == 0) throw UsageError("network input dimension must be positive");
  if (hidden_sizes.empty()) throw UsageError("network needs at least one hidden layer");
  for (std::size_t n : hidden_sizes) {
    if (n == 0) throw UsageError("hidden layer width must be positive");
  }
}

std::size_t NetworkConfig::neuron_count() const {
  return std::accumulate(hidden_sizes.begin(), hidden_sizes.end(), std::size_t{0});
}

std::size_t NetworkConfig::parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = input_dim;
  for (std::size_t n : hidden_sizes) {
    count += n * fan_in;
    fan_in = n;
  }
  return count + fan_in;
}

Parameters::Parameters(NetworkConfig config) : config_(std::move(config)) {
  config_.validate();
  offsets_.push_back(0);
  std::size_t fan_in = config_.input_dim;
  for (std::size_t n : config_.hidden_sizes) {
    offsets_.push_back(offsets_.back() + n * fan_in);
    fan_in = n;
  }
  offsets_.push_back(offsets_.back() + fan_in);
  flat_.assign(offsets_.back(), 0.0);
}

Parameters::Parameters(NetworkConfig config, std::vector<double> flat)
    : Parameters(std::move(config)) {
  if (flat.size() != flat_.size()) {
    throw std::invalid_argument("parameter vector has length " + std::to_string(flat.size()) +
                                ", network expects " + std::to_string(flat_.size()));
  }
  flat_ = std::move(flat);
}

std::span<const double> Parameters::layer(std::size_t k) const {
  return std::span<const double>(flat_).subspan(offsets_[k], layer_size(k));
}

std::span<double> Parameters::layer(std::size_t k) {
  return std::span<double>(flat_).subspan(offsets_[k], layer_size(k));
}

std::size_t Parameters::rows(std::size_t k) const {
  return k < config_.hidden_sizes.size() ? config_.hidden_sizes[k] : 1;
}

std::size_t Parameters::cols(std::size_t k) const {
  return k == 0 ? config_.input_dim : config_.hidden_sizes[k - 1];
}

std::size_t Parameters::layer_of(std::size_t i) const {
  if (i >= flat_.size()) throw std::out_of_range("parameter index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

Parameters init_network(const NetworkConfig& config, std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw UsageError("init scale must be positive");
  Parameters params(config);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < params.layer_count(); ++k) {
    const double bound = scale / std::sqrt(static_cast<double>(params.cols(k)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : params.layer(k)) w = dist(rng);
  }
  return params;
}

namespace {

void check_input(const Parameters& params, std::span<const double> x) {
  if (x.size() != params.config().input_dim) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                ", network expects " +
                                std::to_string(params.config().input_dim));
  }
}

}  // namespace

ForwardTrace forward(const Parameters& params, std::span<const double> x) {
  check_input(params, x);
  ForwardTrace trace;
  const std::size_t hidden = params.config().hidden_layer_count();
  trace.preactivations.reserve(hidden);
  trace.activations.reserve(hidden);

  std::span<const double> in = x;
  for (std::size_t k = 0; k < hidden; ++k) {
    const auto w = params.layer(k);
    const std::size_t rows = params.rows(k);
    const std::size_t cols = params.cols(k);
    std::vector<double> z(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = w.data() + r * cols;
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
      z[r] = acc;
    }
    std::vector<double> h(rows);
    std::transform(z.begin(), z.end(), h.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
    trace.preactivations.push_back(std::move(z));
    trace.activations.push_back(std::move(h));
    in = trace.activations.back();
  }

  const auto out = params.output_weights();
  trace.output = std::inner_product(out.begin(), out.end(), in.begin(), 0.0);
  return trace;
}

ActivationPattern activation_pattern(const ForwardTrace& trace) {
  ActivationPattern pattern;
  for (const auto& z : trace.preactivations) {
    for (double v : z) pattern.signs.push_back(v > 0.0 ? 1 : -1);
  }
  return pattern;
}

std::vector<double> param_gradient(const Parameters& params, const ForwardTrace& trace,
                                   std::span<const double> x) {
  check_input(params, x);
  const std::size_t hidden = params.config().hidden_layer_count();
  if (trace.activations.size() != hidden) {
    throw std::invalid_argument("trace does not match the network depth");
  }
  std::vector<double> grad(params.size(), 0.0);

  // Output row: df/dtheta_L = h^L.
  const auto& h_last = trace.activations.back();
  std::copy(h_last.begin(), h_last.end(), grad.begin() + params.layer_offset(hidden));

  // Backpropagated multipliers delta^k = df/dz^k.
  const auto out = params.output_weights();
  std::vector<double> delta(out.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    delta[r] = trace.preactivations.back()[r] > 0.0 ? out[r] : 0.0;
  }

  for (std::size_t k = hidden; k-- > 0;) {
    const std::size_t rows = params.rows(k);
    const std::size_t cols = params.cols(k);
    std::span<const double> in = k == 0 ? x : std::span<const double>(trace.activations[k - 1]);
    double* g = grad.data() + params.layer_offset(k);
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] = d * in[c];
    }
    if (k == 0) break;

    const auto w = params.layer(k);
    std::vector<double> next(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) next[c] += row[c] * d;
    }
    const auto& z_prev = trace.preactivations[k - 1];
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(z_prev[c] > 0.0)) next[c] = 0.0;
    }
    delta = std::move(next);
  }
  return grad;
}

std::vector<double> param_gradient(const Parameters& params, std::span<const double> x) {
  return param_gradient(params, forward(params, x), x);
}

std::vector<double> finite_diff_gradient(const Parameters& params, std::span<const double> x,
                                         double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  Parameters probe = params;
  std::vector<double> grad(params.size());
  auto flat = probe.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + eps;
    const double up = forward(probe, x).output;
    flat[i] = saved - eps;
    const double down = forward(probe, x).output;
    flat[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

std::vector<double> layer_scalars(const Parameters& params, std::span<const double> gradient) {
  if (gradient.size() != params.size()) {
    throw std::invalid_argument("gradient length does not match the parameter layout");
  }
  std::vector<double> s(params.layer_count(), 0.0);
  const auto theta = params.flat();
  for (std::size_t k = 0; k < s.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = params.layer_offset(k); i < params.layer_offset(k + 1); ++i) {
      acc += theta[i] * gradient[i];
    }
    s[k] = acc;
  }
  return s;
}

}  // namespace gradsim
