#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gradsim {

/// Shape of a bias-free fully connected ReLU network with a scalar output.
struct NetworkConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes;

  /// Throws UsageError on a zero dimension or an empty hidden list.
  void validate() const;

  std::size_t hidden_layer_count() const { return hidden_sizes.size(); }
  /// Number of weight matrices P = L + 1 (the last one is the output row).
  std::size_t weight_layer_count() const { return hidden_sizes.size() + 1; }
  std::size_t neuron_count() const;
  std::size_t parameter_count() const;

  bool operator==(const NetworkConfig&) const = default;
};

/// Flat weight storage. Layer-major, each matrix row-major with shape
/// (fan_out x fan_in); the final layer is the 1 x N^L output row.
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(NetworkConfig config);
  Parameters(NetworkConfig config, std::vector<double> flat);

  const NetworkConfig& config() const { return config_; }
  std::size_t size() const { return flat_.size(); }
  std::size_t layer_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  std::span<const double> flat() const { return flat_; }
  std::span<double> flat() { return flat_; }

  std::span<const double> layer(std::size_t k) const;
  std::span<double> layer(std::size_t k);
  std::size_t layer_offset(std::size_t k) const { return offsets_[k]; }
  std::size_t layer_size(std::size_t k) const { return offsets_[k + 1] - offsets_[k]; }
  /// Offsets of every layer plus the total size (length P + 1).
  std::span<const std::size_t> layer_offsets() const { return offsets_; }
  std::size_t rows(std::size_t k) const;
  std::size_t cols(std::size_t k) const;

  /// 0-based weight layer containing flat index i.
  std::size_t layer_of(std::size_t i) const;

  std::span<const double> output_weights() const { return layer(layer_count() - 1); }

 private:
  NetworkConfig config_;
  std::vector<double> flat_;
  std::vector<std::size_t> offsets_;
};

/// Uniform init in [-scale/sqrt(fan_in), scale/sqrt(fan_in)], reproducible per seed.
Parameters init_network(const NetworkConfig& config, std::uint64_t seed, double scale = 1.0);

struct ForwardTrace {
  std::vector<std::vector<double>> preactivations;  // z^k
  std::vector<std::vector<double>> activations;     // h^k = max(0, z^k)
  double output = 0.0;

  std::span<const double> last_hidden() const { return activations.back(); }
};

ForwardTrace forward(const Parameters& params, std::span<const double> x);

/// One sign per hidden neuron, +1 iff the preactivation is strictly positive.
struct ActivationPattern {
  std::vector<std::int8_t> signs;

  bool operator==(const ActivationPattern&) const = default;
};

ActivationPattern activation_pattern(const ForwardTrace& trace);

/// df/dtheta in the flat parameter layout, ReLU subgradient 0 at z = 0.
std::vector<double> param_gradient(const Parameters& params, const ForwardTrace& trace,
                                   std::span<const double> x);

/// Convenience: forward pass followed by param_gradient.
std::vector<double> param_gradient(const Parameters& params, std::span<const double> x);

/// Central differences over every parameter. Test oracle; eps must be positive.
std::vector<double> finite_diff_gradient(const Parameters& params, std::span<const double> x,
                                         double eps);

/// Sum of theta_i * g_i over each weight layer. Every entry equals f(x) for a
/// bias-free ReLU network.
std::vector<double> layer_scalars(const Parameters& params, std::span<const double> gradient);

}  // namespace gradsim
