#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the structured code paths it is compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gradsim/network.hpp"

namespace oracle {

using gradsim::NetworkConfig;
using gradsim::Parameters;

inline Parameters identity_net() {
  return Parameters(NetworkConfig{2, {2}}, {1, 0, 0, 1, 1, -1});
}

inline Parameters random_net(std::mt19937_64& rng, std::size_t max_d = 20, std::size_t max_layers = 3,
                             std::size_t max_width = 16) {
  std::uniform_int_distribution<std::size_t> d(1, max_d), layers(1, max_layers), width(1, max_width);
  NetworkConfig cfg{d(rng), {}};
  const std::size_t l = layers(rng);
  for (std::size_t k = 0; k < l; ++k) cfg.hidden_sizes.push_back(width(rng));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> flat(cfg.parameter_count());
  for (auto& v : flat) v = normal(rng);
  // scale each layer by 1/sqrt(fan_in) so activations stay O(1)
  Parameters p(cfg, flat);
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    for (auto& v : p.layer(k)) v /= std::sqrt(static_cast<double>(p.cols(k)));
  }
  return p;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Dense forward with every intermediate kept; weight matrices read straight
// from the flat layout.
struct Dense {
  std::vector<std::vector<double>> z;  // preactivations per hidden layer
  std::vector<std::vector<double>> h;  // h[0] = x, h[k] hidden activations
  double f = 0.0;
};

inline Dense dense_forward(const Parameters& p, std::span<const double> x) {
  const auto& cfg = p.config();
  Dense out;
  out.h.emplace_back(x.begin(), x.end());
  std::size_t off = 0;
  std::size_t fan_in = cfg.input_dim;
  for (std::size_t width : cfg.hidden_sizes) {
    std::vector<double> z(width, 0.0), h(width, 0.0);
    for (std::size_t r = 0; r < width; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) z[r] += p.flat()[off + r * fan_in + c] * out.h.back()[c];
      h[r] = z[r] > 0.0 ? z[r] : 0.0;
    }
    off += width * fan_in;
    fan_in = width;
    out.z.push_back(z);
    out.h.push_back(h);
  }
  for (std::size_t c = 0; c < fan_in; ++c) out.f += p.flat()[off + c] * out.h.back()[c];
  return out;
}

// Smallest |z| over all hidden units; used to stay away from region boundaries.
inline double min_abs_preactivation(const Parameters& p, std::span<const double> x) {
  double m = INFINITY;
  for (const auto& layer : dense_forward(p, x).z) {
    for (double v : layer) m = std::min(m, std::fabs(v));
  }
  return m;
}

// [M]_ij of the block-diagonal metric, straight from its definition.
inline double block_entry(const Parameters& p, std::size_t i, std::size_t j) {
  return p.layer_of(i) == p.layer_of(j) ? p.flat()[i] * p.flat()[j] : 0.0;
}

// g_x^T M g_y as an explicit double sum. `entry(i, j)` supplies [M]_ij.
template <class Entry>
double double_sum(std::span<const double> gx, std::span<const double> gy, Entry entry) {
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    for (std::size_t j = 0; j < gy.size(); ++j) s += gx[i] * entry(i, j) * gy[j];
  }
  return s;
}

inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) scale = std::max(scale, std::fabs(b[i]));
  for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::fabs(a[i] - b[i]));
  return err / std::max(scale, 1e-300);
}

// psi_ij by looping over every ordered pair of samples:
//   mean over same-label pairs of gh_a[i] M_ij gh_b[j]
//   minus mean over cross-label pairs of the same product,
// with gh = g / ||M^(1/2) g|| (zero when the norm is <= eps) or raw g.
template <class Entry>
std::vector<double> brute_psi(const std::vector<std::vector<double>>& g,
                              std::span<const std::int8_t> labels, Entry entry, bool normalize,
                              double eps = 1e-12) {
  const std::size_t n = g.size();
  const std::size_t m = g.front().size();
  std::vector<std::vector<double>> gh = g;
  if (normalize) {
    for (auto& v : gh) {
      const double sq = double_sum(v, v, entry);
      const double nrm = std::sqrt(std::max(sq, 0.0));
      for (auto& x : v) x = nrm > eps ? x / nrm : 0.0;
    }
  }
  std::size_t same = 0, diff = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) (labels[a] == labels[b] ? same : diff) += 1;
  }
  std::vector<double> psi(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double w = entry(i, j);
      if (w == 0.0) continue;
      double s = 0.0, d = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          const double v = gh[a][i] * w * gh[b][j];
          (labels[a] == labels[b] ? s : d) += v;
        }
      }
      psi[i * m + j] = s / static_cast<double>(same) - d / static_cast<double>(diff);
    }
  }
  return psi;
}

}  // namespace oracle
