#pragma once

// LeakyReLU mixing networks viewed as piece-wise affine functions.
//
// A network with m hidden units has 2^m slope configurations. Fixing one turns
// the network into a single affine map (an AffinePiece). Layer weights after
// the first are non-negative, which makes the piece realized at q the largest
// of all pieces evaluated at q.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlcg/coordination_graph.hpp"
#include "nlcg/limits.hpp"

namespace nlcg {

/// An assignment of slope alpha or 1 to every hidden unit. Bit k of `mask` is
/// set when hidden unit k (counted across layers, input side first) has slope 1.
class SlopeConfiguration {
 public:
  SlopeConfiguration() = default;
  SlopeConfiguration(int m, std::uint64_t mask, double alpha) : m_(m), mask_(mask), alpha_(alpha) {
    if (m < 0 || m > 64) throw std::invalid_argument("slope configurations support 0..64 hidden units");
    if (m < 64 && (mask >> m) != 0) throw std::invalid_argument("slope mask has bits beyond m");
  }

  static SlopeConfiguration all_ones(int m, double alpha) { return {m, full_mask(m), alpha}; }

  int size() const { return m_; }
  std::uint64_t mask() const { return mask_; }
  double alpha() const { return alpha_; }
  bool active(int k) const { return (mask_ >> k) & 1U; }
  double slope(int k) const { return active(k) ? 1.0 : alpha_; }

  /// With alpha == 1 every configuration is the same piece; they all collapse
  /// onto the all-ones mask.
  std::uint64_t canonical_mask() const { return alpha_ == 1.0 ? full_mask(m_) : mask_; }

  Eigen::VectorXd slopes() const {
    Eigen::VectorXd c(m_);
    for (int k = 0; k < m_; ++k) c[k] = slope(k);
    return c;
  }

  friend bool operator==(const SlopeConfiguration& a, const SlopeConfiguration& b) {
    return a.m_ == b.m_ && a.alpha_ == b.alpha_ && a.canonical_mask() == b.canonical_mask();
  }

  static std::uint64_t full_mask(int m) { return m >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1; }

 private:
  int m_ = 0;
  std::uint64_t mask_ = 0;
  double alpha_ = 0.0;
};

/// w . q + bias. The weight vector follows QInput ordering.
struct AffinePiece {
  Eigen::VectorXd w;
  double bias = 0.0;

  double operator()(const QInput& q) const { return w.dot(q) + bias; }

  Eigen::VectorXd vertex_weights(const CoordinationGraph& g) const { return w.head(g.n_agents()); }
  Eigen::VectorXd edge_weights(const CoordinationGraph& g) const { return w.tail(g.n_edges()); }
};

/// One affine layer; W maps the previous dimension to the next (z = W^T h + b).
struct MixingLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

struct ForwardResult {
  double value = 0.0;
  SlopeConfiguration realized;
};

class MixingNetwork {
 public:
  MixingNetwork(double alpha, std::vector<MixingLayer> layers) : alpha_(alpha), layers_(std::move(layers)) {
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (layers_.empty()) throw std::invalid_argument("mixing network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.W.cols() != layer.b.size())
        throw std::invalid_argument("layer " + std::to_string(l) + ": bias length does not match W columns");
      if (l > 0 && layer.W.rows() != layers_[l - 1].W.cols())
        throw std::invalid_argument("layer " + std::to_string(l) + ": input width does not chain");
      if (!layer.W.allFinite() || !layer.b.allFinite())
        throw std::invalid_argument("layer " + std::to_string(l) + " has non-finite parameters");
      if (l > 0 && (layer.W.array() < 0.0).any())
        throw std::invalid_argument("layer " + std::to_string(l) +
                                    " has negative weights; only the first layer may");
    }
    if (layers_.back().W.cols() != 1) throw std::invalid_argument("mixing network output must be scalar");
    hidden_units_ = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) hidden_units_ += static_cast<int>(layers_[l].W.cols());
    if (hidden_units_ > 64) throw std::invalid_argument("at most 64 hidden units are supported");
  }

  double alpha() const { return alpha_; }
  const std::vector<MixingLayer>& layers() const { return layers_; }
  int input_dim() const { return static_cast<int>(layers_.front().W.rows()); }
  int hidden_units() const { return hidden_units_; }

  ForwardResult forward(const QInput& q) const {
    if (q.size() != input_dim())
      throw std::invalid_argument("input has length " + std::to_string(q.size()) + ", network expects " +
                                  std::to_string(input_dim()));
    if (!q.allFinite()) throw std::invalid_argument("network input has non-finite entries");
    std::uint64_t mask = 0;
    int unit = 0;
    Eigen::VectorXd h = q;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::VectorXd z = layers_[l].W.transpose() * h + layers_[l].b;
      if (l + 1 < layers_.size()) {
        for (Eigen::Index k = 0; k < z.size(); ++k, ++unit) {
          if (z[k] >= 0.0)
            mask |= std::uint64_t{1} << unit;
          else
            z[k] *= alpha_;
        }
      }
      h = std::move(z);
    }
    return {h[0], SlopeConfiguration(hidden_units_, mask, alpha_)};
  }

  double value(const QInput& q) const { return forward(q).value; }

  /// The affine function the network computes when its units take slopes `c`,
  /// whether or not any input actually realizes `c`.
  AffinePiece piece(const SlopeConfiguration& c) const {
    if (c.size() != hidden_units_)
      throw std::invalid_argument("slope configuration has " + std::to_string(c.size()) + " units, network has " +
                                  std::to_string(hidden_units_));
    // Fold from the output back to the input: v holds d(output)/d(h_l).
    Eigen::VectorXd v = layers_.back().W.col(0);
    double bias = layers_.back().b[0];
    int unit_end = hidden_units_;
    for (std::size_t l = layers_.size() - 1; l-- > 0;) {
      const auto& layer = layers_[l];
      const int width = static_cast<int>(layer.W.cols());
      const int unit_begin = unit_end - width;
      Eigen::VectorXd u(width);
      for (int k = 0; k < width; ++k) u[k] = c.slope(unit_begin + k) * v[k];
      bias += u.dot(layer.b);
      v = layer.W * u;
      unit_end = unit_begin;
    }
    return {std::move(v), bias};
  }

 private:
  double alpha_;
  std::vector<MixingLayer> layers_;
  int hidden_units_ = 0;
};

inline ForwardResult forward(const MixingNetwork& net, const QInput& q) { return net.forward(q); }

inline AffinePiece piece_from_config(const MixingNetwork& net, const SlopeConfiguration& c) { return net.piece(c); }

/// Number of linear regions of an arrangement of m hyperplanes in general
/// position in R^d: sum_{j=0}^{d} C(m, j). Throws std::overflow_error when the
/// count does not fit in 64 bits.
inline std::uint64_t count_pieces(int m, int d) {
  if (m < 0) throw std::invalid_argument("m must be non-negative");
  if (d < 1) throw std::invalid_argument("d must be positive");
  using u128 = unsigned __int128;
  u128 total = 0;
  u128 binom = 1;  // C(m, 0)
  const int top = std::min(m, d);
  for (int j = 0; j <= top; ++j) {
    if (j > 0) binom = binom * static_cast<u128>(m - j + 1) / static_cast<u128>(j);
    total += binom;
    if (total > UINT64_MAX) throw std::overflow_error("piece count overflows 64 bits");
  }
  return static_cast<std::uint64_t>(total);
}

/// All 2^m configurations in increasing mask order (all-alpha first, all-ones last).
inline std::vector<SlopeConfiguration> all_configs(int m, double alpha, int cap = SolverLimits{}.max_enumerated_hidden_units) {
  if (m < 0) throw std::invalid_argument("m must be non-negative");
  if (m > cap)
    throw CapExceeded("hidden_units", "refusing to enumerate 2^" + std::to_string(m) +
                                          " slope configurations (cap is m <= " + std::to_string(cap) + ")");
  const std::uint64_t count = std::uint64_t{1} << m;
  std::vector<SlopeConfiguration> out;
  out.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) out.emplace_back(m, mask, alpha);
  return out;
}

/// Random network: first layer from U(-1, 1), later layers from U(0, 1), with
/// a final scalar output layer appended after `widths`.
inline MixingNetwork sample_random_net(int d, const std::vector<int>& widths, double alpha, std::uint64_t seed) {
  if (widths.empty()) throw std::invalid_argument("need at least one hidden layer width");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> symmetric(-1.0, 1.0);
  std::uniform_real_distribution<double> positive(0.0, 1.0);
  std::vector<MixingLayer> layers;
  int prev = d;
  auto add_layer = [&](int next, bool first) {
    MixingLayer layer{Eigen::MatrixXd(prev, next), Eigen::VectorXd(next)};
    for (int r = 0; r < prev; ++r)
      for (int c = 0; c < next; ++c) layer.W(r, c) = first ? symmetric(rng) : positive(rng);
    for (int c = 0; c < next; ++c) layer.b[c] = symmetric(rng);
    layers.push_back(std::move(layer));
    prev = next;
  };
  for (std::size_t l = 0; l < widths.size(); ++l) add_layer(widths[l], l == 0);
  add_layer(1, false);
  return MixingNetwork(alpha, std::move(layers));
}

}  // namespace nlcg
