#pragma once

// Coordination graphs, utility/payoff tables, joint actions and the linear
// (sum-decomposed) value function.
//
// The mixing-network input ordering is fixed here and everything downstream
// depends on it: vertex utilities first, in vertex order, then edge payoffs in
// edge-list order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nlcg {

using Edge = std::pair<int, int>;
using JointAction = std::vector<int>;
using QInput = Eigen::VectorXd;

class CoordinationGraph {
 public:
  CoordinationGraph(int n_agents, int n_actions, std::vector<Edge> edges)
      : n_agents_(n_agents), n_actions_(n_actions), edges_(std::move(edges)) {
    if (n_agents_ < 1) throw std::invalid_argument("coordination graph needs at least one agent");
    if (n_actions_ < 1) throw std::invalid_argument("coordination graph needs at least one action");
    for (const auto& [i, j] : edges_) {
      if (i < 0 || j < 0 || i >= n_agents_ || j >= n_agents_)
        throw std::invalid_argument("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") has an endpoint outside [0, n_agents)");
      if (i >= j)
        throw std::invalid_argument("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") must satisfy i < j");
    }
    for (std::size_t e = 1; e < edges_.size(); ++e) {
      if (!(edges_[e - 1] < edges_[e]))
        throw std::invalid_argument("edge list must be sorted and duplicate-free");
    }
  }

  static CoordinationGraph complete(int n_agents, int n_actions) {
    if (n_agents < 1 || n_actions < 1)
      throw std::invalid_argument("complete graph needs at least one agent and one action");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n_agents) * (n_agents - 1) / 2);
    for (int i = 0; i < n_agents; ++i)
      for (int j = i + 1; j < n_agents; ++j) edges.emplace_back(i, j);
    return CoordinationGraph(n_agents, n_actions, std::move(edges));
  }

  int n_agents() const { return n_agents_; }
  int n_actions() const { return n_actions_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  /// Mixing-network input length, |V| + |E|.
  int input_dim() const { return n_agents_ + n_edges(); }

  /// n_actions^n_agents, saturating at UINT64_MAX.
  std::uint64_t joint_action_count() const {
    std::uint64_t count = 1;
    for (int i = 0; i < n_agents_; ++i) {
      if (count > UINT64_MAX / static_cast<std::uint64_t>(n_actions_)) return UINT64_MAX;
      count *= static_cast<std::uint64_t>(n_actions_);
    }
    return count;
  }

  void check_action(const JointAction& a) const {
    if (static_cast<int>(a.size()) != n_agents_)
      throw std::invalid_argument("joint action has length " + std::to_string(a.size()) +
                                  ", expected " + std::to_string(n_agents_));
    for (int v : a)
      if (v < 0 || v >= n_actions_)
        throw std::invalid_argument("action " + std::to_string(v) + " out of range [0, " +
                                    std::to_string(n_actions_) + ")");
  }

  friend bool operator==(const CoordinationGraph&, const CoordinationGraph&) = default;

 private:
  int n_agents_;
  int n_actions_;
  std::vector<Edge> edges_;
};

inline CoordinationGraph complete_graph(int n_agents, int n_actions) {
  return CoordinationGraph::complete(n_agents, n_actions);
}

/// Per-agent action values, |V| x n_actions.
struct UtilityTable {
  Eigen::MatrixXd values;

  double operator()(int agent, int action) const { return values(agent, action); }
};

/// Per-edge action-pair values. slices[e](a_i, a_j) is the payoff of edge
/// e = (i, j), i < j, when agent i plays a_i and agent j plays a_j.
struct PayoffTable {
  std::vector<Eigen::MatrixXd> slices;

  double operator()(int e, int a_i, int a_j) const {
    return slices[static_cast<std::size_t>(e)](a_i, a_j);
  }
};

inline UtilityTable zero_utilities(const CoordinationGraph& g) {
  return {Eigen::MatrixXd::Zero(g.n_agents(), g.n_actions())};
}

inline PayoffTable zero_payoffs(const CoordinationGraph& g) {
  return {std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(g.n_edges()),
                                       Eigen::MatrixXd::Zero(g.n_actions(), g.n_actions()))};
}

inline void check_tables(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e) {
  if (f_v.values.rows() != g.n_agents() || f_v.values.cols() != g.n_actions())
    throw std::invalid_argument("utility table shape does not match the graph");
  if (!f_v.values.allFinite()) throw std::invalid_argument("utility table has non-finite entries");
  if (static_cast<int>(f_e.slices.size()) != g.n_edges())
    throw std::invalid_argument("payoff table has " + std::to_string(f_e.slices.size()) +
                                " slices for " + std::to_string(g.n_edges()) + " edges");
  for (const auto& s : f_e.slices) {
    if (s.rows() != g.n_actions() || s.cols() != g.n_actions())
      throw std::invalid_argument("payoff slice shape does not match the action count");
    if (!s.allFinite()) throw std::invalid_argument("payoff table has non-finite entries");
  }
}

/// q(a): the utilities and payoffs selected by joint action a.
inline QInput assemble_q_input(const CoordinationGraph& g, const UtilityTable& f_v,
                               const PayoffTable& f_e, const JointAction& a) {
  check_tables(g, f_v, f_e);
  g.check_action(a);
  QInput q(g.input_dim());
  for (int v = 0; v < g.n_agents(); ++v) q[v] = f_v(v, a[static_cast<std::size_t>(v)]);
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edge(e);
    q[g.n_agents() + e] = f_e(e, a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
  }
  return q;
}

/// Mean utility plus mean payoff; the payoff term is 0 on edgeless graphs.
inline double linear_cg_value(const CoordinationGraph& g, const UtilityTable& f_v,
                              const PayoffTable& f_e, const JointAction& a) {
  const QInput q = assemble_q_input(g, f_v, f_e, a);
  const double vertex_term = q.head(g.n_agents()).sum() / g.n_agents();
  const double edge_term = g.n_edges() == 0 ? 0.0 : q.tail(g.n_edges()).sum() / g.n_edges();
  return vertex_term + edge_term;
}

/// Advances `a` to the next joint action in lexicographic order (agent 0 most
/// significant). Returns false after the last one, leaving `a` all zeros.
inline bool next_joint_action(JointAction& a, int n_actions) {
  for (std::size_t k = a.size(); k-- > 0;) {
    if (++a[k] < n_actions) return true;
    a[k] = 0;
  }
  return false;
}

/// Tables with entries drawn uniformly from [lo, hi].
inline std::pair<UtilityTable, PayoffTable> sample_random_tables(const CoordinationGraph& g,
                                                                 std::uint64_t seed,
                                                                 double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  UtilityTable f_v = zero_utilities(g);
  PayoffTable f_e = zero_payoffs(g);
  for (int v = 0; v < g.n_agents(); ++v)
    for (int k = 0; k < g.n_actions(); ++k) f_v.values(v, k) = dist(rng);
  for (auto& s : f_e.slices)
    for (int r = 0; r < s.rows(); ++r)
      for (int c = 0; c < s.cols(); ++c) s(r, c) = dist(rng);
  return {std::move(f_v), std::move(f_e)};
}

}  // namespace nlcg
