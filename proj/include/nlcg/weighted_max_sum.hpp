#pragma once

// Max-Sum on a single affine piece of the mixing network. Utilities and
// payoffs are first scaled by the piece's per-input weights, after which the
// objective is an ordinary sum over vertices and edges plus a constant.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlcg/coordination_graph.hpp"
#include "nlcg/limits.hpp"

namespace nlcg {

inline constexpr int kDefaultMaxSumRounds = 4;

struct MessageState {
  Eigen::MatrixXd mu;      // |E| x A, forward messages i -> j, indexed by a_j
  Eigen::MatrixXd mu_bar;  // |E| x A, backward messages j -> i, indexed by a_i
};

struct PieceSolveResult {
  double q_max = -std::numeric_limits<double>::infinity();
  JointAction a_max;
  Eigen::MatrixXd q_tables;  // per-agent marginals of the best round
};

namespace detail {

inline void check_piece_weights(const CoordinationGraph& g, const Eigen::VectorXd& w_v, const Eigen::VectorXd& w_e) {
  if (w_v.size() != g.n_agents())
    throw std::invalid_argument("vertex weight vector has length " + std::to_string(w_v.size()) + ", expected " +
                                std::to_string(g.n_agents()));
  if (w_e.size() != g.n_edges())
    throw std::invalid_argument("edge weight vector has length " + std::to_string(w_e.size()) + ", expected " +
                                std::to_string(g.n_edges()));
}

// Lowest index wins ties.
template <typename Row>
int argmax(const Row& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = static_cast<int>(k);
  return best;
}

/// Scaled tables of one piece; evaluates the weighted objective.
struct WeightedTables {
  Eigen::MatrixXd f_v;
  std::vector<Eigen::MatrixXd> f_e;
  double bias = 0.0;

  WeightedTables(const CoordinationGraph& g, const UtilityTable& u, const PayoffTable& p, const Eigen::VectorXd& w_v,
                 const Eigen::VectorXd& w_e, double b)
      : f_v(u.values), f_e(p.slices), bias(b) {
    for (int v = 0; v < g.n_agents(); ++v) f_v.row(v) *= w_v[v];
    for (int e = 0; e < g.n_edges(); ++e) f_e[static_cast<std::size_t>(e)] *= w_e[e];
  }

  double objective(const CoordinationGraph& g, const JointAction& a) const {
    double total = bias;
    for (int v = 0; v < g.n_agents(); ++v) total += f_v(v, a[static_cast<std::size_t>(v)]);
    for (int e = 0; e < g.n_edges(); ++e) {
      const auto [i, j] = g.edge(e);
      total += f_e[static_cast<std::size_t>(e)](a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    }
    return total;
  }
};

}  // namespace detail

/// sum_v w_v[v] f_v(v, a_v) + sum_e w_e[e] f_e(e, a_i, a_j) + bias.
inline double weighted_objective(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                                 const Eigen::VectorXd& w_v, const Eigen::VectorXd& w_e, double bias,
                                 const JointAction& a) {
  const QInput q = assemble_q_input(g, f_v, f_e, a);
  detail::check_piece_weights(g, w_v, w_e);
  return w_v.dot(q.head(g.n_agents())) + w_e.dot(q.tail(g.n_edges())) + bias;
}

/// Weighted Max-Sum with synchronous message updates. Every round decodes a
/// greedy joint action from the marginals; the best one over all rounds is
/// returned together with its exact objective value.
///
/// If `trace` is non-null it receives the message state after every round.
inline PieceSolveResult w_max_sum(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                                  const Eigen::VectorXd& w_v, const Eigen::VectorXd& w_e, double bias,
                                  int rounds = kDefaultMaxSumRounds, std::vector<MessageState>* trace = nullptr) {
  if (rounds < 1) throw std::invalid_argument("w_max_sum needs at least one round");
  check_tables(g, f_v, f_e);
  detail::check_piece_weights(g, w_v, w_e);

  const int n = g.n_agents();
  const int A = g.n_actions();
  const int E = g.n_edges();
  const detail::WeightedTables t(g, f_v, f_e, w_v, w_e, bias);

  MessageState msg{Eigen::MatrixXd::Zero(E, A), Eigen::MatrixXd::Zero(E, A)};
  MessageState next = msg;
  Eigen::MatrixXd q = t.f_v;

  PieceSolveResult best;
  best.a_max.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) best.a_max[static_cast<std::size_t>(v)] = detail::argmax(q.row(v));
  best.q_tables = q;

  JointAction a(static_cast<std::size_t>(n));
  for (int round = 0; round < rounds; ++round) {
    for (int e = 0; e < E; ++e) {
      const auto [i, j] = g.edge(e);
      const Eigen::MatrixXd& pay = t.f_e[static_cast<std::size_t>(e)];
      for (int aj = 0; aj < A; ++aj) {
        double m = -std::numeric_limits<double>::infinity();
        for (int ai = 0; ai < A; ++ai) m = std::max(m, q(i, ai) - msg.mu_bar(e, ai) + pay(ai, aj));
        next.mu(e, aj) = m;
      }
      for (int ai = 0; ai < A; ++ai) {
        double m = -std::numeric_limits<double>::infinity();
        for (int aj = 0; aj < A; ++aj) m = std::max(m, q(j, aj) - msg.mu(e, aj) + pay(ai, aj));
        next.mu_bar(e, ai) = m;
      }
      next.mu.row(e).array() -= next.mu.row(e).mean();
      next.mu_bar.row(e).array() -= next.mu_bar.row(e).mean();
    }
    msg = next;

    q = t.f_v;
    for (int e = 0; e < E; ++e) {
      const auto [i, j] = g.edge(e);
      q.row(j) += msg.mu.row(e);
      q.row(i) += msg.mu_bar.row(e);
    }
    for (int v = 0; v < n; ++v) a[static_cast<std::size_t>(v)] = detail::argmax(q.row(v));

    const double value = t.objective(g, a);
    if (value > best.q_max) {
      best.q_max = value;
      best.a_max = a;
      best.q_tables = q;
    }
    if (trace) trace->push_back(msg);
  }
  return best;
}

/// Exhaustive maximum of the weighted objective over all joint actions; ties go
/// to the lexicographically smallest joint action.
inline std::pair<double, JointAction> exact_piece_max(const CoordinationGraph& g, const UtilityTable& f_v,
                                                      const PayoffTable& f_e, const Eigen::VectorXd& w_v,
                                                      const Eigen::VectorXd& w_e, double bias,
                                                      const SolverLimits& limits = {}) {
  check_tables(g, f_v, f_e);
  detail::check_piece_weights(g, w_v, w_e);
  if (g.joint_action_count() > limits.max_joint_actions)
    throw CapExceeded("joint_actions", "exact maximization over " + std::to_string(g.n_actions()) + "^" +
                                           std::to_string(g.n_agents()) + " joint actions exceeds the cap of " +
                                           std::to_string(limits.max_joint_actions));
  const detail::WeightedTables t(g, f_v, f_e, w_v, w_e, bias);
  JointAction a(static_cast<std::size_t>(g.n_agents()), 0);
  JointAction best_a = a;
  double best_q = -std::numeric_limits<double>::infinity();
  do {
    const double value = t.objective(g, a);
    if (value > best_q) {
      best_q = value;
      best_a = a;
    }
  } while (next_joint_action(a, g.n_actions()));
  return {best_q, best_a};
}

}  // namespace nlcg
