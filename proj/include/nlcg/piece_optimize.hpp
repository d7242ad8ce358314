#pragma once

// Greedy action selection for a coordination graph whose global value is a
// LeakyReLU mixing network over utilities and payoffs.
//
// enumerate_optimize solves every affine piece and keeps the best action. With
// an exact inner solver this is the global maximum: whatever piece a solution
// was found on, its true value is at least that piece's value at the same
// input. iterative_optimize walks from piece to piece, following the realized
// configuration of the best action found so far.

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "nlcg/coordination_graph.hpp"
#include "nlcg/limits.hpp"
#include "nlcg/mixing_network.hpp"
#include "nlcg/weighted_max_sum.hpp"

namespace nlcg {

enum class Termination { converged, budget_exhausted, annealing_break, revisit_detected };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::annealing_break: return "annealing_break";
    case Termination::revisit_detected: return "revisit_detected";
  }
  return "unknown";
}

struct SolveResult {
  JointAction a_max;
  double q_max = -std::numeric_limits<double>::infinity();  // true network value at a_max
  std::uint64_t pieces_visited = 0;
  std::vector<double> value_trace;  // accepted values, non-decreasing
  Termination terminated_by = Termination::converged;
};

struct InnerSolver {
  enum class Kind { max_sum, exact };
  Kind kind = Kind::max_sum;
  int rounds = kDefaultMaxSumRounds;

  static InnerSolver max_sum(int k = kDefaultMaxSumRounds) { return {Kind::max_sum, k}; }
  static InnerSolver exact() { return {Kind::exact, 0}; }
};

/// Per-piece record handed to an observer during enumeration.
struct PieceVisit {
  SlopeConfiguration config;
  double piece_value = 0.0;  // inner solver's value on this piece
  JointAction action;
  double true_value = 0.0;  // network value at q(action)
  SlopeConfiguration realized;
};

using PieceObserver = std::function<void(const PieceVisit&)>;

namespace detail {

inline std::pair<double, JointAction> solve_piece(const CoordinationGraph& g, const UtilityTable& f_v,
                                                  const PayoffTable& f_e, const AffinePiece& piece,
                                                  const InnerSolver& inner, const SolverLimits& limits) {
  const Eigen::VectorXd w_v = piece.vertex_weights(g);
  const Eigen::VectorXd w_e = piece.edge_weights(g);
  if (inner.kind == InnerSolver::Kind::exact) return exact_piece_max(g, f_v, f_e, w_v, w_e, piece.bias, limits);
  auto r = w_max_sum(g, f_v, f_e, w_v, w_e, piece.bias, inner.rounds);
  return {r.q_max, std::move(r.a_max)};
}

inline void check_instance(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                           const MixingNetwork& net) {
  check_tables(g, f_v, f_e);
  if (net.input_dim() != g.input_dim())
    throw std::invalid_argument("network input dimension " + std::to_string(net.input_dim()) +
                                " does not match |V|+|E| = " + std::to_string(g.input_dim()));
}

// (value, action) ordering used to pick winners: larger value, then the
// lexicographically smaller action.
inline bool better(double value, const JointAction& a, double best_value, const JointAction& best_a) {
  if (value != best_value) return value > best_value;
  return a < best_a;
}

}  // namespace detail

/// Solves every one of the 2^m affine pieces with `inner` and returns the
/// action with the highest true network value.
inline SolveResult enumerate_optimize(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                                      const MixingNetwork& net, const InnerSolver& inner = InnerSolver::exact(),
                                      const SolverLimits& limits = {}, const PieceObserver& observer = {}) {
  detail::check_instance(g, f_v, f_e, net);
  const int m = net.hidden_units();
  if (m > limits.max_enumerated_hidden_units)
    throw CapExceeded("hidden_units", "enumeration over 2^" + std::to_string(m) +
                                          " pieces exceeds the hidden-unit cap of " +
                                          std::to_string(limits.max_enumerated_hidden_units));
  if (inner.kind == InnerSolver::Kind::exact && g.joint_action_count() > limits.max_joint_actions)
    throw CapExceeded("joint_actions", "exact inner solver over " + std::to_string(g.n_actions()) + "^" +
                                           std::to_string(g.n_agents()) + " joint actions exceeds the cap of " +
                                           std::to_string(limits.max_joint_actions));
  if (inner.kind == InnerSolver::Kind::max_sum && inner.rounds < 1)
    throw std::invalid_argument("max-sum inner solver needs at least one round");

  SolveResult result;
  const std::uint64_t count = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const SlopeConfiguration config(m, mask, net.alpha());
    const AffinePiece piece = net.piece(config);
    auto [piece_value, action] = detail::solve_piece(g, f_v, f_e, piece, inner, limits);
    const ForwardResult fwd = net.forward(assemble_q_input(g, f_v, f_e, action));
    ++result.pieces_visited;
    if (observer) observer({config, piece_value, action, fwd.value, fwd.realized});
    if (result.a_max.empty() || detail::better(fwd.value, action, result.q_max, result.a_max)) {
      result.q_max = fwd.value;
      result.a_max = std::move(action);
      result.value_trace.push_back(fwd.value);
    }
  }
  result.terminated_by = Termination::converged;
  return result;
}

struct IterativeOptions {
  int rounds = kDefaultMaxSumRounds;
  int n_max = 4;
  double epsilon0 = 0.2;  // epsilon at iteration n is epsilon0 / (1 + n)
  std::uint64_t seed = 0;
  // At a fixed point: true breaks with probability epsilon and otherwise jumps
  // to an unvisited piece; false swaps the two branches.
  bool break_with_epsilon = true;
};

/// Local search over pieces. Starts from the all-ones configuration, solves the
/// current piece with weighted Max-Sum and moves to the configuration realized
/// by the best action so far. At a fixed point it either stops or jumps to a
/// random unvisited configuration. Never visits a configuration twice.
inline SolveResult iterative_optimize(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                                      const MixingNetwork& net, const IterativeOptions& opts = {}) {
  detail::check_instance(g, f_v, f_e, net);
  if (opts.n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  if (opts.rounds < 1) throw std::invalid_argument("max-sum needs at least one round");

  const int m = net.hidden_units();
  const double alpha = net.alpha();
  // Distinct pieces: all configurations coincide when alpha == 1.
  const std::uint64_t distinct =
      alpha == 1.0 ? 1 : (m >= 64 ? std::numeric_limits<std::uint64_t>::max() : std::uint64_t{1} << m);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::unordered_set<std::uint64_t> visited;

  auto random_unvisited = [&]() {
    const std::uint64_t full = SlopeConfiguration::full_mask(m);
    std::uniform_int_distribution<std::uint64_t> pick(0, full);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const std::uint64_t mask = pick(rng);
      if (!visited.contains(mask)) return mask;
    }
    for (std::uint64_t mask = 0;; ++mask)
      if (!visited.contains(mask)) return mask;
  };

  SolveResult result;
  result.terminated_by = Termination::budget_exhausted;
  SlopeConfiguration current = SlopeConfiguration::all_ones(m, alpha);
  const InnerSolver inner = InnerSolver::max_sum(opts.rounds);
  const SolverLimits limits;

  for (int n = 1; n <= opts.n_max; ++n) {
    visited.insert(current.canonical_mask());
    auto [piece_value, action] = detail::solve_piece(g, f_v, f_e, net.piece(current), inner, limits);
    (void)piece_value;
    ++result.pieces_visited;
    const double value = net.value(assemble_q_input(g, f_v, f_e, action));
    if (result.a_max.empty() || value > result.q_max) {
      result.q_max = value;
      result.a_max = std::move(action);
      result.value_trace.push_back(value);
    }
    if (n == opts.n_max) break;

    const SlopeConfiguration realized = net.forward(assemble_q_input(g, f_v, f_e, result.a_max)).realized;
    if (!(realized == current)) {
      if (visited.contains(realized.canonical_mask())) {
        result.terminated_by = Termination::revisit_detected;
        break;
      }
      current = realized;
      continue;
    }
    if (visited.size() >= distinct) {
      result.terminated_by = Termination::converged;
      break;
    }
    const double epsilon = opts.epsilon0 / (1.0 + n);
    const bool draw_below = unit(rng) < epsilon;
    if (draw_below == opts.break_with_epsilon) {
      result.terminated_by = opts.break_with_epsilon ? Termination::annealing_break : Termination::converged;
      break;
    }
    current = SlopeConfiguration(m, random_unvisited(), alpha);
  }
  return result;
}

struct BruteForceResult {
  double q = -std::numeric_limits<double>::infinity();
  JointAction a;
  std::uint64_t evaluations = 0;
};

/// Maximum of the network value over every joint action; lexicographic tie-break.
inline BruteForceResult brute_force_max(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                                        const MixingNetwork& net, const SolverLimits& limits = {}) {
  detail::check_instance(g, f_v, f_e, net);
  if (g.joint_action_count() > limits.max_joint_actions)
    throw CapExceeded("joint_actions", "brute force over " + std::to_string(g.n_actions()) + "^" +
                                           std::to_string(g.n_agents()) + " joint actions exceeds the cap of " +
                                           std::to_string(limits.max_joint_actions));
  BruteForceResult best;
  JointAction a(static_cast<std::size_t>(g.n_agents()), 0);
  do {
    const double value = net.value(assemble_q_input(g, f_v, f_e, a));
    ++best.evaluations;
    if (value > best.q) {
      best.q = value;
      best.a = a;
    }
  } while (next_joint_action(a, g.n_actions()));
  return best;
}

}  // namespace nlcg
