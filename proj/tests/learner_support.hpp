#pragma once

// Distance from a learner evaluation to the nearest activation kink, for
// deciding whether a finite-difference probe stays on one linear region.

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlcg/learner.hpp"

namespace nlcg::fixtures {

inline double kink_margin(const matrix_game::CgLearner& model, matrix_game::State s, const JointAction& a) {
  namespace mg = matrix_game;
  const int state = static_cast<int>(s);
  double margin = std::numeric_limits<double>::infinity();
  auto scan = [&](const mg::MlpLayout& l, const Eigen::VectorXd& x) {
    margin = std::min(margin, mg::detail::mlp_forward(l, model.parameters(), x).pre.cwiseAbs().minCoeff());
  };
  for (int i = 0; i < mg::kAgents; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(mg::kObservedStates + mg::kAgents);
    x[state] = 1.0;
    x[mg::kObservedStates + i] = 1.0;
    scan(model.utility_layout(), x);
  }
  for (int e = 0; e < model.graph().n_edges(); ++e) {
    const auto [i, j] = model.graph().edge(e);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(mg::kObservedStates + 2 * mg::kAgents);
    x[state] = 1.0;
    x[mg::kObservedStates + i] = 1.0;
    x[mg::kObservedStates + mg::kAgents + j] = 1.0;
    scan(model.payoff_layout(), x);
  }
  if (model.config().kind == mg::LearnerKind::nonlinear) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(mg::kObservedStates);
    x[state] = 1.0;
    scan(model.hyper_layout(), x);
    auto [f_v, f_e] = model.tables(s);
    const auto net = model.mixer(s);
    const auto& first = net.layers()[0];
    const Eigen::VectorXd z = first.W.transpose() * assemble_q_input(model.graph(), f_v, f_e, a) + first.b;
    margin = std::min(margin, z.cwiseAbs().minCoeff());
  }
  return margin;
}

}  // namespace nlcg::fixtures
