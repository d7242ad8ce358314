#include <gtest/gtest.h>

#include <queue>
#include <random>

#include "nlcg/weighted_max_sum.hpp"
#include "test_support.hpp"

using namespace nlcg;
using nlcg::fixtures::random_tree;
using nlcg::fixtures::tree_diameter;

namespace {

// Objective recomputed directly from the tables, without assemble_q_input.
double hand_objective(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e,
                      const Eigen::VectorXd& w_v, const Eigen::VectorXd& w_e, double bias, const JointAction& a) {
  double total = bias;
  for (int v = 0; v < g.n_agents(); ++v) total += w_v[v] * f_v.values(v, a[v]);
  for (int e = 0; e < g.n_edges(); ++e) total += w_e[e] * f_e.slices[e](a[g.edge(e).first], a[g.edge(e).second]);
  return total;
}

Eigen::VectorXd random_weights(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> dist(-1.0, 2.0);
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; ++k) w[k] = dist(rng);
  return w;
}

}  // namespace

TEST(WMaxSum, SingleEdgeIsExact) {
  const auto g = complete_graph(2, 2);
  PayoffTable f_e{{Eigen::MatrixXd(2, 2)}};
  f_e.slices[0] << 1, 0, 0, 2;
  const auto r = w_max_sum(g, zero_utilities(g), f_e, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(1), 0.0, 4);
  EXPECT_DOUBLE_EQ(r.q_max, 2.0);
  EXPECT_EQ(r.a_max, (JointAction{1, 1}));
}

TEST(WMaxSum, ConstantObjective) {
  const auto g = complete_graph(4, 3);
  auto [f_v, f_e] = sample_random_tables(g, 8);
  const auto r = w_max_sum(g, f_v, f_e, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(6), 5.0, 4);
  EXPECT_DOUBLE_EQ(r.q_max, 5.0);
  EXPECT_EQ(r.a_max, JointAction(4, 0));
}

TEST(WMaxSum, PathGraphMatchesExhaustive) {
  const CoordinationGraph g(3, 3, {{0, 1}, {1, 2}});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto [f_v, f_e] = sample_random_tables(g, 40 + trial);
    const auto w_v = random_weights(rng, 3);
    const auto w_e = random_weights(rng, 2);
    const auto r = w_max_sum(g, f_v, f_e, w_v, w_e, 0.5, 4);
    const auto [q, a] = exact_piece_max(g, f_v, f_e, w_v, w_e, 0.5);
    EXPECT_NEAR(r.q_max, q, 1e-9);
    EXPECT_NEAR(hand_objective(g, f_v, f_e, w_v, w_e, 0.5, r.a_max), r.q_max, 1e-9);
  }
}

TEST(WMaxSum, TreesAreExactAfterDiameterPlusOneRounds) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 7;
    const int A = 2 + trial % 3;
    const auto g = random_tree(n, A, rng);
    auto [f_v, f_e] = sample_random_tables(g, 900 + trial);
    const auto w_v = random_weights(rng, n);
    const auto w_e = random_weights(rng, g.n_edges());
    const auto r = w_max_sum(g, f_v, f_e, w_v, w_e, -0.25, tree_diameter(g) + 1);
    const auto [q, a] = exact_piece_max(g, f_v, f_e, w_v, w_e, -0.25);
    EXPECT_NEAR(r.q_max, q, 1e-9) << "trial " << trial;
  }
}

TEST(WMaxSum, NeverExceedsExactMaximumOnLoopyGraphs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = complete_graph(4 + trial % 2, 3);
    auto [f_v, f_e] = sample_random_tables(g, 70 + trial);
    const auto w_v = random_weights(rng, g.n_agents());
    const auto w_e = random_weights(rng, g.n_edges());
    const auto r = w_max_sum(g, f_v, f_e, w_v, w_e, 0.0, 1 + trial % 6);
    const auto [q, a] = exact_piece_max(g, f_v, f_e, w_v, w_e, 0.0);
    EXPECT_LE(r.q_max, q + 1e-9);
    EXPECT_NEAR(r.q_max, hand_objective(g, f_v, f_e, w_v, w_e, 0.0, r.a_max), 1e-9);
  }
}

TEST(WMaxSum, MessagesHaveZeroMeanEveryRound) {
  const auto g = complete_graph(5, 4);
  auto [f_v, f_e] = sample_random_tables(g, 2);
  std::vector<MessageState> trace;
  w_max_sum(g, f_v, f_e, Eigen::VectorXd::Constant(5, 0.7), Eigen::VectorXd::Constant(10, 1.3), 0.0, 6, &trace);
  ASSERT_EQ(trace.size(), 6u);
  for (const auto& m : trace) {
    EXPECT_LT(m.mu.rowwise().mean().cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(m.mu_bar.rowwise().mean().cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(WMaxSum, Deterministic) {
  const auto g = complete_graph(5, 3);
  auto [f_v, f_e] = sample_random_tables(g, 19);
  const Eigen::VectorXd w_v = Eigen::VectorXd::LinSpaced(5, -1, 1);
  const Eigen::VectorXd w_e = Eigen::VectorXd::LinSpaced(10, 2, -1);
  const auto a = w_max_sum(g, f_v, f_e, w_v, w_e, 0.1, 4);
  const auto b = w_max_sum(g, f_v, f_e, w_v, w_e, 0.1, 4);
  EXPECT_EQ(a.q_max, b.q_max);
  EXPECT_EQ(a.a_max, b.a_max);
  EXPECT_EQ(a.q_tables, b.q_tables);
}

TEST(WMaxSum, Errors) {
  const auto g = complete_graph(3, 2);
  const auto f_v = zero_utilities(g);
  const auto f_e = zero_payoffs(g);
  EXPECT_THROW(w_max_sum(g, f_v, f_e, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3), 0.0, 0),
               std::invalid_argument);
  EXPECT_THROW(w_max_sum(g, f_v, f_e, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3), 0.0, 4),
               std::invalid_argument);
  EXPECT_THROW(w_max_sum(g, f_v, f_e, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4), 0.0, 4),
               std::invalid_argument);
}

TEST(ExactPieceMax, Examples) {
  {
    const CoordinationGraph g(1, 2, {});
    UtilityTable f_v{Eigen::MatrixXd(1, 2)};
    f_v.values << 3, 1;
    const auto [q, a] = exact_piece_max(g, f_v, PayoffTable{}, Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd(0), 1.0);
    EXPECT_DOUBLE_EQ(q, 7.0);
    EXPECT_EQ(a, JointAction{0});
  }
  {
    const auto g = complete_graph(3, 3);
    const auto [q, a] = exact_piece_max(g, zero_utilities(g), zero_payoffs(g), Eigen::VectorXd::Ones(3),
                                        Eigen::VectorXd::Ones(3), -2.5);
    EXPECT_DOUBLE_EQ(q, -2.5);
    EXPECT_EQ(a, JointAction(3, 0));
  }
}

TEST(ExactPieceMax, AgreesWithRecomputationAndIndependentSearch) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = complete_graph(4, 3);
    auto [f_v, f_e] = sample_random_tables(g, 500 + trial);
    const auto w_v = random_weights(rng, 4);
    const auto w_e = random_weights(rng, 6);
    const auto [q, a] = exact_piece_max(g, f_v, f_e, w_v, w_e, 0.3);
    EXPECT_NEAR(q, hand_objective(g, f_v, f_e, w_v, w_e, 0.3, a), 1e-12);
    double best = -1e300;
    for (int x0 = 0; x0 < 3; ++x0)
      for (int x1 = 0; x1 < 3; ++x1)
        for (int x2 = 0; x2 < 3; ++x2)
          for (int x3 = 0; x3 < 3; ++x3)
            best = std::max(best, hand_objective(g, f_v, f_e, w_v, w_e, 0.3, {x0, x1, x2, x3}));
    EXPECT_NEAR(q, best, 1e-12);
  }
}

TEST(ExactPieceMax, RespectsCap) {
  const auto g = complete_graph(7, 3);  // 2187 joint actions
  SolverLimits limits;
  limits.max_joint_actions = 1000;
  EXPECT_THROW(exact_piece_max(g, zero_utilities(g), zero_payoffs(g), Eigen::VectorXd::Ones(7),
                               Eigen::VectorXd::Ones(21), 0.0, limits),
               CapExceeded);
}
