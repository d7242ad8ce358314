// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nlcg/learner.hpp"
#include "nlcg/mixing_network.hpp"
#include "nlcg/piece_optimize.hpp"
#include "nlcg/rank_check.hpp"
#include "nlcg/weighted_max_sum.hpp"
#include "learner_support.hpp"
#include "test_support.hpp"

using namespace nlcg;
namespace mg = nlcg::matrix_game;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("%s criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct OracleInstance {
  fixtures::Instance inst;
  std::uint64_t seed;
};

// The shared random instance set for the oracle and iterative criteria.
std::vector<OracleInstance> oracle_instances() {
  std::vector<OracleInstance> out;
  const double alphas[] = {0.0, 0.2, 0.5};
  for (int k = 0; k < 500; ++k) {
    const int n_agents = 2 + k % 3;
    const int n_actions = 2 + (k / 3) % 2;
    const int width = 1 + (k / 6) % 4;
    const double alpha = alphas[(k / 24) % 3];
    const std::uint64_t seed = 10'000 + static_cast<std::uint64_t>(k);
    out.push_back({fixtures::random_instance(n_agents, n_actions, width, alpha, seed), seed});
  }
  return out;
}

void criterion_rank_check() {
  const auto t0 = Clock::now();
  const auto r = rank_check();
  const double t = seconds_since(t0);
  report(1, r.coefficient_rank == 3 && r.augmented_rank == 4 && t < 1.0, "rank check returns (3, 4)",
         fmt("coef_rank=%d aug_rank=%d time=%.2es", r.coefficient_rank, r.augmented_rank, t));
}

void criterion_oracle_equivalence(const std::vector<OracleInstance>& set) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int mismatches = 0;
  for (const auto& [inst, seed] : set) {
    const auto e = enumerate_optimize(inst.graph, inst.utilities, inst.payoffs, inst.net, InnerSolver::exact());
    const auto b = brute_force_max(inst.graph, inst.utilities, inst.payoffs, inst.net);
    const double diff = std::abs(e.q_max - b.q);
    worst = std::max(worst, diff);
    mismatches += diff > 1e-9;
  }
  const double t = seconds_since(t0);
  report(2, mismatches == 0 && t < 30.0, "exact piece enumeration equals brute force",
         fmt("instances=%zu mismatches=%d max|diff|=%.3e time=%.2fs", set.size(), mismatches, worst, t));
}

void criterion_realized_piece_dominates() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int violations = 0, pairs = 0;
  double worst = -1e300;
  for (int k = 0; k < 1000; ++k) {
    const int d = 2 + k % 9;
    const int m = 1 + k % 6;
    std::vector<int> widths{m};
    if (m >= 2 && k % 3 == 0) widths = {m / 2, m - m / 2};
    const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto net = sample_random_net(d, widths, alpha, 77'000 + static_cast<std::uint64_t>(k));
    QInput q(d);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int i = 0; i < d; ++i) q[i] = dist(rng);
    const auto fwd = net.forward(q);
    const double realized = net.piece(fwd.realized)(q);
    if (std::abs(realized - fwd.value) > 1e-9) ++violations;
    for (const auto& c : all_configs(net.hidden_units(), alpha)) {
      const double excess = net.piece(c)(q) - realized;
      worst = std::max(worst, excess);
      violations += excess > 1e-9;
    }
    ++pairs;
  }
  const double t = seconds_since(t0);
  report(3, violations == 0 && t < 30.0, "realized piece dominates every other piece",
         fmt("pairs=%d violations=%d max(other-realized)=%.3e time=%.2fs", pairs, violations, worst, t));
}

void criterion_iterative_budget(const std::vector<OracleInstance>& set) {
  int runs = 0, bad_trace = 0, over_budget = 0;
  for (const auto& [inst, seed] : set) {
    for (int n_max : {1, 4, 16}) {
      IterativeOptions o;
      o.n_max = n_max;
      o.seed = seed;
      const auto r = iterative_optimize(inst.graph, inst.utilities, inst.payoffs, inst.net, o);
      ++runs;
      if (!std::is_sorted(r.value_trace.begin(), r.value_trace.end())) ++bad_trace;
      const std::uint64_t pieces = std::uint64_t{1} << inst.net.hidden_units();
      if (r.pieces_visited > std::min<std::uint64_t>(static_cast<std::uint64_t>(n_max), pieces)) ++over_budget;
    }
  }
  report(4, bad_trace == 0 && over_budget == 0, "iterative search is monotone and within budget",
         fmt("runs=%d non_monotone=%d over_budget=%d", runs, bad_trace, over_budget));
}

void criterion_matrix_game() {
  const auto t0 = Clock::now();
  int passing = 0;
  std::vector<double> q_s2b4, q_s1a, q_s1b, lin_s1a, lin_s1b;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    mg::TrainConfig c;  // 5000 episodes, eps 1, gamma 0.99, buffer 500, batch 32, target 100, lr 5e-4
    c.seed = seed;
    c.learner.kind = mg::LearnerKind::nonlinear;
    const auto nl = mg::train_matrix_game(c).report;
    c.learner.kind = mg::LearnerKind::linear;
    const auto lin = mg::train_matrix_game(c).report;
    const bool ok = nl.greedy_first_action == mg::kActionB && nl.state2b[4] >= 7.5 && nl.state2b[4] <= 8.5 &&
                    std::abs(nl.state1_a - 6.93) <= 0.5 && lin.greedy_first_action == mg::kActionA;
    passing += ok;
    q_s2b4.push_back(nl.state2b[4]);
    q_s1a.push_back(nl.state1_a);
    q_s1b.push_back(nl.state1_b);
    lin_s1a.push_back(lin.state1_a);
    lin_s1b.push_back(lin.state1_b);
    per_seed += fmt(" seed%d=%s(nl:%c lin:%c)", static_cast<int>(seed), ok ? "ok" : "miss",
                    nl.greedy_first_action == mg::kActionB ? 'B' : 'A', lin.greedy_first_action == mg::kActionB ? 'B' : 'A');
  }
  const double t = seconds_since(t0);
  report(5, passing >= 4, "matrix game: non-linear learner picks B, linear learner picks A",
         fmt("passing_seeds=%d/5 median nl Q(S1,A)=%.3f Q(S1,B)=%.3f Q(S2B,#B=4)=%.3f; median linear Q(S1,A)=%.3f "
             "Q(S1,B)=%.3f;%s time=%.1fs",
             passing, median(q_s1a), median(q_s1b), median(q_s2b4), median(lin_s1a), median(lin_s1b),
             per_seed.c_str(), t));
}

void criterion_gradient() {
  // Central differences only estimate the gradient when no ReLU or LeakyReLU
  // input lies within reach of the +-h probe; such draws are replaced.
  const auto t0 = Clock::now();
  const double h = 1e-5;
  std::mt19937_64 rng(99);
  double worst = 0.0;
  int failing = 0, redrawn = 0;
  std::uint64_t model_seed = 5'000;
  for (int trial = 0; trial < 100;) {
    mg::LearnerConfig c;
    c.kind = trial % 5 == 4 ? mg::LearnerKind::linear : mg::LearnerKind::nonlinear;
    c.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto model = mg::CgLearner::initialize(c, model_seed++);
    const auto s = static_cast<mg::State>(std::uniform_int_distribution<int>(0, mg::kObservedStates - 1)(rng));
    JointAction a(mg::kAgents);
    for (int& x : a) x = std::uniform_int_distribution<int>(0, mg::kActions - 1)(rng);
    if (fixtures::kink_margin(model, s, a) < 10 * h) {
      ++redrawn;
      continue;
    }
    ++trial;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(model.parameter_count());
    model.accumulate_gradient(s, a, 1.0, g);
    Eigen::VectorXd fd(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const double x = model.parameters()[k];
      model.parameters()[k] = x + h;
      const double up = model.q_tot(s, a);
      model.parameters()[k] = x - h;
      const double down = model.q_tot(s, a);
      model.parameters()[k] = x;
      fd[k] = (up - down) / (2 * h);
    }
    const double rel = (g - fd).norm() / std::max({g.norm(), fd.norm(), 1e-12});
    worst = std::max(worst, rel);
    failing += rel >= 1e-4;
  }
  report(6, failing == 0, "backprop matches central finite differences",
         fmt("triples=100 failing=%d max_rel_err=%.3e redrawn_near_kink=%d time=%.1fs", failing, worst, redrawn,
             seconds_since(t0)));
}

void criterion_tree_exactness() {
  std::mt19937_64 rng(7);
  int mismatches = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 7;
    const int A = 2 + trial % 3;
    const auto g = fixtures::random_tree(n, A, rng);
    auto [f_v, f_e] = sample_random_tables(g, 3'000 + static_cast<std::uint64_t>(trial));
    std::uniform_real_distribution<double> w(-1.0, 2.0);
    Eigen::VectorXd w_v(n), w_e(g.n_edges());
    for (int k = 0; k < n; ++k) w_v[k] = w(rng);
    for (int k = 0; k < g.n_edges(); ++k) w_e[k] = w(rng);
    const double bias = w(rng);
    const auto r = w_max_sum(g, f_v, f_e, w_v, w_e, bias, fixtures::tree_diameter(g) + 1);
    const auto [q, a] = exact_piece_max(g, f_v, f_e, w_v, w_e, bias);
    const double diff = std::abs(r.q_max - q);
    worst = std::max(worst, diff);
    mismatches += diff > 1e-9;
  }
  report(7, mismatches == 0, "weighted Max-Sum is exact on trees with diameter+1 rounds",
         fmt("trees=100 mismatches=%d max|diff|=%.3e", mismatches, worst));
}

void criterion_timing() {
  const int instances = 50;
  double t_enum = 0.0, t_iter = 0.0, pieces_iter = 0.0, pieces_enum = 0.0, gap = 0.0;
  for (int k = 0; k < instances; ++k) {
    const auto inst = fixtures::random_instance(4, 3, 10, 0.2, 40'000 + static_cast<std::uint64_t>(k));
    auto t0 = Clock::now();
    const auto e = enumerate_optimize(inst.graph, inst.utilities, inst.payoffs, inst.net, InnerSolver::max_sum());
    t_enum += seconds_since(t0);
    IterativeOptions o;
    o.n_max = 16;
    o.seed = static_cast<std::uint64_t>(k);
    t0 = Clock::now();
    const auto it = iterative_optimize(inst.graph, inst.utilities, inst.payoffs, inst.net, o);
    t_iter += seconds_since(t0);
    pieces_enum += static_cast<double>(e.pieces_visited);
    pieces_iter += static_cast<double>(it.pieces_visited);
    gap += e.q_max - it.q_max;
  }
  const double mean_pieces = pieces_iter / instances;
  const double saving = 1.0 - t_iter / t_enum;
  report(8, mean_pieces <= 16.0, "iterative search stays within 16 pieces (timing reported)",
         fmt("m=10 d=10 instances=%d mean_pieces iterative=%.2f enumerate=%.0f; mean time iterative=%.3es "
             "enumerate=%.3es (saving %.1f%%, iterative %s); mean value gap=%.4f",
             instances, mean_pieces, pieces_enum / instances, t_iter / instances, t_enum / instances, 100.0 * saving,
             t_iter < t_enum ? "faster" : "NOT faster", gap / instances));
}

void criterion_scope_statement() {
  report(9, true, "scope statement",
         "NOT REPRODUCED at desk scale: learning curves on the MACO benchmark tasks and the absolute "
         "optimality-gap magnitudes measured inside full MARL training need the full training infrastructure; "
         "criteria 2, 3, 4 and 7 are the property-based substitutes");
}

}  // namespace

int main() {
  const auto set = oracle_instances();
  criterion_rank_check();
  criterion_oracle_equivalence(set);
  criterion_realized_piece_dominates();
  criterion_iterative_budget(set);
  criterion_matrix_game();
  criterion_gradient();
  criterion_tree_exactness();
  criterion_timing();
  criterion_scope_statement();
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
