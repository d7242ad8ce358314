// nlcg: solve, benchmark and train non-linear coordination graphs.
//
// Exit codes: 0 ok, 1 other failure, 2 missing file, 3 malformed or
// schema-violating JSON, 4 cap violation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlcg/bench.hpp"
#include "nlcg/io.hpp"
#include "nlcg/learner.hpp"
#include "nlcg/limits.hpp"
#include "nlcg/mixing_network.hpp"
#include "nlcg/piece_optimize.hpp"
#include "nlcg/rank_check.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kMissingFile = 2, kParseError = 3, kCapViolation = 4 };

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) std::cout << text;
  else nlcg::io::write_text_file(out, text);
}

struct SolveArgs {
  std::string instance, network, method = "enumerate", inner = "exact", out;
  int rounds = nlcg::kDefaultMaxSumRounds, n_max = 4;
  double epsilon0 = 0.2;
  std::uint64_t seed = 0, max_joint_actions = nlcg::SolverLimits{}.max_joint_actions;
  int max_hidden = nlcg::SolverLimits{}.max_enumerated_hidden_units;
};

int run_solve(const SolveArgs& a) {
  using namespace nlcg;
  const auto inst = io::instance_from_json(io::read_json_file(a.instance));
  const auto net = io::network_from_json(io::read_json_file(a.network));
  SolverLimits limits;
  limits.max_joint_actions = a.max_joint_actions;
  limits.max_enumerated_hidden_units = a.max_hidden;

  io::json result;
  if (a.method == "brute") {
    result = io::brute_result_to_json(brute_force_max(inst.graph, inst.utilities, inst.payoffs, net, limits));
  } else if (a.method == "enumerate") {
    const auto inner = a.inner == "exact" ? InnerSolver::exact() : InnerSolver::max_sum(a.rounds);
    result = io::solve_result_to_json(enumerate_optimize(inst.graph, inst.utilities, inst.payoffs, net, inner, limits),
                                      "enumerate_" + a.inner);
  } else {
    IterativeOptions o;
    o.rounds = a.rounds;
    o.n_max = a.n_max;
    o.epsilon0 = a.epsilon0;
    o.seed = a.seed;
    result = io::solve_result_to_json(iterative_optimize(inst.graph, inst.utilities, inst.payoffs, net, o), "iterative");
  }
  emit(io::dump(result), a.out);
  return kOk;
}

struct BenchArgs {
  nlcg::bench::BenchConfig config;
  std::vector<std::string> methods{"enumerate_exact", "iterative", "brute"};
  std::string out;
  bool no_timing = false;
};

int run_bench(BenchArgs a) {
  using namespace nlcg::bench;
  a.config.methods.clear();
  for (const auto& m : a.methods) a.config.methods.push_back(parse_method(m));
  const auto records = nlcg::bench::run_bench(a.config);
  emit(to_csv(records, !a.no_timing), a.out);
  // Keep stdout pure CSV when no output file is given.
  std::ostream& log = a.out.empty() ? std::cerr : std::cout;
  for (const auto& [m, s] : summarize(records)) {
    log << "summary method=" << to_string(m) << " runs=" << s.runs << " mean_gap="
        << (s.gap_runs > 0 ? nlcg::io::format_double(s.mean_gap) : "n/a")
        << " mean_time_s=" << nlcg::io::format_double(s.mean_time_s)
        << " mean_pieces_visited=" << nlcg::io::format_double(s.mean_pieces) << "\n";
  }
  return kOk;
}

struct TrainArgs {
  nlcg::matrix_game::TrainConfig config;
  std::string learner = "nlcg", optimizer = "rmsprop", out;
};

int run_train(TrainArgs a) {
  namespace mg = nlcg::matrix_game;
  a.config.learner.kind = a.learner == "linear" ? mg::LearnerKind::linear : mg::LearnerKind::nonlinear;
  a.config.optimizer.kind = a.optimizer == "sgd" ? mg::OptimizerKind::sgd : mg::OptimizerKind::rmsprop;
  const auto r = mg::train_matrix_game(a.config);
  const std::string report = nlcg::io::dump(nlcg::io::report_to_json(r.report));
  if (!a.out.empty()) {
    const std::filesystem::path dir(a.out);
    std::filesystem::create_directories(dir);
    nlcg::io::write_text_file(dir / "curve.csv", nlcg::io::curve_csv(r.curve));
    nlcg::io::write_text_file(dir / "report.json", report);
    nlcg::io::write_text_file(dir / "checkpoint.json", nlcg::io::dump(nlcg::io::checkpoint_to_json(r.model)));
  }
  std::cout << report;
  return kOk;
}

int run_rank_check() {
  const auto r = nlcg::rank_check();
  std::cout << "coef_rank=" << r.coefficient_rank << " aug_rank=" << r.augmented_rank << "\n";
  return r.coefficient_rank == 3 && r.augmented_rank == 4 ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solve, benchmark and train non-linear coordination graphs."};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Maximize a mixing network over a coordination graph instance");
  s->add_option("--instance", solve.instance, "Instance JSON")->required();
  s->add_option("--network", solve.network, "Mixing network JSON")->required();
  s->add_option("--method", solve.method)->check(CLI::IsMember({"enumerate", "iterative", "brute"}))->capture_default_str();
  s->add_option("--inner", solve.inner, "Per-piece solver for enumerate")
      ->check(CLI::IsMember({"maxsum", "exact"}))
      ->capture_default_str();
  s->add_option("--rounds", solve.rounds, "Max-Sum rounds")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--n-max", solve.n_max, "Iterative piece budget")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--epsilon0", solve.epsilon0, "Iterative break/jump schedule scale")->capture_default_str();
  s->add_option("--seed", solve.seed)->capture_default_str();
  s->add_option("--max-joint-actions", solve.max_joint_actions, "Cap for exhaustive searches")->capture_default_str();
  s->add_option("--max-hidden", solve.max_hidden, "Cap on hidden units for enumeration")->capture_default_str();
  s->add_option("--out", solve.out, "Write the result here instead of stdout");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Compare solvers on seeded random instances");
  b->add_option("--instances", bench.config.n_instances)->check(CLI::NonNegativeNumber)->capture_default_str();
  b->add_option("--agents", bench.config.n_agents)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--actions", bench.config.n_actions)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--widths", bench.config.widths, "Hidden widths of the mixing network")->capture_default_str();
  b->add_option("--alpha", bench.config.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  b->add_option("--methods", bench.methods)
      ->check(CLI::IsMember({"enumerate_exact", "enumerate_maxsum", "iterative", "brute"}))
      ->capture_default_str();
  b->add_option("--rounds", bench.config.rounds)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--n-max", bench.config.n_max)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--epsilon0", bench.config.epsilon0)->capture_default_str();
  b->add_option("--seed", bench.config.seed)->capture_default_str();
  b->add_option("--max-joint-actions", bench.config.limits.max_joint_actions)->capture_default_str();
  b->add_option("--out", bench.out, "CSV path (default stdout)");
  b->add_flag("--no-timing", bench.no_timing, "Write '-' for wall time so output is reproducible");

  TrainArgs train;
  auto& tc = train.config;
  auto* t = app.add_subcommand("train-matrix", "TD learning on the two-step matrix game");
  t->add_option("--learner", train.learner)->check(CLI::IsMember({"nlcg", "linear"}))->capture_default_str();
  t->add_option("--episodes", tc.episodes)->check(CLI::NonNegativeNumber)->capture_default_str();
  t->add_option("--epsilon", tc.epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  t->add_option("--gamma", tc.gamma)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  t->add_option("--buffer", tc.buffer_episodes, "Replay capacity in episodes")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--batch", tc.batch_episodes, "Episodes per update")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--target-update", tc.target_update_episodes)->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--lr", tc.optimizer.lr)->capture_default_str();
  t->add_option("--optimizer", train.optimizer)->check(CLI::IsMember({"rmsprop", "sgd"}))->capture_default_str();
  t->add_option("--alpha", tc.learner.alpha, "Mixing LeakyReLU slope")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  t->add_option("--mix-width", tc.learner.mix_width)->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--hidden", tc.learner.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--eval-interval", tc.eval_interval)->capture_default_str();
  t->add_option("--seed", tc.seed)->capture_default_str();
  t->add_option("--out", train.out, "Directory for curve.csv, report.json and checkpoint.json");

  auto* r = app.add_subcommand("rank-check", "Rank test of the linear decomposition of the two-step rewards");

  int m = 0, d = 0;
  auto* c = app.add_subcommand("count-pieces", "Upper bound on the linear pieces of a one-hidden-layer network");
  c->add_option("--m", m, "Hidden units")->required();
  c->add_option("--d", d, "Input dimension")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) return run_solve(solve);
    if (b->parsed()) return run_bench(bench);
    if (t->parsed()) return run_train(train);
    if (r->parsed()) return run_rank_check();
    if (c->parsed()) {
      std::cout << nlcg::count_pieces(m, d) << "\n";
      return kOk;
    }
  } catch (const nlcg::io::MissingFile& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingFile;
  } catch (const nlcg::io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const nlcg::CapExceeded& e) {
    std::cerr << "error: cap " << e.cap() << " exceeded: " << e.what() << "\n";
    return kCapViolation;
  } catch (const std::overflow_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
