#pragma once

// Randomized optimality and timing benchmark: every method runs on the same
// seeded instances and is scored against the brute-force optimum.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlcg/coordination_graph.hpp"
#include "nlcg/io.hpp"
#include "nlcg/limits.hpp"
#include "nlcg/mixing_network.hpp"
#include "nlcg/piece_optimize.hpp"

namespace nlcg::bench {

enum class Method { enumerate_exact, enumerate_maxsum, iterative, brute };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::enumerate_exact: return "enumerate_exact";
    case Method::enumerate_maxsum: return "enumerate_maxsum";
    case Method::iterative: return "iterative";
    case Method::brute: return "brute";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (auto m : {Method::enumerate_exact, Method::enumerate_maxsum, Method::iterative, Method::brute})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown bench method: " + s);
}

struct BenchConfig {
  int n_instances = 20;
  int n_agents = 4;
  int n_actions = 3;
  std::vector<int> widths{4};  // hidden widths of the mixing network
  double alpha = 0.2;
  std::vector<Method> methods{Method::enumerate_exact, Method::iterative, Method::brute};
  int rounds = kDefaultMaxSumRounds;
  int n_max = 4;
  double epsilon0 = 0.2;
  std::uint64_t seed = 0;
  SolverLimits limits;
};

struct BenchRecord {
  std::uint64_t instance_seed = 0;
  Method method = Method::brute;
  double q_max = 0.0;
  std::optional<double> oracle_q;  // empty when the oracle exceeds its cap
  double wall_time_s = 0.0;        // solve call only
  std::uint64_t pieces_visited = 0;
  bool capped = false;  // the method itself exceeded a cap; q_max is meaningless

  std::optional<double> gap() const {
    if (!oracle_q || capped) return std::nullopt;
    return *oracle_q - q_max;
  }
};

struct Instance {
  CoordinationGraph graph;
  UtilityTable utilities;
  PayoffTable payoffs;
  MixingNetwork net;
};

/// Complete graph with U(-1, 1) tables and a random mixing network.
inline Instance make_instance(const BenchConfig& c, std::uint64_t instance_seed) {
  auto g = complete_graph(c.n_agents, c.n_actions);
  auto [f_v, f_e] = sample_random_tables(g, instance_seed);
  auto net = sample_random_net(g.input_dim(), c.widths, c.alpha, instance_seed ^ 0x9e3779b97f4a7c15ULL);
  return {std::move(g), std::move(f_v), std::move(f_e), std::move(net)};
}

inline BenchRecord run_method(const Instance& inst, Method m, const BenchConfig& c, std::uint64_t instance_seed) {
  BenchRecord r;
  r.instance_seed = instance_seed;
  r.method = m;
  const auto start = std::chrono::steady_clock::now();
  switch (m) {
    case Method::enumerate_exact:
    case Method::enumerate_maxsum: {
      const auto inner = m == Method::enumerate_exact ? InnerSolver::exact() : InnerSolver::max_sum(c.rounds);
      const auto s = enumerate_optimize(inst.graph, inst.utilities, inst.payoffs, inst.net, inner, c.limits);
      r.q_max = s.q_max;
      r.pieces_visited = s.pieces_visited;
      break;
    }
    case Method::iterative: {
      IterativeOptions o;
      o.rounds = c.rounds;
      o.n_max = c.n_max;
      o.epsilon0 = c.epsilon0;
      o.seed = instance_seed;
      const auto s = iterative_optimize(inst.graph, inst.utilities, inst.payoffs, inst.net, o);
      r.q_max = s.q_max;
      r.pieces_visited = s.pieces_visited;
      break;
    }
    case Method::brute: {
      const auto s = brute_force_max(inst.graph, inst.utilities, inst.payoffs, inst.net, c.limits);
      r.q_max = s.q;
      break;
    }
  }
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// One record per (instance, method), instances in seed order. Cap violations
/// are flagged in the record instead of aborting the run.
inline std::vector<BenchRecord> run_bench(const BenchConfig& c) {
  std::vector<BenchRecord> out;
  for (int k = 0; k < c.n_instances; ++k) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(k);
    const Instance inst = make_instance(c, seed);
    std::optional<double> oracle;
    try {
      oracle = brute_force_max(inst.graph, inst.utilities, inst.payoffs, inst.net, c.limits).q;
    } catch (const CapExceeded&) {
    }
    for (Method m : c.methods) {
      BenchRecord r;
      try {
        r = run_method(inst, m, c, seed);
      } catch (const CapExceeded&) {
        r.instance_seed = seed;
        r.method = m;
        r.capped = true;
      }
      r.oracle_q = oracle;
      out.push_back(std::move(r));
    }
  }
  return out;
}

/// Columns: instance_seed, method, q_max, oracle_q, gap, wall_time_s,
/// pieces_visited. Values skipped by a cap are written as "cap"; with timing off the
/// wall time is "-" so repeated runs are byte-identical.
inline std::string to_csv(const std::vector<BenchRecord>& records, bool timing = true) {
  std::ostringstream out;
  out << "instance_seed,method,q_max,oracle_q,gap,wall_time_s,pieces_visited\n";
  for (const auto& r : records) {
    out << r.instance_seed << ',' << to_string(r.method) << ',' << (r.capped ? "cap" : io::format_double(r.q_max)) << ',';
    if (r.oracle_q) out << io::format_double(*r.oracle_q) << ',' << io::format_double(*r.gap()) << ',';
    else out << "cap,cap,";
    out << (timing ? io::format_double(r.wall_time_s) : std::string("-")) << ',' << r.pieces_visited << '\n';
  }
  return out.str();
}

struct MethodSummary {
  int runs = 0;
  int gap_runs = 0;
  double mean_gap = 0.0;
  double max_gap = 0.0;
  double mean_time_s = 0.0;
  double mean_pieces = 0.0;
};

inline std::map<Method, MethodSummary> summarize(const std::vector<BenchRecord>& records) {
  std::map<Method, MethodSummary> out;
  for (const auto& r : records) {
    auto& s = out[r.method];
    if (r.capped) continue;
    ++s.runs;
    s.mean_time_s += r.wall_time_s;
    s.mean_pieces += static_cast<double>(r.pieces_visited);
    if (const auto g = r.gap()) {
      ++s.gap_runs;
      s.mean_gap += *g;
      s.max_gap = s.gap_runs == 1 ? *g : std::max(s.max_gap, *g);
    }
  }
  for (auto& [m, s] : out) {
    if (s.runs == 0) continue;
    s.mean_time_s /= s.runs;
    s.mean_pieces /= s.runs;
    if (s.gap_runs > 0) s.mean_gap /= s.gap_runs;
  }
  return out;
}

}  // namespace nlcg::bench
