#pragma once

// JSON and CSV adapters for instances, mixing networks, solver results and
// matrix-game artifacts. Objects are written with sorted keys and two-space
// indentation so identical inputs give byte-identical files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "nlcg/coordination_graph.hpp"
#include "nlcg/learner.hpp"
#include "nlcg/mixing_network.hpp"
#include "nlcg/piece_optimize.hpp"

namespace nlcg::io {

using nlohmann::json;

class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON or a document that violates its schema.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double x) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field \"") + key + "\"");
  return *it;
}

inline int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) schema_error(where, "expected an integer");
  return v.get<int>();
}

inline double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) schema_error(where, "expected a number");
  return v.get<double>();
}

inline Eigen::VectorXd as_vector(const json& v, const std::string& where) {
  if (!v.is_array()) schema_error(where, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = as_double(v[k], where + "[" + std::to_string(k) + "]");
  return out;
}

inline Eigen::MatrixXd as_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) schema_error(where, "expected a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = as_vector(v[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) schema_error(where, "rows have different lengths");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

inline json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

}  // namespace detail

struct Instance {
  CoordinationGraph graph;
  UtilityTable utilities;
  PayoffTable payoffs;
};

/// { "n_agents", "n_actions", "edges" (optional, default complete),
///   "utilities": n_agents x n_actions, "payoffs": one n_actions x n_actions
///   table per edge, rows indexed by the lower agent's action }.
inline Instance instance_from_json(const json& j) {
  using namespace detail;
  const std::string where = "instance";
  const int n = as_int(field(j, "n_agents", where), where + ".n_agents");
  const int A = as_int(field(j, "n_actions", where), where + ".n_actions");
  std::vector<Edge> edges;
  bool complete = true;
  if (const auto it = j.find("edges"); it != j.end()) {
    complete = false;
    if (!it->is_array()) schema_error(where + ".edges", "expected an array of [i, j] pairs");
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 2) schema_error(where + ".edges", "expected an array of [i, j] pairs");
      edges.emplace_back(as_int(e[0], where + ".edges"), as_int(e[1], where + ".edges"));
    }
  }
  try {
    Instance inst{complete ? complete_graph(n, A) : CoordinationGraph(n, A, std::move(edges)), {}, {}};
    inst.utilities.values = as_matrix(field(j, "utilities", where), where + ".utilities");
    const json& p = field(j, "payoffs", where);
    if (!p.is_array()) schema_error(where + ".payoffs", "expected an array of tables");
    for (std::size_t e = 0; e < p.size(); ++e)
      inst.payoffs.slices.push_back(as_matrix(p[e], where + ".payoffs[" + std::to_string(e) + "]"));
    check_tables(inst.graph, inst.utilities, inst.payoffs);
    return inst;
  } catch (const std::invalid_argument& e) {
    schema_error(where, e.what());
  }
}

inline json instance_to_json(const CoordinationGraph& g, const UtilityTable& f_v, const PayoffTable& f_e) {
  json edges = json::array();
  for (const auto& [i, k] : g.edges()) edges.push_back({i, k});
  json payoffs = json::array();
  for (const auto& s : f_e.slices) payoffs.push_back(detail::matrix_json(s));
  return {{"n_agents", g.n_agents()},
          {"n_actions", g.n_actions()},
          {"edges", std::move(edges)},
          {"utilities", detail::matrix_json(f_v.values)},
          {"payoffs", std::move(payoffs)}};
}

/// { "alpha", "layers": [{ "W": prev x next, "b": next }, ...] }.
inline MixingNetwork network_from_json(const json& j) {
  using namespace detail;
  const std::string where = "network";
  const double alpha = as_double(field(j, "alpha", where), where + ".alpha");
  const json& ls = field(j, "layers", where);
  if (!ls.is_array()) schema_error(where + ".layers", "expected an array of layers");
  std::vector<MixingLayer> layers;
  for (std::size_t k = 0; k < ls.size(); ++k) {
    const std::string w = where + ".layers[" + std::to_string(k) + "]";
    layers.push_back({as_matrix(field(ls[k], "W", w), w + ".W"), as_vector(field(ls[k], "b", w), w + ".b")});
  }
  try {
    return MixingNetwork(alpha, std::move(layers));
  } catch (const std::invalid_argument& e) {
    schema_error(where, e.what());
  }
}

inline json network_to_json(const MixingNetwork& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) layers.push_back({{"W", detail::matrix_json(l.W)}, {"b", detail::vector_json(l.b)}});
  return {{"alpha", net.alpha()}, {"layers", std::move(layers)}};
}

inline json solve_result_to_json(const SolveResult& r, const std::string& method) {
  return {{"method", method},
          {"a_max", r.a_max},
          {"q_max", r.q_max},
          {"pieces_visited", r.pieces_visited},
          {"value_trace", r.value_trace},
          {"terminated_by", to_string(r.terminated_by)}};
}

inline json brute_result_to_json(const BruteForceResult& r) {
  return {{"method", "brute"},
          {"a_max", r.a},
          {"q_max", r.q},
          {"pieces_visited", 0},
          {"evaluations", r.evaluations}};
}

namespace mg = nlcg::matrix_game;

/// Q values laid out as State 1 (agent 0's action) and States 2A/2B (#B).
inline json report_to_json(const mg::QReport& r) {
  auto counts = [](const std::array<double, mg::kAgents + 1>& v) {
    json out = json::object();
    for (std::size_t k = 0; k < v.size(); ++k) out[std::to_string(k)] = v[k];
    return out;
  };
  return {{"learner", mg::to_string(r.kind)},
          {"state1", {{"A", r.state1_a}, {"B", r.state1_b}}},
          {"state2a_by_num_b", counts(r.state2a)},
          {"state2b_by_num_b", counts(r.state2b)},
          {"greedy_first_action", r.greedy_first_action == mg::kActionA ? "A" : "B"},
          {"greedy_first_joint_action", r.greedy_first_joint},
          {"greedy_return", r.greedy_return}};
}

inline json learner_config_to_json(const mg::LearnerConfig& c) {
  return {{"kind", mg::to_string(c.kind)},
          {"hidden", c.hidden},
          {"mix_width", c.mix_width},
          {"alpha", c.alpha},
          {"max_sum_rounds", c.max_sum_rounds}};
}

inline json checkpoint_to_json(const mg::CgLearner& model) {
  return {{"config", learner_config_to_json(model.config())}, {"parameters", detail::vector_json(model.parameters())}};
}

inline mg::CgLearner checkpoint_from_json(const json& j) {
  using namespace detail;
  const std::string where = "checkpoint";
  const json& c = field(j, "config", where);
  mg::LearnerConfig config;
  const json& kind = field(c, "kind", where + ".config");
  if (kind == "nlcg") config.kind = mg::LearnerKind::nonlinear;
  else if (kind == "linear") config.kind = mg::LearnerKind::linear;
  else schema_error(where + ".config.kind", "expected \"nlcg\" or \"linear\"");
  config.hidden = as_int(field(c, "hidden", where), where + ".config.hidden");
  config.mix_width = as_int(field(c, "mix_width", where), where + ".config.mix_width");
  config.alpha = as_double(field(c, "alpha", where), where + ".config.alpha");
  config.max_sum_rounds = as_int(field(c, "max_sum_rounds", where), where + ".config.max_sum_rounds");
  try {
    auto model = mg::CgLearner::initialize(config, 0);
    const auto params = as_vector(field(j, "parameters", where), where + ".parameters");
    if (params.size() != model.parameter_count()) schema_error(where + ".parameters", "wrong parameter count");
    model.parameters() = params;
    return model;
  } catch (const std::invalid_argument& e) {
    schema_error(where, e.what());
  }
}

/// Columns: episode, eval_return, td_loss.
inline std::string curve_csv(const std::vector<mg::CurvePoint>& curve) {
  std::ostringstream out;
  out << "episode,eval_return,td_loss\n";
  for (const auto& p : curve) out << p.episode << ',' << format_double(p.eval_return) << ',' << format_double(p.td_loss) << '\n';
  return out.str();
}

}  // namespace nlcg::io
