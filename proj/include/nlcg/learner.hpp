#pragma once

// Q-learning on the two-step matrix game with a coordination-graph value
// function. Utilities and payoffs come from small shared MLPs conditioned on
// the one-hot state and agent ids. The non-linear learner mixes them with a
// one-hidden-layer LeakyReLU network whose parameters a hypernetwork produces
// from the state; the linear learner uses the plain mean-utility plus
// mean-payoff sum.
//
// All parameters live in one flat vector so the target copy, the optimizer and
// finite-difference checks can treat the model uniformly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlcg/coordination_graph.hpp"
#include "nlcg/matrix_game.hpp"
#include "nlcg/mixing_network.hpp"
#include "nlcg/piece_optimize.hpp"
#include "nlcg/weighted_max_sum.hpp"

namespace nlcg::matrix_game {

enum class LearnerKind { nonlinear, linear };

inline const char* to_string(LearnerKind k) { return k == LearnerKind::nonlinear ? "nlcg" : "linear"; }

struct LearnerConfig {
  LearnerKind kind = LearnerKind::nonlinear;
  int hidden = 64;          // utility, payoff and hypernet hidden width
  int mix_width = 4;        // hidden units of the mixing network
  double alpha = 0.1;       // LeakyReLU negative slope of the mixing network
  int max_sum_rounds = kDefaultMaxSumRounds;
};

/// Offsets of a two-layer ReLU MLP inside the flat parameter vector.
struct MlpLayout {
  int in = 0, hidden = 0, out = 0;
  Eigen::Index offset = 0;

  Eigen::Index w1() const { return offset; }
  Eigen::Index b1() const { return w1() + Eigen::Index{hidden} * in; }
  Eigen::Index w2() const { return b1() + hidden; }
  Eigen::Index b2() const { return w2() + Eigen::Index{out} * hidden; }
  Eigen::Index size() const { return Eigen::Index{hidden} * in + hidden + Eigen::Index{out} * hidden + out; }
};

namespace detail {

struct MlpTape {
  Eigen::VectorXd x, pre, out;
};

inline MlpTape mlp_forward(const MlpLayout& l, const Eigen::VectorXd& params, const Eigen::VectorXd& x) {
  const double* p = params.data();
  Eigen::Map<const Eigen::MatrixXd> W1(p + l.w1(), l.hidden, l.in);
  Eigen::Map<const Eigen::VectorXd> b1(p + l.b1(), l.hidden);
  Eigen::Map<const Eigen::MatrixXd> W2(p + l.w2(), l.out, l.hidden);
  Eigen::Map<const Eigen::VectorXd> b2(p + l.b2(), l.out);
  MlpTape t;
  t.x = x;
  t.pre = W1 * x + b1;
  t.out = W2 * t.pre.cwiseMax(0.0) + b2;
  return t;
}

/// Adds d(out)/d(params) . dout into grad.
inline void mlp_backward(const MlpLayout& l, const Eigen::VectorXd& params, const MlpTape& t,
                         const Eigen::VectorXd& dout, Eigen::VectorXd& grad) {
  const double* p = params.data();
  Eigen::Map<const Eigen::MatrixXd> W2(p + l.w2(), l.out, l.hidden);
  double* g = grad.data();
  Eigen::Map<Eigen::MatrixXd> dW1(g + l.w1(), l.hidden, l.in);
  Eigen::Map<Eigen::VectorXd> db1(g + l.b1(), l.hidden);
  Eigen::Map<Eigen::MatrixXd> dW2(g + l.w2(), l.out, l.hidden);
  Eigen::Map<Eigen::VectorXd> db2(g + l.b2(), l.out);
  const Eigen::VectorXd act = t.pre.cwiseMax(0.0);
  dW2.noalias() += dout * act.transpose();
  db2 += dout;
  Eigen::VectorXd dpre = W2.transpose() * dout;
  for (Eigen::Index k = 0; k < dpre.size(); ++k)
    if (t.pre[k] <= 0.0) dpre[k] = 0.0;
  dW1.noalias() += dpre * t.x.transpose();
  db1 += dpre;
}

inline Eigen::VectorXd one_hot_state(State s) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kObservedStates);
  x[static_cast<int>(s)] = 1.0;
  return x;
}

}  // namespace detail

/// Greedy joint action and its Q value.
struct GreedyChoice {
  double q = 0.0;
  JointAction action;
};

class CgLearner {
 public:
  static CgLearner initialize(const LearnerConfig& config, std::uint64_t seed) {
    CgLearner model(config);
    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    std::mt19937_64 rng(seed);
    auto fill = [&](const MlpLayout& l) {
      std::uniform_real_distribution<double> first(-1.0 / std::sqrt(l.in), 1.0 / std::sqrt(l.in));
      std::uniform_real_distribution<double> second(-1.0 / std::sqrt(l.hidden), 1.0 / std::sqrt(l.hidden));
      for (Eigen::Index k = l.w1(); k < l.w2(); ++k) model.params_[k] = first(rng);
      for (Eigen::Index k = l.w2(); k < l.offset + l.size(); ++k) model.params_[k] = second(rng);
    };
    fill(model.utility_);
    fill(model.payoff_);
    if (config.kind == LearnerKind::nonlinear) fill(model.hyper_);
    return model;
  }

  const LearnerConfig& config() const { return config_; }
  const CoordinationGraph& graph() const { return graph_; }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  const MlpLayout& utility_layout() const { return utility_; }
  const MlpLayout& payoff_layout() const { return payoff_; }
  /// Only meaningful for the non-linear learner.
  const MlpLayout& hyper_layout() const { return hyper_; }

  /// Number of mixing-network parameters the hypernet emits.
  int mixer_parameter_count() const { return graph_.input_dim() * config_.mix_width + 2 * config_.mix_width + 1; }

  std::pair<UtilityTable, PayoffTable> tables(State s) const {
    check_state(s);
    UtilityTable f_v = zero_utilities(graph_);
    PayoffTable f_e = zero_payoffs(graph_);
    for (int i = 0; i < kAgents; ++i) {
      const auto t = detail::mlp_forward(utility_, params_, utility_input(s, i));
      f_v.values.row(i) = t.out.transpose();
    }
    for (int e = 0; e < graph_.n_edges(); ++e) {
      const auto t = detail::mlp_forward(payoff_, params_, payoff_input(s, e));
      for (int ai = 0; ai < kActions; ++ai)
        for (int aj = 0; aj < kActions; ++aj) f_e.slices[static_cast<std::size_t>(e)](ai, aj) = t.out[ai * kActions + aj];
    }
    return {std::move(f_v), std::move(f_e)};
  }

  /// The state-conditioned mixing network (non-linear learner only).
  MixingNetwork mixer(State s) const {
    if (config_.kind != LearnerKind::nonlinear) throw std::logic_error("the linear learner has no mixing network");
    check_state(s);
    const auto t = detail::mlp_forward(hyper_, params_, detail::one_hot_state(s));
    const MixerView v = split_mixer(t.out);
    std::vector<MixingLayer> layers(2);
    layers[0].W = v.W1;
    layers[0].b = v.b1;
    layers[1].W = v.w2_raw.cwiseAbs();
    layers[1].b = Eigen::VectorXd::Constant(1, v.b2);
    return MixingNetwork(config_.alpha, std::move(layers));
  }

  double q_tot(State s, const JointAction& a) const {
    Eigen::VectorXd unused;
    return evaluate(s, a, 0.0, unused, false);
  }

  /// Returns Q_tot(s, a) and adds scale * dQ_tot/dparams into grad.
  double accumulate_gradient(State s, const JointAction& a, double scale, Eigen::VectorXd& grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has the wrong size");
    return evaluate(s, a, scale, grad, true);
  }

  /// Greedy action: piece enumeration with an exact inner solver for the
  /// non-linear learner, weighted Max-Sum for the linear one.
  GreedyChoice greedy(State s) const {
    auto [f_v, f_e] = tables(s);
    if (config_.kind == LearnerKind::nonlinear) {
      const auto r = enumerate_optimize(graph_, f_v, f_e, mixer(s), InnerSolver::exact());
      return {r.q_max, r.a_max};
    }
    const auto r = w_max_sum(graph_, f_v, f_e, Eigen::VectorXd::Constant(kAgents, 1.0 / kAgents),
                             Eigen::VectorXd::Constant(graph_.n_edges(), 1.0 / graph_.n_edges()), 0.0,
                             config_.max_sum_rounds);
    return {r.q_max, r.a_max};
  }

 private:
  explicit CgLearner(const LearnerConfig& config) : config_(config), graph_(complete_graph(kAgents, kActions)) {
    if (config_.hidden < 1) throw std::invalid_argument("hidden width must be positive");
    if (config_.kind == LearnerKind::nonlinear && config_.mix_width < 1)
      throw std::invalid_argument("mixing width must be positive");
    utility_ = {kObservedStates + kAgents, config_.hidden, kActions, 0};
    payoff_ = {kObservedStates + 2 * kAgents, config_.hidden, kActions * kActions, utility_.size()};
    Eigen::Index total = payoff_.offset + payoff_.size();
    if (config_.kind == LearnerKind::nonlinear) {
      hyper_ = {kObservedStates, config_.hidden, mixer_parameter_count(), total};
      total += hyper_.size();
    }
    params_ = Eigen::VectorXd::Zero(total);
  }

  struct MixerView {
    Eigen::MatrixXd W1;  // d x m
    Eigen::VectorXd b1;
    Eigen::VectorXd w2_raw;  // before the absolute value
    double b2 = 0.0;
  };

  MixerView split_mixer(const Eigen::VectorXd& out) const {
    const int d = graph_.input_dim(), m = config_.mix_width;
    MixerView v;
    v.W1 = Eigen::Map<const Eigen::MatrixXd>(out.data(), d, m);
    v.b1 = out.segment(d * m, m);
    v.w2_raw = out.segment(d * m + m, m);
    v.b2 = out[d * m + 2 * m];
    return v;
  }

  static void check_state(State s) {
    if (s == State::Terminal) throw std::invalid_argument("terminal state has no Q values");
  }

  Eigen::VectorXd utility_input(State s, int agent) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(utility_.in);
    x[static_cast<int>(s)] = 1.0;
    x[kObservedStates + agent] = 1.0;
    return x;
  }

  Eigen::VectorXd payoff_input(State s, int e) const {
    const auto [i, j] = graph_.edge(e);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(payoff_.in);
    x[static_cast<int>(s)] = 1.0;
    x[kObservedStates + i] = 1.0;
    x[kObservedStates + kAgents + j] = 1.0;
    return x;
  }

  double evaluate(State s, const JointAction& a, double scale, Eigen::VectorXd& grad, bool backprop) const {
    check_state(s);
    graph_.check_action(a);
    const int n = kAgents, E = graph_.n_edges(), d = graph_.input_dim();

    std::vector<detail::MlpTape> util_tapes, pay_tapes;
    util_tapes.reserve(n);
    pay_tapes.reserve(static_cast<std::size_t>(E));
    Eigen::VectorXd q(d);
    for (int i = 0; i < n; ++i) {
      util_tapes.push_back(detail::mlp_forward(utility_, params_, utility_input(s, i)));
      q[i] = util_tapes.back().out[a[static_cast<std::size_t>(i)]];
    }
    for (int e = 0; e < E; ++e) {
      const auto [i, j] = graph_.edge(e);
      pay_tapes.push_back(detail::mlp_forward(payoff_, params_, payoff_input(s, e)));
      q[n + e] = pay_tapes.back().out[a[static_cast<std::size_t>(i)] * kActions + a[static_cast<std::size_t>(j)]];
    }

    double value = 0.0;
    Eigen::VectorXd dq(d);
    if (config_.kind == LearnerKind::linear) {
      value = q.head(n).sum() / n + q.tail(E).sum() / E;
      dq.head(n).setConstant(1.0 / n);
      dq.tail(E).setConstant(1.0 / E);
    } else {
      const auto hyper_tape = detail::mlp_forward(hyper_, params_, detail::one_hot_state(s));
      const MixerView v = split_mixer(hyper_tape.out);
      const Eigen::VectorXd z = v.W1.transpose() * q + v.b1;
      Eigen::VectorXd slope(z.size()), h(z.size());
      for (Eigen::Index k = 0; k < z.size(); ++k) {
        slope[k] = z[k] >= 0.0 ? 1.0 : config_.alpha;
        h[k] = slope[k] * z[k];
      }
      value = v.w2_raw.cwiseAbs().dot(h) + v.b2;
      if (backprop) {
        const int m = config_.mix_width;
        const Eigen::VectorXd dz = (v.w2_raw.cwiseAbs().array() * slope.array()).matrix();
        dq = v.W1 * dz;
        Eigen::VectorXd dout(hyper_tape.out.size());
        Eigen::Map<Eigen::MatrixXd>(dout.data(), d, m) = q * dz.transpose();
        dout.segment(d * m, m) = dz;
        for (int k = 0; k < m; ++k) {
          const double sign = v.w2_raw[k] > 0.0 ? 1.0 : (v.w2_raw[k] < 0.0 ? -1.0 : 0.0);
          dout[d * m + m + k] = sign * h[k];
        }
        dout[d * m + 2 * m] = 1.0;
        detail::mlp_backward(hyper_, params_, hyper_tape, scale * dout, grad);
      }
    }

    if (backprop) {
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd dout = Eigen::VectorXd::Zero(kActions);
        dout[a[static_cast<std::size_t>(i)]] = scale * dq[i];
        detail::mlp_backward(utility_, params_, util_tapes[static_cast<std::size_t>(i)], dout, grad);
      }
      for (int e = 0; e < E; ++e) {
        const auto [i, j] = graph_.edge(e);
        Eigen::VectorXd dout = Eigen::VectorXd::Zero(kActions * kActions);
        dout[a[static_cast<std::size_t>(i)] * kActions + a[static_cast<std::size_t>(j)]] = scale * dq[n + e];
        detail::mlp_backward(payoff_, params_, pay_tapes[static_cast<std::size_t>(e)], dout, grad);
      }
    }
    return value;
  }

  LearnerConfig config_;
  CoordinationGraph graph_;
  MlpLayout utility_, payoff_, hyper_;
  Eigen::VectorXd params_;
};

enum class OptimizerKind { rmsprop, sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double lr = 5e-4;
  double decay = 0.99;
  double eps = 1e-5;
  double grad_norm_clip = 10.0;  // <= 0 disables clipping
};

/// RMSprop (squared-gradient running average, no momentum) or plain SGD.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, Eigen::Index n) : config_(config), square_avg_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, Eigen::VectorXd grad) {
    if (config_.grad_norm_clip > 0.0) {
      const double norm = grad.norm();
      if (norm > config_.grad_norm_clip) grad *= config_.grad_norm_clip / (norm + 1e-6);
    }
    if (config_.kind == OptimizerKind::sgd) {
      params -= config_.lr * grad;
      return;
    }
    square_avg_ = config_.decay * square_avg_ + (1.0 - config_.decay) * grad.cwiseAbs2();
    params.array() -= config_.lr * grad.array() / (square_avg_.array().sqrt() + config_.eps);
  }

  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  Eigen::VectorXd square_avg_;
};

/// r + gamma * max_a' target(s', a'), or r at terminal transitions.
inline double td_target(const CgLearner& target, const Transition& t, double gamma) {
  if (t.done) return t.reward;
  return t.reward + gamma * target.greedy(t.next).q;
}

/// One gradient step on the mean squared TD error of `batch`. Returns the
/// loss before the step.
inline double td_update(CgLearner& model, const CgLearner& target, std::span<const Transition> batch,
                        Optimizer& optimizer, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_update needs a non-empty batch");
  // Max over next actions depends only on the next state; solve each once.
  std::map<State, double> next_max;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.parameter_count());
  const double n = static_cast<double>(batch.size());
  std::vector<double> errors;
  errors.reserve(batch.size());
  double loss = 0.0;
  for (const auto& t : batch) {
    double y = t.reward;
    if (!t.done) {
      auto it = next_max.find(t.next);
      if (it == next_max.end()) it = next_max.emplace(t.next, target.greedy(t.next).q).first;
      y += gamma * it->second;
    }
    const double q = model.q_tot(t.state, t.action);
    const double err = q - y;
    loss += err * err / n;
    model.accumulate_gradient(t.state, t.action, 2.0 * err / n, grad);
  }
  optimizer.step(model.parameters(), std::move(grad));
  return loss;
}

struct TrainConfig {
  LearnerConfig learner;
  int episodes = 5000;
  double epsilon = 1.0;
  double gamma = 0.99;
  std::size_t buffer_episodes = 500;
  std::size_t batch_episodes = 32;
  int target_update_episodes = 100;
  OptimizerConfig optimizer;
  int eval_interval = 100;
  std::uint64_t seed = 0;
};

struct CurvePoint {
  int episode = 0;
  double eval_return = 0.0;
  double td_loss = 0.0;  // mean over updates since the previous point
};

/// Learned Q values laid out like the paper-style tables.
struct QReport {
  LearnerKind kind = LearnerKind::nonlinear;
  // Q(S1, agent 0 plays A / B) at the best completion by the other agents.
  double state1_a = 0.0;
  double state1_b = 0.0;
  // Mean Q over joint actions with #B = 0..4.
  std::array<double, kAgents + 1> state2a{};
  std::array<double, kAgents + 1> state2b{};
  int greedy_first_action = kActionA;
  JointAction greedy_first_joint;
  double greedy_return = 0.0;
};

struct TrainResult {
  CgLearner model;
  std::vector<CurvePoint> curve;
  QReport report;
};

/// Return of one greedy episode.
inline double greedy_return(const CgLearner& model) {
  TwoStepGame game;
  double total = 0.0;
  while (game.state() != State::Terminal) total += game.step(model.greedy(game.state()).action).reward;
  return total;
}

inline QReport make_report(const CgLearner& model) {
  QReport r;
  r.kind = model.config().kind;
  std::array<double, 2> best_first{-std::numeric_limits<double>::infinity(),
                                   -std::numeric_limits<double>::infinity()};
  std::array<int, kAgents + 1> counts{};
  JointAction a(kAgents, 0);
  do {
    best_first[static_cast<std::size_t>(a[0])] = std::max(best_first[static_cast<std::size_t>(a[0])], model.q_tot(State::S1, a));
    const auto k = static_cast<std::size_t>(count_b(a));
    r.state2a[k] += model.q_tot(State::S2A, a);
    r.state2b[k] += model.q_tot(State::S2B, a);
    ++counts[k];
  } while (next_joint_action(a, kActions));
  for (std::size_t k = 0; k <= kAgents; ++k) {
    r.state2a[k] /= counts[k];
    r.state2b[k] /= counts[k];
  }
  r.state1_a = best_first[kActionA];
  r.state1_b = best_first[kActionB];
  const auto g = model.greedy(State::S1);
  r.greedy_first_joint = g.action;
  r.greedy_first_action = g.action[0];
  r.greedy_return = greedy_return(model);
  return r;
}

/// Called after every episode's update and target copy.
using TrainObserver = std::function<void(int episode, const CgLearner& model, const CgLearner& target)>;

inline TrainResult train_matrix_game(const TrainConfig& config, const TrainObserver& observer = {}) {
  if (config.episodes < 0) throw std::invalid_argument("episode count must be non-negative");
  if (config.batch_episodes == 0) throw std::invalid_argument("batch size must be positive");
  std::mt19937_64 rng(config.seed);
  CgLearner model = CgLearner::initialize(config.learner, rng());
  CgLearner target = model;
  Optimizer optimizer(config.optimizer, model.parameter_count());
  ReplayBuffer buffer(config.buffer_episodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> random_action(0, kActions - 1);

  std::vector<CurvePoint> curve;
  double loss_sum = 0.0;
  int loss_count = 0;
  int last_target_update = 0;
  std::vector<Transition> batch;

  for (int episode = 1; episode <= config.episodes; ++episode) {
    TwoStepGame game;
    Episode ep;
    while (game.state() != State::Terminal) {
      JointAction a(kAgents);
      std::optional<JointAction> greedy;
      for (int i = 0; i < kAgents; ++i) {
        if (unit(rng) < config.epsilon) {
          a[static_cast<std::size_t>(i)] = random_action(rng);
        } else {
          if (!greedy) greedy = model.greedy(game.state()).action;
          a[static_cast<std::size_t>(i)] = (*greedy)[static_cast<std::size_t>(i)];
        }
      }
      const State s = game.state();
      const StepResult r = game.step(a);
      ep.push_back({s, a, r.reward, r.next, r.done});
    }
    buffer.push(std::move(ep));

    if (buffer.size() >= config.batch_episodes) {
      batch.clear();
      for (const Episode* e : buffer.sample(config.batch_episodes, rng)) batch.insert(batch.end(), e->begin(), e->end());
      loss_sum += td_update(model, target, batch, optimizer, config.gamma);
      ++loss_count;
    }
    if (episode - last_target_update >= config.target_update_episodes) {
      target = model;
      last_target_update = episode;
    }
    if (observer) observer(episode, model, target);
    if (config.eval_interval > 0 && (episode % config.eval_interval == 0 || episode == config.episodes)) {
      curve.push_back({episode, greedy_return(model), loss_count > 0 ? loss_sum / loss_count : 0.0});
      loss_sum = 0.0;
      loss_count = 0;
    }
  }
  QReport report = make_report(model);
  return {std::move(model), std::move(curve), std::move(report)};
}

}  // namespace nlcg::matrix_game
