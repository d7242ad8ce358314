#pragma once

// The two-step cooperative matrix game with four agents and two actions.
// Agent 0's first action picks the second-stage game; the second-stage reward
// depends only on how many agents play B.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlcg/coordination_graph.hpp"

namespace nlcg::matrix_game {

inline constexpr int kAgents = 4;
inline constexpr int kActions = 2;
inline constexpr int kActionA = 0;
inline constexpr int kActionB = 1;
/// Non-terminal states; also the one-hot observation width.
inline constexpr int kObservedStates = 3;

enum class State { S1 = 0, S2A = 1, S2B = 2, Terminal = 3 };

inline const char* to_string(State s) {
  switch (s) {
    case State::S1: return "S1";
    case State::S2A: return "S2A";
    case State::S2B: return "S2B";
    case State::Terminal: return "Terminal";
  }
  return "?";
}

inline constexpr std::array<double, kAgents + 1> kRewardS2A{7.0, 7.0, 7.0, 7.0, 7.0};
inline constexpr std::array<double, kAgents + 1> kRewardS2B{0.0, -0.1, 0.1, 0.3, 8.0};

inline int count_b(const JointAction& a) {
  int n = 0;
  for (int x : a) n += x == kActionB;
  return n;
}

struct StepResult {
  double reward = 0.0;
  State next = State::Terminal;
  bool done = false;
};

/// Thrown when stepping a finished episode.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline StepResult env_step(State s, const JointAction& a) {
  if (s == State::Terminal) throw InvalidState("cannot step the two-step game after it terminated");
  if (static_cast<int>(a.size()) != kAgents) throw std::invalid_argument("the two-step game has 4 agents");
  for (int x : a)
    if (x != kActionA && x != kActionB) throw std::invalid_argument("actions are 0 (A) or 1 (B)");
  switch (s) {
    case State::S1: return {0.0, a[0] == kActionA ? State::S2A : State::S2B, false};
    case State::S2A: return {kRewardS2A[static_cast<std::size_t>(count_b(a))], State::Terminal, true};
    case State::S2B: return {kRewardS2B[static_cast<std::size_t>(count_b(a))], State::Terminal, true};
    case State::Terminal: break;
  }
  throw InvalidState("unreachable state");
}

class TwoStepGame {
 public:
  State state() const { return state_; }
  void reset() { state_ = State::S1; }
  StepResult step(const JointAction& a) {
    const StepResult r = env_step(state_, a);
    state_ = r.next;
    return r;
  }

 private:
  State state_ = State::S1;
};

struct Transition {
  State state = State::S1;
  JointAction action;
  double reward = 0.0;
  State next = State::Terminal;
  bool done = false;
};

using Episode = std::vector<Transition>;

/// Fixed-capacity FIFO of whole episodes with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
    episodes_.reserve(capacity_);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return episodes_.size(); }

  void push(Episode e) {
    if (episodes_.size() < capacity_) {
      episodes_.push_back(std::move(e));
    } else {
      episodes_[head_] = std::move(e);
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// Oldest first.
  const Episode& at(std::size_t k) const { return episodes_[(head_ + k) % episodes_.size()]; }

  /// `n` distinct episodes chosen uniformly (partial Fisher-Yates).
  std::vector<const Episode*> sample(std::size_t n, std::mt19937_64& rng) const {
    if (n > episodes_.size())
      throw std::invalid_argument("cannot sample " + std::to_string(n) + " episodes from " +
                                  std::to_string(episodes_.size()));
    std::vector<std::size_t> idx(episodes_.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::vector<const Episode*> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
      out.push_back(&episodes_[idx[k]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Episode> episodes_;
};

}  // namespace nlcg::matrix_game
