#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "vortexswim/env.hpp"

// 5x5 gridworld with known dynamics for checking the learning loop against
// value iteration. Actions: 0 west, 1 south, 2 stay, 3 north, 4 east; walls
// block, every step costs 1, entering the goal corner ends the episode.
namespace gridworld {

using vortexswim::env::Outcome;
using vortexswim::env::StateWindow;
using vortexswim::env::StepResult;

inline constexpr int kSize = 5;
inline constexpr int kActions = 5;
inline constexpr int kGoal = kSize * kSize - 1;
inline constexpr std::array<int, kActions> kDx{-1, 0, 0, 0, 1};
inline constexpr std::array<int, kActions> kDy{0, -1, 0, 1, 0};

inline int move(int s, int a) {
  const int x = std::clamp(s % kSize + kDx[a], 0, kSize - 1);
  const int y = std::clamp(s / kSize + kDy[a], 0, kSize - 1);
  return y * kSize + x;
}

// Markov surrogate: every slot of the window holds the current cell.
inline StateWindow window(int s) {
  StateWindow w{};
  for (int k = 0; k < vortexswim::env::kHistory; ++k) {
    w[k * vortexswim::env::kObsDim + 0] = (s % kSize) / double(kSize - 1);
    w[k * vortexswim::env::kObsDim + 1] = (s / kSize) / double(kSize - 1);
  }
  return w;
}

class Env : public vortexswim::env::Environment {
 public:
  explicit Env(int max_steps = 30) : max_steps_(max_steps) {}
  int action_count() const override { return kActions; }
  StateWindow reset(std::uint64_t seed) override {
    std::mt19937_64 rng(seed);
    s_ = std::uniform_int_distribution<int>(0, kGoal - 1)(rng);
    steps_ = 0;
    return window(s_);
  }
  StepResult step(int a) override {
    s_ = move(s_, a);
    ++steps_;
    StepResult r;
    r.state = window(s_);
    r.reward = -1.0;
    if (s_ == kGoal) {
      r.done = true;
      r.outcome = Outcome::Captured;
    } else if (steps_ >= max_steps_) {
      r.done = true;
      r.outcome = Outcome::Timeout;
    }
    return r;
  }

 private:
  int max_steps_;
  int s_ = 0;
  int steps_ = 0;
};

// Q* by value iteration.
inline std::vector<std::array<double, kActions>> optimal_q(double gamma) {
  std::vector<double> v(kSize * kSize, 0.0);
  std::vector<std::array<double, kActions>> q(kSize * kSize);
  for (int it = 0; it < 2000; ++it) {
    for (int s = 0; s < kSize * kSize; ++s) {
      for (int a = 0; a < kActions; ++a) {
        const int n = move(s, a);
        q[s][a] = -1.0 + (n == kGoal ? 0.0 : gamma * v[n]);
      }
    }
    for (int s = 0; s < kSize * kSize; ++s)
      v[s] = s == kGoal ? 0.0 : *std::max_element(q[s].begin(), q[s].end());
  }
  return q;
}

// Fraction of non-goal cells whose greedy action is optimal (ties allowed).
template <class QFn>
double greedy_match(QFn&& qvalues, double gamma) {
  const auto qs = optimal_q(gamma);
  int hits = 0;
  for (int s = 0; s < kGoal; ++s) {
    const auto q = qvalues(window(s));
    int a = 0;
    for (int k = 1; k < kActions; ++k)
      if (q[k] > q[a]) a = k;
    const double best = *std::max_element(qs[s].begin(), qs[s].end());
    if (qs[s][a] >= best - 1e-9) ++hits;
  }
  return double(hits) / kGoal;
}

}  // namespace gridworld
