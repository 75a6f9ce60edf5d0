#pragma once

// Finite MDPs in dense-table form. This is the representation the exact
// solvers work on; simulation wraps it through TabularEnv.

#include <cstdint>
#include <string>
#include <vector>

namespace rcsl::worldkit {

// Dense finite MDP. Layouts, with S = n_states and A = n_actions:
//   transition[s*A*S + a*S + s2] = P(s2 | s, a)
//   reward[s*A + a]              = R(s, a)
//   behavior[s*A + a]            = beta(a | s)
//   init[s]                      = P(s0 = s)
// terminal[s] != 0 marks an absorbing state: an episode that acts AT s
// collects R(s, a) and then ends, regardless of the transition row.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;  // max actions per episode when no terminal state is hit
  std::vector<double> transition;
  std::vector<double> reward;
  std::vector<double> behavior;
  std::vector<double> init;
  std::vector<std::uint8_t> terminal;

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
  double b(int s, int a) const { return behavior[static_cast<std::size_t>(s) * n_actions + a]; }
  bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)] != 0; }

  // Throws ValidationError when a distribution row is off by more than 1e-12,
  // a reward is non-finite, or the sizes are inconsistent.
  void validate() const;
};

// Chain of n states 0..n-1, actions {0 = back, 1 = forward}, deterministic
// moves clamped at the ends. Reward 1 for acting at state n-1, which is
// terminal; 0 elsewhere. Behavior takes `forward` with probability
// beta_forward. The default 1.0 makes data generation deterministic.
TabularMDP chain_mdp(int n, int horizon, double beta_forward = 1.0);

// 5x5 gridworld, states r*5+c, actions {0 = up, 1 = down, 2 = left,
// 3 = right}, walls bounce. Goal (4,4) is terminal; acting there pays +1,
// every other step pays -5/128 (a dyadic cost, so return sums are exact).
// Behavior is epsilon-greedy over the move-closer-to-goal actions (ties
// split evenly), uniform with prob epsilon.
TabularMDP grid5_mdp(int horizon, double epsilon);

}  // namespace rcsl::worldkit
