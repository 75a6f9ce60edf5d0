#pragma once

// Exact solvers over TabularMDP. Discount < 1 iterates to a fixed point;
// discount exactly 1 runs `horizon` backward-induction sweeps, which is the
// finite-horizon value. Terminal states never bootstrap: acting there pays
// the tabled reward and ends the episode.

#include <cstdint>
#include <vector>

#include "rcsl/worldkit/dataset.hpp"
#include "rcsl/worldkit/mdp.hpp"

namespace rcsl::oracles {

// Dense Q table, row-major states x actions.
struct QTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> q;

  double at(int s, int a) const { return q[static_cast<std::size_t>(s) * n_actions + a]; }
  double& at(int s, int a) { return q[static_cast<std::size_t>(s) * n_actions + a]; }
};

struct SolveResult {
  QTable q;
  std::vector<int> greedy;  // per state: supported argmax, ties to lower index
  int sweeps = 0;
  double residual = 0.0;  // max-norm change of the final sweep
};

// Marks (s, a) pairs that occur in the dataset's one-hot trajectories.
std::vector<std::uint8_t> support_from_dataset(const worldkit::Dataset& ds,
                                               const worldkit::TabularMDP& mdp);

// Optimal Q restricted to supported actions: the bootstrap maximizes over
// support only. An empty `support` means all pairs supported. Rejects a
// support whose reachable states (from the initial distribution, walking
// supported actions) include one with no supported action.
SolveResult value_iteration(const worldkit::TabularMDP& mdp,
                            const std::vector<std::uint8_t>& support, double gamma);

// Exact Q of the behavior policy. Rejects when beta places probability on
// an unsupported action anywhere reachable (the evaluation would need a
// value outside the table's domain).
SolveResult policy_evaluation(const worldkit::TabularMDP& mdp,
                              const std::vector<std::uint8_t>& support, double gamma);

}  // namespace rcsl::oracles
