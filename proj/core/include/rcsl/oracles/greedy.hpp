#pragma once

// Brute-force check that, when the conditioning target is pushed above
// every return in the data, minimizing the discrete alignment objective at
// a state picks exactly the critic-argmax actions. The objective for
// candidate action c at state s is the dataset-action mass strictly above
// it in critic value:
//   J_s(c) = sum_a p_D(a | s) * [Q(s, a) > Q(s, c)]
// The check passes at s iff argmin_c J_s(c) equals argmax_a Q(s, a) as
// sets. Ties at the top are part of the contract: every top-value action
// zeroes the indicator sum.

#include <cstdint>
#include <vector>

#include "rcsl/oracles/tabular.hpp"
#include "rcsl/worldkit/dataset.hpp"
#include "rcsl/worldkit/mdp.hpp"

namespace rcsl::oracles {

struct GreedyEquivResult {
  std::vector<std::uint8_t> state_ok;  // per state
  bool all_ok = false;
};

// Core check on explicit tables: p_data is row-major states x actions,
// rows summing to 1 with full support (every entry positive); q is the
// critic table. Rejects support violations.
GreedyEquivResult greedy_equiv_check(const std::vector<double>& p_data,
                                     const std::vector<double>& q, int n_states, int n_actions);

// Dataset wrapper: builds p_data from empirical action frequencies per
// state, validates the premises (every (s, a) pair present; target exceeds
// every dataset return), then runs the core check.
GreedyEquivResult greedy_equiv_check(const worldkit::Dataset& ds, const worldkit::TabularMDP& mdp,
                                     const QTable& critic, double target_return);

}  // namespace rcsl::oracles
