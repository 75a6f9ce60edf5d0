#pragma once

// Idealized critic dynamics under RTG-perturbed targets, solved exactly on
// a finite MDP. Two regimes: with no perturbation the target action comes
// from the behavior policy, so the iteration is policy evaluation; in the
// large-perturbation limit the conditioned policy collapses to the
// supported-action greedy choice, so the iteration is support-constrained
// value iteration. The whole iterate sequence is returned so callers can
// inspect monotonicity, not just the limit.

#include <cstdint>
#include <vector>

#include "rcsl/oracles/tabular.hpp"
#include "rcsl/worldkit/mdp.hpp"

namespace rcsl::oracles {

enum class PerturbMode { zero, large };

// Runs `iterations` exact target sweeps from Q_0 = 0 and returns all
// iterates Q_0 .. Q_iterations in order. Support semantics and rejection
// rules match value_iteration / policy_evaluation.
std::vector<QTable> exact_align_iteration(const worldkit::TabularMDP& mdp,
                                          const std::vector<std::uint8_t>& support,
                                          PerturbMode mode, double gamma, int iterations);

}  // namespace rcsl::oracles
