#pragma once

// Exact combinatorics over discrete conditioned-policy classes. A policy
// maps (state, return level) to an action; the constrained class demands
// that within each state the action sequence indexed by increasing return
// level is non-decreasing under a per-state total order on actions. Counts
// are exact arbitrary-precision integers; 64-bit overflow would silently
// corrupt exactly the quantity under test.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rcsl::oracles {

struct CountingInstance {
  int n_states = 0;
  int n_levels = 0;   // return levels per state
  int n_actions = 0;
  // Optional per-state scores, row-major n_states x n_actions. The order on
  // actions in state s is ascending score with ties broken toward the lower
  // action index. Absent scores mean natural index order.
  std::optional<std::vector<double>> scores;
  // Per-state enumeration budget: |A|^|G| candidate sequences per state.
  std::uint64_t enumeration_cap = 10'000'000;
};

// |A|^(|S||G|), exact, as a decimal string.
std::string count_free(int n_states, int n_levels, int n_actions);

// binomial(|G|+|A|-1, |G|)^|S|, exact, as a decimal string.
std::string count_mono(int n_states, int n_levels, int n_actions);

// Brute-force count of the constrained class by odometer enumeration of all
// per-state action sequences. Rejects instances whose per-state candidate
// count exceeds the cap, reporting the required budget.
std::string enumerate_mono(const CountingInstance& inst);

struct LogBoundResult {
  double lhs = 0.0;        // ln of the constrained-class count
  double rhs = 0.0;        // |S||G| * (ln((|G|+|A|-1)/|G|) + 1)
  double rhs_alt = 0.0;    // |S||G| * ln(e*(|G|+|A|-1)/|G|); equal by algebra
  bool holds = false;      // lhs <= rhs + 1e-9
};

// Evaluates the logarithmic ceiling on the constrained-class count from the
// exact integers. The two right-hand forms are the same number written two
// ways; both are reported and their agreement is asserted by the tests.
LogBoundResult log_bound_check(int n_states, int n_levels, int n_actions);

}  // namespace rcsl::oracles
