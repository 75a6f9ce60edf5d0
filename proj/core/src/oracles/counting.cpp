#include "rcsl/oracles/counting.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rcsl/error.hpp"

namespace rcsl::oracles {

namespace {

void check_sizes(int n_states, int n_levels, int n_actions) {
  if (n_states < 1 || n_levels < 1 || n_actions < 1) {
    throw ValidationError("policy counting: all sizes must be at least 1");
  }
}

// Natural log of an arbitrary-precision positive integer via the
// mantissa-and-exponent decomposition, accurate to double precision.
double ln_mpz(const mpz_class& n) {
  signed long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, n.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

// Rank of each action in the state's order: ascending score, ties toward
// the lower index. Natural order when no scores are given.
std::vector<int> action_ranks(const CountingInstance& inst, int s) {
  std::vector<int> order(static_cast<std::size_t>(inst.n_actions));
  std::iota(order.begin(), order.end(), 0);
  if (inst.scores) {
    const double* row = inst.scores->data() + static_cast<std::size_t>(s) * inst.n_actions;
    std::stable_sort(order.begin(), order.end(),
                     [row](int a, int b) { return row[a] < row[b]; });
  }
  std::vector<int> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  return rank;
}

}  // namespace

std::string count_free(int n_states, int n_levels, int n_actions) {
  check_sizes(n_states, n_levels, n_actions);
  mpz_class result;
  mpz_ui_pow_ui(result.get_mpz_t(), static_cast<unsigned long>(n_actions),
                static_cast<unsigned long>(n_states) * static_cast<unsigned long>(n_levels));
  return result.get_str();
}

std::string count_mono(int n_states, int n_levels, int n_actions) {
  check_sizes(n_states, n_levels, n_actions);
  mpz_class per_state;
  mpz_bin_uiui(per_state.get_mpz_t(),
               static_cast<unsigned long>(n_levels) + static_cast<unsigned long>(n_actions) - 1,
               static_cast<unsigned long>(n_levels));
  mpz_class result;
  mpz_pow_ui(result.get_mpz_t(), per_state.get_mpz_t(), static_cast<unsigned long>(n_states));
  return result.get_str();
}

std::string enumerate_mono(const CountingInstance& inst) {
  check_sizes(inst.n_states, inst.n_levels, inst.n_actions);
  if (inst.scores && inst.scores->size() !=
                         static_cast<std::size_t>(inst.n_states) * inst.n_actions) {
    throw ValidationError("policy counting: score table size disagrees with |S| x |A|");
  }
  // Candidates per state: |A|^|G| sequences walked by an odometer.
  mpz_class budget;
  mpz_ui_pow_ui(budget.get_mpz_t(), static_cast<unsigned long>(inst.n_actions),
                static_cast<unsigned long>(inst.n_levels));
  if (budget > inst.enumeration_cap) {
    throw ValidationError("policy counting: enumeration needs " + budget.get_str() +
                          " candidates per state, cap is " +
                          std::to_string(inst.enumeration_cap));
  }
  mpz_class total = 1;
  for (int s = 0; s < inst.n_states; ++s) {
    const std::vector<int> rank = action_ranks(inst, s);
    std::vector<int> seq(static_cast<std::size_t>(inst.n_levels), 0);
    unsigned long monotone = 0;
    for (;;) {
      bool ok = true;
      for (std::size_t g = 1; g < seq.size() && ok; ++g) {
        ok = rank[static_cast<std::size_t>(seq[g - 1])] <= rank[static_cast<std::size_t>(seq[g])];
      }
      monotone += ok ? 1 : 0;
      // Odometer increment over base-|A| digits.
      std::size_t d = 0;
      while (d < seq.size() && ++seq[d] == inst.n_actions) seq[d++] = 0;
      if (d == seq.size()) break;
    }
    total *= monotone;
  }
  return total.get_str();
}

LogBoundResult log_bound_check(int n_states, int n_levels, int n_actions) {
  check_sizes(n_states, n_levels, n_actions);
  mpz_class per_state;
  mpz_bin_uiui(per_state.get_mpz_t(),
               static_cast<unsigned long>(n_levels) + static_cast<unsigned long>(n_actions) - 1,
               static_cast<unsigned long>(n_levels));
  mpz_class count;
  mpz_pow_ui(count.get_mpz_t(), per_state.get_mpz_t(), static_cast<unsigned long>(n_states));

  LogBoundResult res;
  const double sg = static_cast<double>(n_states) * static_cast<double>(n_levels);
  const double ratio = static_cast<double>(n_levels + n_actions - 1) / static_cast<double>(n_levels);
  res.lhs = ln_mpz(count);
  res.rhs = sg * std::log(ratio) + sg;
  res.rhs_alt = sg * std::log(std::exp(1.0) * ratio);
  res.holds = res.lhs <= res.rhs + 1e-9;
  return res;
}

}  // namespace rcsl::oracles
