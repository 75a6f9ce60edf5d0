#include "rcsl/oracles/greedy.hpp"

#include <cmath>
#include <string>

#include "rcsl/error.hpp"

namespace rcsl::oracles {

GreedyEquivResult greedy_equiv_check(const std::vector<double>& p_data,
                                     const std::vector<double>& q, int n_states, int n_actions) {
  if (n_states < 1 || n_actions < 1) {
    throw ValidationError("greedy equivalence: sizes must be at least 1");
  }
  const std::size_t need = static_cast<std::size_t>(n_states) * n_actions;
  if (p_data.size() != need || q.size() != need) {
    throw ValidationError("greedy equivalence: table sizes disagree with |S| x |A|");
  }
  GreedyEquivResult res;
  res.state_ok.assign(static_cast<std::size_t>(n_states), 0);
  res.all_ok = true;
  for (int s = 0; s < n_states; ++s) {
    const std::size_t row = static_cast<std::size_t>(s) * n_actions;
    double mass = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      if (p_data[row + a] <= 0.0) {
        throw ValidationError("greedy equivalence: dataset support is not full at state " +
                              std::to_string(s) + ", action " + std::to_string(a));
      }
      mass += p_data[row + a];
    }
    if (std::fabs(mass - 1.0) > 1e-9) {
      throw ValidationError("greedy equivalence: dataset action row at state " +
                            std::to_string(s) + " sums to " + std::to_string(mass));
    }
    // J(c) per candidate, then compare the minimizer set to the argmax set.
    double best_j = 0.0;
    double best_q = q[row];
    std::vector<double> j(static_cast<std::size_t>(n_actions), 0.0);
    for (int c = 0; c < n_actions; ++c) {
      double val = 0.0;
      for (int a = 0; a < n_actions; ++a) {
        if (q[row + a] > q[row + c]) val += p_data[row + a];
      }
      j[static_cast<std::size_t>(c)] = val;
      if (c == 0 || val < best_j) best_j = val;
      if (q[row + c] > best_q) best_q = q[row + c];
    }
    bool same = true;
    for (int c = 0; c < n_actions; ++c) {
      const bool minimizer = j[static_cast<std::size_t>(c)] == best_j;
      const bool maximizer = q[row + c] == best_q;
      same = same && minimizer == maximizer;
    }
    res.state_ok[static_cast<std::size_t>(s)] = same ? 1 : 0;
    res.all_ok = res.all_ok && same;
  }
  return res;
}

GreedyEquivResult greedy_equiv_check(const worldkit::Dataset& ds, const worldkit::TabularMDP& mdp,
                                     const QTable& critic, double target_return) {
  if (critic.n_states != mdp.n_states || critic.n_actions != mdp.n_actions) {
    throw ValidationError("greedy equivalence: critic table sizes disagree with the mdp");
  }
  if (!(target_return > ds.return_max)) {
    throw ValidationError("greedy equivalence: target return must exceed every dataset return (max is " +
                          std::to_string(ds.return_max) + ")");
  }
  // Empirical p_D(a | s) from visit counts.
  const std::size_t need = static_cast<std::size_t>(mdp.n_states) * mdp.n_actions;
  std::vector<double> counts(need, 0.0);
  const auto mask = support_from_dataset(ds, mdp);
  for (const worldkit::Trajectory& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      int s = 0, a = 0;
      for (int i = 1; i < mdp.n_states; ++i) {
        if (traj.states.at2(t, static_cast<std::size_t>(i)) >
            traj.states.at2(t, static_cast<std::size_t>(s)))
          s = i;
      }
      for (int i = 1; i < mdp.n_actions; ++i) {
        if (traj.actions.at2(t, static_cast<std::size_t>(i)) >
            traj.actions.at2(t, static_cast<std::size_t>(a)))
          a = i;
      }
      counts[static_cast<std::size_t>(s) * mdp.n_actions + a] += 1.0;
    }
  }
  for (std::size_t i = 0; i < need; ++i) {
    if (mask[i] == 0) {
      throw ValidationError("greedy equivalence: dataset does not cover state " +
                            std::to_string(i / mdp.n_actions) + ", action " +
                            std::to_string(i % mdp.n_actions));
    }
  }
  std::vector<double> p_data(need, 0.0);
  for (int s = 0; s < mdp.n_states; ++s) {
    const std::size_t row = static_cast<std::size_t>(s) * mdp.n_actions;
    double total = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) total += counts[row + a];
    for (int a = 0; a < mdp.n_actions; ++a) p_data[row + a] = counts[row + a] / total;
  }
  return greedy_equiv_check(p_data, critic.q, mdp.n_states, mdp.n_actions);
}

}  // namespace rcsl::oracles
