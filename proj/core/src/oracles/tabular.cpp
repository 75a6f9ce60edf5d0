#include "rcsl/oracles/tabular.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "rcsl/error.hpp"

namespace rcsl::oracles {

namespace {

constexpr double kFixedPointTol = 1e-14;
constexpr int kMaxSweeps = 200000;

bool supported(const std::vector<std::uint8_t>& support, int s, int a, int A) {
  return support.empty() || support[static_cast<std::size_t>(s) * A + a] != 0;
}

// States reachable from the initial distribution when only supported
// actions are ever taken. Terminal states do not expand.
std::vector<std::uint8_t> reachable_states(const worldkit::TabularMDP& mdp,
                                           const std::vector<std::uint8_t>& support) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(mdp.n_states), 0);
  std::deque<int> frontier;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.init[static_cast<std::size_t>(s)] > 0.0) {
      seen[static_cast<std::size_t>(s)] = 1;
      frontier.push_back(s);
    }
  }
  while (!frontier.empty()) {
    const int s = frontier.front();
    frontier.pop_front();
    if (mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (!supported(support, s, a, mdp.n_actions)) continue;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        if (mdp.p(s, a, s2) > 0.0 && !seen[static_cast<std::size_t>(s2)]) {
          seen[static_cast<std::size_t>(s2)] = 1;
          frontier.push_back(s2);
        }
      }
    }
  }
  return seen;
}

void check_support_shape(const worldkit::TabularMDP& mdp,
                         const std::vector<std::uint8_t>& support) {
  if (!support.empty() &&
      support.size() != static_cast<std::size_t>(mdp.n_states) * mdp.n_actions) {
    throw ValidationError("tabular solve: support mask size disagrees with |S| x |A|");
  }
}

void check_nonempty_support(const worldkit::TabularMDP& mdp,
                            const std::vector<std::uint8_t>& support) {
  const auto reach = reachable_states(mdp, support);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (!reach[static_cast<std::size_t>(s)]) continue;
    bool any = false;
    for (int a = 0; a < mdp.n_actions && !any; ++a) any = supported(support, s, a, mdp.n_actions);
    if (!any) {
      throw ValidationError("tabular solve: reachable state " + std::to_string(s) +
                            " has no supported action");
    }
  }
}

// One sweep of Q <- r + gamma * E[next-state value], where the next-state
// value is produced by `state_value(q, s2)`. Returns the max-norm change.
template <typename StateValue>
double sweep(const worldkit::TabularMDP& mdp, double gamma, QTable& q, StateValue&& state_value) {
  double delta = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double next = mdp.r(s, a);
      if (!mdp.is_terminal(s)) {
        double ev = 0.0;
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const double p = mdp.p(s, a, s2);
          if (p > 0.0) ev += p * state_value(q, s2);
        }
        next += gamma * ev;
      }
      delta = std::max(delta, std::fabs(next - q.at(s, a)));
      q.at(s, a) = next;
    }
  }
  return delta;
}

template <typename StateValue>
SolveResult solve(const worldkit::TabularMDP& mdp, double gamma, StateValue&& state_value) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw ValidationError("tabular solve: discount must lie in (0, 1]");
  }
  SolveResult res;
  res.q.n_states = mdp.n_states;
  res.q.n_actions = mdp.n_actions;
  res.q.q.assign(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
  if (gamma == 1.0) {
    // Finite horizon: sweep m produces the m-steps-remaining values. The
    // sweeps run on a frozen copy each time so induction is exact.
    for (int m = 0; m < mdp.horizon; ++m) {
      QTable prev = res.q;
      res.residual = sweep(mdp, gamma, res.q, [&](const QTable&, int s2) {
        return state_value(prev, s2);
      });
      ++res.sweeps;
    }
  } else {
    for (;;) {
      QTable prev = res.q;
      res.residual = sweep(mdp, gamma, res.q, [&](const QTable&, int s2) {
        return state_value(prev, s2);
      });
      ++res.sweeps;
      if (res.residual < kFixedPointTol) break;
      if (res.sweeps >= kMaxSweeps) {
        throw RuntimeError("tabular solve: no fixed point after " + std::to_string(res.sweeps) +
                           " sweeps (residual " + std::to_string(res.residual) + ")");
      }
    }
  }
  return res;
}

}  // namespace

std::vector<std::uint8_t> support_from_dataset(const worldkit::Dataset& ds,
                                               const worldkit::TabularMDP& mdp) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0);
  for (const worldkit::Trajectory& traj : ds.trajectories) {
    if (traj.states.cols() != static_cast<std::size_t>(mdp.n_states) ||
        traj.actions.cols() != static_cast<std::size_t>(mdp.n_actions)) {
      throw ValidationError("support mask: trajectory encoding disagrees with the mdp sizes");
    }
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
      mask[static_cast<std::size_t>(s) * mdp.n_actions + a] = 1;
    }
  }
  return mask;
}

SolveResult value_iteration(const worldkit::TabularMDP& mdp,
                            const std::vector<std::uint8_t>& support, double gamma) {
  mdp.validate();
  check_support_shape(mdp, support);
  check_nonempty_support(mdp, support);
  SolveResult res = solve(mdp, gamma, [&](const QTable& q, int s2) {
    double best = 0.0;
    bool any = false;
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (!supported(support, s2, a, mdp.n_actions)) continue;
      const double v = q.at(s2, a);
      if (!any || v > best) best = v;
      any = true;
    }
    // Unreachable states with empty support never influence reachable
    // values through a positive-probability transition; zero is as good a
    // convention as any there.
    return any ? best : 0.0;
  });
  res.greedy.assign(static_cast<std::size_t>(mdp.n_states), 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    int best = -1;
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (!supported(support, s, a, mdp.n_actions)) continue;
      if (best < 0 || res.q.at(s, a) > res.q.at(s, best)) best = a;
    }
    res.greedy[static_cast<std::size_t>(s)] = best < 0 ? 0 : best;
  }
  return res;
}

SolveResult policy_evaluation(const worldkit::TabularMDP& mdp,
                              const std::vector<std::uint8_t>& support, double gamma) {
  mdp.validate();
  check_support_shape(mdp, support);
  if (!support.empty()) {
    const auto reach = reachable_states(mdp, support);
    for (int s = 0; s < mdp.n_states; ++s) {
      if (!reach[static_cast<std::size_t>(s)]) continue;
      for (int a = 0; a < mdp.n_actions; ++a) {
        if (mdp.b(s, a) > 0.0 && !supported(support, s, a, mdp.n_actions)) {
          throw ValidationError("policy evaluation: behavior uses unsupported action " +
                                std::to_string(a) + " at reachable state " + std::to_string(s));
        }
      }
    }
  }
  return solve(mdp, gamma, [&](const QTable& q, int s2) {
    double v = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double p = mdp.b(s2, a);
      if (p > 0.0) v += p * q.at(s2, a);
    }
    return v;
  });
}

}  // namespace rcsl::oracles
