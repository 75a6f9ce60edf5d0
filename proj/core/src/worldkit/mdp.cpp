#include "rcsl/worldkit/mdp.hpp"

#include <cmath>
#include <cstdlib>

#include "rcsl/error.hpp"

namespace rcsl::worldkit {

namespace {

void check_row(const std::vector<double>& table, std::size_t off, int n, const char* what, int s,
               int a) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = table[off + i];
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string(what) + " entry at state " + std::to_string(s) +
                            (a >= 0 ? ", action " + std::to_string(a) : std::string()) +
                            " is negative or non-finite");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw ValidationError(std::string(what) + " row at state " + std::to_string(s) +
                          (a >= 0 ? ", action " + std::to_string(a) : std::string()) +
                          " sums to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

void TabularMDP::validate() const {
  const std::size_t S = static_cast<std::size_t>(n_states);
  const std::size_t A = static_cast<std::size_t>(n_actions);
  if (n_states <= 0 || n_actions <= 0 || horizon <= 0) {
    throw ValidationError("tabular mdp: state count, action count, and horizon must be positive");
  }
  if (transition.size() != S * A * S || reward.size() != S * A || behavior.size() != S * A ||
      init.size() != S || terminal.size() != S) {
    throw ValidationError("tabular mdp: table sizes inconsistent with state/action counts");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      check_row(transition, (static_cast<std::size_t>(s) * A + a) * S, n_states, "transition", s,
                a);
      if (!std::isfinite(r(s, a))) {
        throw ValidationError("tabular mdp: reward at state " + std::to_string(s) + ", action " +
                              std::to_string(a) + " is non-finite");
      }
    }
    check_row(behavior, static_cast<std::size_t>(s) * A, n_actions, "behavior", s, -1);
  }
  check_row(init, 0, n_states, "initial-state", 0, -1);
}

TabularMDP chain_mdp(int n, int horizon, double beta_forward) {
  if (n < 2) throw ValidationError("chain mdp: need at least 2 states");
  if (beta_forward < 0.0 || beta_forward > 1.0) {
    throw ValidationError("chain mdp: forward probability must lie in [0, 1]");
  }
  TabularMDP m;
  m.n_states = n;
  m.n_actions = 2;
  m.horizon = horizon;
  const std::size_t S = static_cast<std::size_t>(n);
  m.transition.assign(S * 2 * S, 0.0);
  m.reward.assign(S * 2, 0.0);
  m.behavior.assign(S * 2, 0.0);
  m.init.assign(S, 0.0);
  m.terminal.assign(S, 0);
  m.init[0] = 1.0;
  m.terminal[S - 1] = 1;
  for (int s = 0; s < n; ++s) {
    const int back = std::max(0, s - 1);
    const int fwd = std::min(n - 1, s + 1);
    m.transition[(static_cast<std::size_t>(s) * 2 + 0) * S + back] = 1.0;
    m.transition[(static_cast<std::size_t>(s) * 2 + 1) * S + fwd] = 1.0;
    m.behavior[static_cast<std::size_t>(s) * 2 + 0] = 1.0 - beta_forward;
    m.behavior[static_cast<std::size_t>(s) * 2 + 1] = beta_forward;
  }
  m.reward[(S - 1) * 2 + 0] = 1.0;
  m.reward[(S - 1) * 2 + 1] = 1.0;
  m.validate();
  return m;
}

TabularMDP grid5_mdp(int horizon, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw ValidationError("grid mdp: epsilon must lie in [0, 1]");
  }
  constexpr int W = 5;
  constexpr int S = W * W;
  constexpr int goal = S - 1;
  TabularMDP m;
  m.n_states = S;
  m.n_actions = 4;
  m.horizon = horizon;
  m.transition.assign(static_cast<std::size_t>(S) * 4 * S, 0.0);
  // Step cost is -5/128: dyadic, so episode suffix sums are exact floats.
  m.reward.assign(static_cast<std::size_t>(S) * 4, -0.0390625);
  m.behavior.assign(static_cast<std::size_t>(S) * 4, 0.0);
  m.init.assign(S, 0.0);
  m.terminal.assign(S, 0);
  m.init[0] = 1.0;
  m.terminal[goal] = 1;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int s = 0; s < S; ++s) {
    const int row = s / W, col = s % W;
    for (int a = 0; a < 4; ++a) {
      int nr = row + dr[a], nc = col + dc[a];
      if (nr < 0 || nr >= W || nc < 0 || nc >= W) {
        nr = row;
        nc = col;
      }
      m.transition[(static_cast<std::size_t>(s) * 4 + a) * S + (nr * W + nc)] = 1.0;
      if (s == goal) m.reward[static_cast<std::size_t>(s) * 4 + a] = 1.0;
    }
    // Closer-to-goal actions: down when below goal row, right when left of
    // goal column. At the goal itself every action is equally "greedy".
    std::vector<int> greedy;
    if (row < W - 1) greedy.push_back(1);
    if (col < W - 1) greedy.push_back(3);
    if (greedy.empty()) greedy = {0, 1, 2, 3};
    for (int a = 0; a < 4; ++a) m.behavior[static_cast<std::size_t>(s) * 4 + a] = epsilon / 4.0;
    for (int a : greedy)
      m.behavior[static_cast<std::size_t>(s) * 4 + a] +=
          (1.0 - epsilon) / static_cast<double>(greedy.size());
  }
  m.validate();
  return m;
}

}  // namespace rcsl::worldkit
