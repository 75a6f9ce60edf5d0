#include "rcsl/worldkit/envs.hpp"

#include <algorithm>
#include <cmath>

#include "rcsl/error.hpp"

namespace rcsl::worldkit {

namespace nk = rcsl::numkit;

namespace {

nk::Tensor one_hot(int index, int n) {
  nk::Tensor t({static_cast<std::size_t>(n)});
  t[static_cast<std::size_t>(index)] = 1.0;
  return t;
}

// Nearest codeword for a one-hot codebook is just the largest coordinate.
// Ties resolve to the lowest index, matching the policy-side rule.
int decode_action(const nk::Tensor& action, int n_actions) {
  if (action.size() != static_cast<std::size_t>(n_actions)) {
    throw ValidationError("tabular env: action vector has " + std::to_string(action.size()) +
                          " entries, expected " + std::to_string(n_actions));
  }
  int best = 0;
  for (int i = 1; i < n_actions; ++i) {
    if (action[static_cast<std::size_t>(i)] > action[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

int sample_categorical(const double* probs, int n, nk::Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;  // guard against accumulated rounding
}

}  // namespace

TabularEnv::TabularEnv(TabularMDP mdp, std::string id, std::string behavior_id, double rtg_scale)
    : mdp_(std::move(mdp)) {
  mdp_.validate();
  spec_.id = std::move(id);
  spec_.behavior_id = std::move(behavior_id);
  spec_.obs_dim = mdp_.n_states;
  spec_.act_dim = mdp_.n_actions;
  spec_.discrete = true;
  spec_.n_actions = mdp_.n_actions;
  spec_.max_steps = mdp_.horizon;
  spec_.default_rtg_scale = rtg_scale;
  nk::Tensor book({static_cast<std::size_t>(mdp_.n_actions), static_cast<std::size_t>(mdp_.n_actions)});
  for (int a = 0; a < mdp_.n_actions; ++a) book.at2(a, a) = 1.0;
  spec_.codebook = std::move(book);
}

nk::Tensor TabularEnv::reset(nk::Rng& rng) {
  state_ = sample_categorical(mdp_.init.data(), mdp_.n_states, rng);
  steps_ = 0;
  live_ = true;
  return one_hot(state_, mdp_.n_states);
}

StepResult TabularEnv::step(const nk::Tensor& action, nk::Rng& rng) {
  if (!live_) throw RuntimeError("tabular env: step before reset or after episode end");
  const int a = decode_action(action, mdp_.n_actions);
  StepResult out;
  out.reward = mdp_.r(state_, a);
  ++steps_;
  if (mdp_.is_terminal(state_) || steps_ >= mdp_.horizon) {
    out.done = true;
    live_ = false;
    out.obs = one_hot(state_, mdp_.n_states);
    return out;
  }
  const double* row = mdp_.transition.data() +
                      (static_cast<std::size_t>(state_) * mdp_.n_actions + a) * mdp_.n_states;
  state_ = sample_categorical(row, mdp_.n_states, rng);
  out.obs = one_hot(state_, mdp_.n_states);
  return out;
}

nk::Tensor TabularEnv::behavior_action(nk::Rng& rng) {
  if (!live_) throw RuntimeError("tabular env: behavior query outside an episode");
  const double* row = mdp_.behavior.data() + static_cast<std::size_t>(state_) * mdp_.n_actions;
  return one_hot(sample_categorical(row, mdp_.n_actions, rng), mdp_.n_actions);
}

namespace {
constexpr double kDt = 0.1;
constexpr double kVelMax = 2.0;
constexpr double kAccelMax = 1.0;
constexpr double kCtrlCost = 0.05;
constexpr int kPointMassHorizon = 60;
constexpr double kPosNorm = 12.0;  // kVelMax * kDt * horizon
}  // namespace

PointMassEnv::PointMassEnv() {
  spec_.id = "pointmass";
  spec_.behavior_id = "cruise-mix-3";
  spec_.obs_dim = 2;
  spec_.act_dim = 1;
  spec_.discrete = false;
  spec_.n_actions = 0;
  spec_.max_steps = kPointMassHorizon;
  spec_.default_rtg_scale = 32.0;
}

nk::Tensor PointMassEnv::observe() const {
  return nk::Tensor({2}, {pos_ / kPosNorm, vel_ / kVelMax});
}

nk::Tensor PointMassEnv::reset(nk::Rng& rng) {
  pos_ = 0.0;
  vel_ = 0.0;
  steps_ = 0;
  live_ = true;
  // Episode-level cruise target: stop, slow, or fast with equal probability.
  const double targets[3] = {0.0, 0.7, 2.0};
  target_vel_ = targets[rng.uniform_index(3)];
  return observe();
}

StepResult PointMassEnv::step(const nk::Tensor& action, nk::Rng&) {
  if (!live_) throw RuntimeError("point mass: step before reset or after episode end");
  if (action.size() != 1) {
    throw ValidationError("point mass: action must be a single acceleration value");
  }
  const double a = std::clamp(action[0], -kAccelMax, kAccelMax);
  vel_ = std::clamp(vel_ + a * kDt, 0.0, kVelMax);
  pos_ += vel_ * kDt;
  ++steps_;
  StepResult out;
  // Rounded to the 2^-20 grid: every reward is a small dyadic rational, so
  // undiscounted suffix sums over an episode are exact in 64-bit floats and
  // the rtg telescoping identity holds in both directions.
  out.reward = std::ldexp(std::nearbyint(std::ldexp(vel_ - kCtrlCost * a * a, 20)), -20);
  out.done = steps_ >= kPointMassHorizon;
  if (out.done) live_ = false;
  out.obs = observe();
  return out;
}

nk::Tensor PointMassEnv::behavior_action(nk::Rng& rng) {
  if (!live_) throw RuntimeError("point mass: behavior query outside an episode");
  const double tracking = 2.0 * (target_vel_ - vel_);
  const double noisy = tracking + 0.1 * rng.normal();
  return nk::Tensor({1}, {std::clamp(noisy, -kAccelMax, kAccelMax)});
}

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "pointmass") return std::make_unique<PointMassEnv>();
  if (id == "grid-5") {
    return std::make_unique<TabularEnv>(grid5_mdp(/*horizon=*/40, /*epsilon=*/0.3), id,
                                        "eps-greedy-0.3", /*rtg_scale=*/1.0);
  }
  if (id.rfind("chain-", 0) == 0) {
    const std::string tail = id.substr(6);
    int n = 0;
    bool digits = !tail.empty();
    for (char c : tail) digits = digits && c >= '0' && c <= '9';
    if (digits) n = std::stoi(tail);
    if (n >= 2) {
      return std::make_unique<TabularEnv>(chain_mdp(n, /*horizon=*/3 * n), id, "forward",
                                          /*rtg_scale=*/1.0);
    }
  }
  throw ValidationError("unknown environment '" + id +
                        "' (known: chain-<n> with n >= 2, grid-5, pointmass)");
}

}  // namespace rcsl::worldkit
