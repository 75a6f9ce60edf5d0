#include "rcsl/evalkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rcsl/numkit/par.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/policy/context_window.hpp"
#include "rcsl/worldkit/trajectory.hpp"

namespace rcsl::evalkit {

namespace nk = rcsl::numkit;
namespace pl = rcsl::policy;
namespace wk = rcsl::worldkit;

namespace {

// Builds a trajectory from however many steps completed; rewards.size() is
// the step count and the flat state/action logs may run longer.
wk::Trajectory assemble(const wk::Env& env, std::uint64_t seed,
                        const std::vector<double>& states, const std::vector<double>& actions,
                        const std::vector<double>& rewards, std::size_t sd, std::size_t ad) {
  wk::Trajectory traj;
  const std::size_t n = rewards.size();
  traj.states = nk::Tensor({n, sd}, std::vector<double>(states.begin(),
                                                        states.begin() + static_cast<long>(n * sd)));
  traj.actions = nk::Tensor({n, ad}, std::vector<double>(actions.begin(),
                                                         actions.begin() + static_cast<long>(n * ad)));
  traj.rewards = rewards;
  if (n > 0) traj.rtgs = wk::annotate_rtg(rewards);
  traj.seed = seed;
  traj.env_id = env.spec().id;
  traj.behavior_id = "conditioned";
  return traj;
}

}  // namespace

RolloutResult conditioned_rollout(const pl::PolicyModel& model, wk::Env& env,
                                  double target_rtg, double rtg_scale, std::uint64_t seed) {
  if (!std::isfinite(target_rtg)) {
    throw ValidationError("rollout: conditioning return must be finite");
  }
  if (!(rtg_scale > 0.0)) throw ValidationError("rollout: rtg_scale must be positive");
  const pl::PolicyConfig& pc = model.config();
  const auto sd = static_cast<std::size_t>(pc.state_dim);
  const auto ad = static_cast<std::size_t>(pc.action_dim);
  const int k = pc.context;
  const int horizon = env.spec().max_steps;

  nk::Rng rng(seed);
  nk::Tensor obs = env.reset(rng);
  if (obs.size() != sd) {
    throw ValidationError("rollout: env observation width " + std::to_string(obs.size()) +
                          " does not match the model's " + std::to_string(sd));
  }

  std::vector<double> states(obs.data(), obs.data() + sd);  // t + 1 rows at step t
  std::vector<double> actions;                              // t rows at step t
  std::vector<double> rewards;
  std::vector<double> rtg_tokens = {target_rtg / rtg_scale};

  for (int t = 0;; ++t) {
    if (t >= horizon) {
      throw RolloutError(
          "rollout: env ran past its declared horizon of " + std::to_string(horizon) + " steps",
          assemble(env, seed, states, actions, rewards, sd, ad));
    }

    // Window over steps [t - nv + 1, t]; the current slot's action stays the
    // blank's zeros, outside everything the action head may attend to.
    pl::ContextWindow w = pl::ContextWindow::blank(k, pc.state_dim, pc.action_dim);
    const int nv = std::min(k, t + 1);
    const int start = t + 1 - nv;
    for (int s = 0; s < nv; ++s) {
      const int step_i = start + s;
      const auto slot = static_cast<std::size_t>(k - nv + s);
      const auto si = static_cast<std::size_t>(step_i);
      w.valid[slot] = 1;
      w.timesteps[slot] = step_i;
      w.rtgs[slot] = rtg_tokens[si];
      for (std::size_t c = 0; c < sd; ++c) w.states.at2(slot, c) = states[si * sd + c];
      if (step_i < t) {
        for (std::size_t c = 0; c < ad; ++c) w.actions.at2(slot, c) = actions[si * ad + c];
      }
    }

    nk::Tensor a = model.act(w);
    wk::StepResult res;
    try {
      res = env.step(a, rng);
    } catch (const std::exception& e) {
      throw RolloutError("rollout: env failed at step " + std::to_string(t) + ": " + e.what(),
                         assemble(env, seed, states, actions, rewards, sd, ad));
    }
    actions.insert(actions.end(), a.data(), a.data() + ad);
    rewards.push_back(res.reward);
    if (res.done) break;
    if (res.obs.size() != sd) {
      throw RolloutError("rollout: env changed its observation width mid-episode",
                         assemble(env, seed, states, actions, rewards, sd, ad));
    }
    states.insert(states.end(), res.obs.data(), res.obs.data() + sd);
    rtg_tokens.push_back(rtg_tokens.back() - res.reward / rtg_scale);
  }

  RolloutResult out;
  out.traj = assemble(env, seed, states, actions, rewards, sd, ad);
  out.traj.validate();
  out.episode_return = out.traj.episode_return();
  out.rtg_tokens = std::move(rtg_tokens);
  return out;
}

void SweepConfig::validate() const {
  if (targets.empty()) throw ValidationError("sweep: conditioning grid is empty");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (!std::isfinite(targets[j])) throw ValidationError("sweep: non-finite target");
    if (j > 0 && !(targets[j] > targets[j - 1])) {
      throw ValidationError("sweep: targets must increase strictly");
    }
  }
  if (rollouts_per_target < 1) {
    throw ValidationError("sweep: need at least one rollout per target");
  }
  if (!(rtg_scale > 0.0)) throw ValidationError("sweep: rtg_scale must be positive");
}

std::vector<double> default_targets(const wk::Dataset& ds, int n) {
  if (n < 2) throw ValidationError("target grid: need at least two points");
  if (!(ds.return_max > ds.return_min)) {
    throw ValidationError("target grid: dataset returns have no spread");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  const double step = (ds.return_max - ds.return_min) / static_cast<double>(n - 1);
  for (int j = 0; j < n; ++j) {
    out[static_cast<std::size_t>(j)] =
        j == n - 1 ? ds.return_max : ds.return_min + step * static_cast<double>(j);
  }
  return out;
}

AlignmentReport alignment_sweep(const pl::PolicyModel& model,
                                const std::function<std::unique_ptr<wk::Env>()>& factory,
                                const SweepConfig& cfg) {
  cfg.validate();
  if (!factory) throw ValidationError("sweep: no environment factory");
  std::string env_id;
  {
    auto probe = factory();
    if (!probe) throw ValidationError("sweep: factory produced no environment");
    env_id = probe->spec().id;
  }

  const std::size_t nt = cfg.targets.size();
  const auto nr = static_cast<std::size_t>(cfg.rollouts_per_target);
  std::vector<double> returns(nt * nr, 0.0);

  // One slot per (target, rollout); each runs on its own derived stream, so
  // the outcome is independent of how the loop is scheduled.
  nk::parallel_for(nt * nr, [&](std::size_t idx) {
    const std::size_t j = idx / nr;
    const std::size_t i = idx % nr;
    try {
      auto env = factory();
      if (!env) throw ValidationError("factory produced no environment");
      returns[idx] = conditioned_rollout(model, *env, cfg.targets[j], cfg.rtg_scale,
                                         nk::derive_seed(cfg.seed, j, i))
                         .episode_return;
    } catch (const std::exception& e) {
      throw RuntimeError("alignment sweep: target index " + std::to_string(j) + " (value " +
                         std::to_string(cfg.targets[j]) + "), rollout " + std::to_string(i) +
                         ": " + e.what());
    }
  });

  AlignmentReport rep;
  rep.env_id = env_id;
  rep.seed = cfg.seed;
  rep.rollouts_per_target = cfg.rollouts_per_target;
  rep.targets = cfg.targets;
  rep.means.resize(nt);
  rep.stds.resize(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < nr; ++i) sum += returns[j * nr + i];
    const double mean = sum / static_cast<double>(nr);
    double sq = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
      const double d = returns[j * nr + i] - mean;
      sq += d * d;
    }
    rep.means[j] = mean;
    rep.stds[j] = std::sqrt(sq / static_cast<double>(nr));
  }
  rep.m = rmse(rep);
  return rep;
}

}  // namespace rcsl::evalkit
