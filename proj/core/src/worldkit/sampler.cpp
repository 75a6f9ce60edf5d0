#include "rcsl/worldkit/sampler.hpp"

#include <string>

#include "rcsl/error.hpp"

namespace rcsl::worldkit {

namespace nk = rcsl::numkit;

policy::ContextWindow window_at(const Dataset& ds, std::size_t traj_index, std::size_t end_t,
                                int k) {
  if (k < 1) throw ValidationError("window sampling: k must be at least 1");
  if (traj_index >= ds.trajectories.size()) {
    throw ValidationError("window sampling: trajectory index out of range");
  }
  const Trajectory& traj = ds.trajectories[traj_index];
  if (end_t >= traj.length()) {
    throw ValidationError("window sampling: end timestep " + std::to_string(end_t) +
                          " out of range for trajectory of length " +
                          std::to_string(traj.length()));
  }
  const std::size_t obs_dim = traj.states.cols();
  const std::size_t act_dim = traj.actions.cols();
  policy::ContextWindow w = policy::ContextWindow::blank(k, static_cast<int>(obs_dim),
                                                         static_cast<int>(act_dim));
  for (int slot = 0; slot < k; ++slot) {
    // slot k-1 holds step end_t; earlier slots walk back one step each.
    const long long t = static_cast<long long>(end_t) - (k - 1 - slot);
    if (t < 0) continue;
    const auto su = static_cast<std::size_t>(slot);
    const auto tu = static_cast<std::size_t>(t);
    w.valid[su] = 1;
    w.timesteps[su] = static_cast<int>(t);
    w.rtgs[su] = traj.rtgs[tu] / ds.rtg_scale;
    w.rewards[su] = traj.rewards[tu];
    for (std::size_t c = 0; c < obs_dim; ++c) w.states.at2(su, c) = traj.states.at2(tu, c);
    for (std::size_t c = 0; c < act_dim; ++c) w.actions.at2(su, c) = traj.actions.at2(tu, c);
  }
  w.ends_episode = end_t + 1 == traj.length();
  return w;
}

policy::ContextWindow sample_window(const Dataset& ds, nk::Rng& rng, int k) {
  if (ds.trajectories.empty()) throw ValidationError("window sampling: empty dataset");
  std::size_t total = 0;
  for (const Trajectory& t : ds.trajectories) total += t.length();
  std::size_t pick = rng.uniform_index(total);
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const std::size_t len = ds.trajectories[i].length();
    if (pick < len) return window_at(ds, i, pick, k);
    pick -= len;
  }
  throw RuntimeError("window sampling: index walk overran the dataset");
}

}  // namespace rcsl::worldkit
