#include "rcsl/worldkit/dataset.hpp"

#include <cmath>
#include <cstring>

#include "rcsl/error.hpp"
#include "rcsl/numkit/par.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/wire.hpp"
#include "rcsl/worldkit/envs.hpp"

namespace rcsl::worldkit {

namespace nk = rcsl::numkit;
namespace wire = rcsl::numkit::wire;

namespace {

constexpr char kMagic[4] = {'R', 'C', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

struct Stats {
  double lo, hi, mean;
};

// Single fixed accumulation order so save/load equality checks can be exact.
Stats stats_of(const std::vector<Trajectory>& trajs) {
  Stats st{0.0, 0.0, 0.0};
  if (trajs.empty()) return st;
  st.lo = st.hi = trajs.front().episode_return();
  double sum = 0.0;
  for (const Trajectory& t : trajs) {
    const double ret = t.episode_return();
    st.lo = std::min(st.lo, ret);
    st.hi = std::max(st.hi, ret);
    sum += ret;
  }
  st.mean = sum / static_cast<double>(trajs.size());
  return st;
}

Trajectory roll_episode(Env& env, std::uint64_t episode_seed) {
  nk::Rng rng(episode_seed);
  const EnvSpec& spec = env.spec();
  std::vector<double> obs_flat, act_flat, rewards;
  nk::Tensor obs = env.reset(rng);
  bool done = false;
  while (!done) {
    nk::Tensor action = env.behavior_action(rng);
    for (std::size_t i = 0; i < obs.size(); ++i) obs_flat.push_back(obs[i]);
    for (std::size_t i = 0; i < action.size(); ++i) act_flat.push_back(action[i]);
    StepResult step = env.step(action, rng);
    rewards.push_back(step.reward);
    obs = std::move(step.obs);
    done = step.done;
  }
  Trajectory traj;
  const std::size_t T = rewards.size();
  traj.states = nk::Tensor({T, static_cast<std::size_t>(spec.obs_dim)}, std::move(obs_flat));
  traj.actions = nk::Tensor({T, static_cast<std::size_t>(spec.act_dim)}, std::move(act_flat));
  traj.rewards = std::move(rewards);
  traj.rtgs = annotate_rtg(traj.rewards);
  traj.seed = episode_seed;
  traj.env_id = spec.id;
  traj.behavior_id = spec.behavior_id;
  return traj;
}

}  // namespace

void Dataset::recompute_stats() {
  const Stats st = stats_of(trajectories);
  return_min = st.lo;
  return_max = st.hi;
  return_mean = st.mean;
}

void Dataset::validate() const {
  if (trajectories.empty()) throw ValidationError("dataset: empty");
  if (!(rtg_scale > 0.0) || !std::isfinite(rtg_scale)) {
    throw ValidationError("dataset: rtg_scale must be positive and finite");
  }
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    try {
      trajectories[i].validate();
    } catch (const ValidationError& e) {
      throw ValidationError("dataset: trajectory " + std::to_string(i) + ": " + e.what());
    }
  }
  const Stats st = stats_of(trajectories);
  if (st.lo != return_min || st.hi != return_max || st.mean != return_mean) {
    throw ValidationError("dataset: stored statistics disagree with contents");
  }
}

Dataset generate_with(const std::function<std::unique_ptr<Env>()>& factory, int episodes,
                      std::uint64_t seed) {
  if (episodes < 1) throw ValidationError("dataset generation: need at least 1 episode");
  Dataset ds;
  {
    auto probe = factory();
    ds.env_id = probe->spec().id;
    ds.behavior_id = probe->spec().behavior_id;
    ds.rtg_scale = probe->spec().default_rtg_scale;
  }
  ds.trajectories.resize(static_cast<std::size_t>(episodes));
  nk::parallel_for(static_cast<std::size_t>(episodes), [&](std::size_t e) {
    auto env = factory();
    Trajectory traj = roll_episode(*env, nk::derive_seed(seed, e));
    try {
      traj.validate();
    } catch (const ValidationError& err) {
      throw RuntimeError("dataset generation: episode " + std::to_string(e) + " rejected: " +
                         err.what());
    }
    ds.trajectories[e] = std::move(traj);
  });
  ds.recompute_stats();
  return ds;
}

Dataset generate(const std::string& env_id, int episodes, std::uint64_t seed) {
  return generate_with([&env_id] { return make_env(env_id); }, episodes, seed);
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::string buf;
  buf.append(kMagic, 4);
  wire::put_u32(buf, kVersion);
  wire::put_str(buf, ds.env_id);
  wire::put_str(buf, ds.behavior_id);
  wire::put_f64(buf, ds.rtg_scale);
  wire::put_f64(buf, ds.return_min);
  wire::put_f64(buf, ds.return_max);
  wire::put_f64(buf, ds.return_mean);
  wire::put_u64(buf, ds.trajectories.size());
  for (const Trajectory& t : ds.trajectories) {
    const std::size_t T = t.length();
    wire::put_u64(buf, t.seed);
    wire::put_u32(buf, static_cast<std::uint32_t>(T));
    wire::put_u32(buf, static_cast<std::uint32_t>(t.states.cols()));
    wire::put_u32(buf, static_cast<std::uint32_t>(t.actions.cols()));
    for (std::size_t i = 0; i < t.states.size(); ++i) wire::put_f64(buf, t.states[i]);
    for (std::size_t i = 0; i < t.actions.size(); ++i) wire::put_f64(buf, t.actions[i]);
    for (std::size_t i = 0; i < T; ++i) wire::put_f64(buf, t.rewards[i]);
    for (std::size_t i = 0; i < T; ++i) wire::put_f64(buf, t.rtgs[i]);
  }
  wire::put_u32(buf, wire::crc_of(buf, buf.size()));
  wire::spit(path, buf, "dataset");
}

Dataset load_dataset(const std::string& path) {
  const std::string buf = wire::slurp(path, "dataset");
  if (buf.size() < 4 + 4 + 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw RuntimeError("dataset: '" + path + "' is not a trajectory container");
  }
  wire::Reader r{buf, 4, "dataset"};
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw RuntimeError("dataset: '" + path + "' has unsupported format version " +
                       std::to_string(version) + " (expected " + std::to_string(kVersion) + ")");
  }
  const std::size_t body_len = buf.size() - 4;
  wire::Reader tail{buf, body_len, "dataset"};
  if (tail.u32() != wire::crc_of(buf, body_len)) {
    throw RuntimeError("dataset: '" + path + "' failed checksum verification");
  }
  Dataset ds;
  ds.env_id = r.str();
  ds.behavior_id = r.str();
  ds.rtg_scale = r.f64();
  ds.return_min = r.f64();
  ds.return_max = r.f64();
  ds.return_mean = r.f64();
  const std::uint64_t n = r.u64();
  ds.trajectories.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Trajectory t;
    t.seed = r.u64();
    const std::uint32_t T = r.u32();
    const std::uint32_t obs_dim = r.u32();
    const std::uint32_t act_dim = r.u32();
    t.states = nk::Tensor({T, obs_dim});
    t.actions = nk::Tensor({T, act_dim});
    for (std::size_t j = 0; j < t.states.size(); ++j) t.states[j] = r.f64();
    for (std::size_t j = 0; j < t.actions.size(); ++j) t.actions[j] = r.f64();
    t.rewards.resize(T);
    t.rtgs.resize(T);
    for (std::uint32_t j = 0; j < T; ++j) t.rewards[j] = r.f64();
    for (std::uint32_t j = 0; j < T; ++j) t.rtgs[j] = r.f64();
    t.env_id = ds.env_id;
    t.behavior_id = ds.behavior_id;
    ds.trajectories.push_back(std::move(t));
  }
  if (r.pos != body_len) {
    throw RuntimeError("dataset: '" + path + "' has trailing bytes");
  }
  ds.validate();
  return ds;
}

}  // namespace rcsl::worldkit
