#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rcsl/error.hpp"
#include "rcsl/evalkit/report.hpp"
#include "rcsl/policy/model.hpp"
#include "rcsl/worldkit/dataset.hpp"
#include "rcsl/worldkit/envs.hpp"

namespace rcsl::evalkit {

struct RolloutResult {
  double episode_return = 0.0;  // undiscounted sum of raw rewards
  worldkit::Trajectory traj;
  // The scaled conditioning token the model saw at each step, for telemetry:
  // rtg_tokens[0] == target/rtg_scale and each later entry is the previous
  // minus the observed reward over rtg_scale.
  std::vector<double> rtg_tokens;
};

// Environment failure mid-episode; carries everything logged up to the
// failure (possibly zero completed steps, in which case the trajectory is
// empty and unvalidated).
class RolloutError : public RuntimeError {
 public:
  RolloutError(const std::string& what, worldkit::Trajectory partial_traj)
      : RuntimeError(what), partial(std::move(partial_traj)) {}
  worldkit::Trajectory partial;
};

// Runs the policy in the environment conditioned on a desired return. The
// model sees a rolling window of the last k steps; the current slot carries
// the remaining rtg and a zero action placeholder, which the causal mask
// keeps invisible to the action prediction for that slot. After each step
// the remaining rtg drops by the observed reward over rtg_scale, with no
// floor at zero. The episode ends when the env reports done; an env that
// runs past its declared horizon is treated as failed.
RolloutResult conditioned_rollout(const policy::PolicyModel& model, worldkit::Env& env,
                                  double target_rtg, double rtg_scale, std::uint64_t seed);

struct SweepConfig {
  std::vector<double> targets;  // raw return units, strictly increasing
  int rollouts_per_target = 20;
  double rtg_scale = 1.0;  // must match the scale the model was trained at
  std::uint64_t seed = 0;

  void validate() const;
};

// Evenly spaced conditioning grid from the dataset's worst to its best
// logged return. Needs n >= 2 and a dataset with some return spread.
std::vector<double> default_targets(const worldkit::Dataset& ds, int n = 12);

// Runs rollouts_per_target conditioned episodes per grid entry, each with a
// fresh env from the factory on an rng stream derived from (seed, flat
// rollout index), then aggregates per-target means and stds and the
// deviation summary. Rollouts may run on several threads; aggregation is in
// index order, so the report never depends on scheduling. Rollout failures
// are rethrown with the (target, rollout) coordinates attached.
AlignmentReport alignment_sweep(const policy::PolicyModel& model,
                                const std::function<std::unique_ptr<worldkit::Env>()>& factory,
                                const SweepConfig& cfg);

}  // namespace rcsl::evalkit
