#pragma once

#include <string>
#include <vector>

#include "rcsl/critic/critic.hpp"
#include "rcsl/numkit/adam.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/policy/model.hpp"
#include "rcsl/trainer/config.hpp"
#include "rcsl/trainer/losses.hpp"
#include "rcsl/worldkit/dataset.hpp"

namespace rcsl::trainer {

// Averages produced by one optimizer step over its batch.
struct StepStats {
  double l_sl = 0.0;
  double l_align = 0.0;
  double l_q = 0.0;
  double fire_fraction = 0.0;  // violated / considered ranking slots
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
};

// One metrics row per epoch: means over the epoch's steps.
struct EpochRow {
  int epoch = 0;
  int steps = 0;
  double l_sl = 0.0;
  double l_align = 0.0;
  double l_q = 0.0;
  double fire_fraction = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
};

// Fixed-header CSV rendering of the metrics log.
std::string metrics_csv(const std::vector<EpochRow>& rows);

// The co-training loop: each step samples a window batch, updates the twin
// critics toward targets acted by the rtg-shifted target policy, updates the
// actor on supervised plus ranking loss, then blends all target networks.
// Single-threaded and bit-deterministic given the config seed.
class Trainer {
 public:
  Trainer(policy::PolicyModel model, critic::CriticPair critic, worldkit::Dataset ds,
          AlignConfig cfg);

  const AlignConfig& config() const { return cfg_; }
  policy::PolicyModel& model() { return model_; }
  const policy::PolicyModel& model() const { return model_; }
  const policy::PolicyModel& target_model() const { return target_model_; }
  critic::CriticPair& critic() { return critic_; }
  const critic::CriticPair& critic() const { return critic_; }
  const worldkit::Dataset& dataset() const { return ds_; }
  numkit::Rng& rng() { return rng_; }

  std::vector<policy::ContextWindow> sample_batch();

  // Regresses both online critics toward r + gamma * min of the target
  // critics at the target policy's shifted next action; terminal slots
  // regress to the raw reward. No-op returning zeros under freeze_critic.
  StepStats critic_step(const std::vector<policy::ContextWindow>& batch);

  // One Adam step on the actor: batch-mean of supervised plus weighted
  // ranking loss. Never touches critic parameters.
  StepStats actor_step(const std::vector<policy::ContextWindow>& batch);

  // target <- alpha * online + (1 - alpha) * target for the actor always,
  // and for both critics unless the critic is frozen.
  void update_targets();

  // One full step in algorithm order: critic, actor, target blend.
  StepStats step();

  // epochs x steps_per_epoch steps; one metrics row per epoch.
  std::vector<EpochRow> run();

 private:
  AlignConfig cfg_;
  policy::PolicyModel model_;
  policy::PolicyModel target_model_;
  critic::CriticPair critic_;
  worldkit::Dataset ds_;
  numkit::Adam opt_actor_;
  numkit::Rng rng_;
};

struct TrainResult {
  policy::PolicyModel model;
  critic::CriticPair critic;
  std::vector<EpochRow> metrics;
};

TrainResult train(policy::PolicyModel model, critic::CriticPair critic,
                  worldkit::Dataset ds, const AlignConfig& cfg);

}  // namespace rcsl::trainer
