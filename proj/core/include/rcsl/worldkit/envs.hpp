#pragma once

#include <memory>
#include <string>

#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tensor.hpp"
#include "rcsl/worldkit/mdp.hpp"

namespace rcsl::worldkit {

// Static description of an environment. Discrete environments expose a
// codebook (n_actions x act_dim, one-hot rows here); the neural side picks
// actions by nearest codeword, so it never needs to know about discreteness.
struct EnvSpec {
  std::string id;
  std::string behavior_id;
  int obs_dim = 0;
  int act_dim = 0;
  bool discrete = false;
  int n_actions = 0;            // 0 for continuous
  numkit::Tensor codebook;      // empty for continuous
  int max_steps = 0;            // hard episode cap
  double default_rtg_scale = 1.0;
};

struct StepResult {
  numkit::Tensor obs;  // observation after the transition
  double reward = 0.0;
  bool done = false;
};

// Episodic environment with a built-in behavior policy. Stateful: reset()
// starts an episode, step() advances it. All randomness flows through the
// caller's rng, so a fresh env plus a seeded rng replays exactly.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual numkit::Tensor reset(numkit::Rng& rng) = 0;
  virtual StepResult step(const numkit::Tensor& action, numkit::Rng& rng) = 0;
  // Action the behavior policy takes in the current state.
  virtual numkit::Tensor behavior_action(numkit::Rng& rng) = 0;
};

// Simulates a TabularMDP with one-hot observations and actions. Acting at a
// terminal state collects its reward and ends the episode; otherwise the
// episode ends when max_steps actions have been taken.
class TabularEnv : public Env {
 public:
  TabularEnv(TabularMDP mdp, std::string id, std::string behavior_id, double rtg_scale);
  const EnvSpec& spec() const override { return spec_; }
  const TabularMDP& mdp() const { return mdp_; }
  numkit::Tensor reset(numkit::Rng& rng) override;
  StepResult step(const numkit::Tensor& action, numkit::Rng& rng) override;
  numkit::Tensor behavior_action(numkit::Rng& rng) override;
  int current_state() const { return state_; }

 private:
  TabularMDP mdp_;
  EnvSpec spec_;
  int state_ = 0;
  int steps_ = 0;
  bool live_ = false;
};

// 1-d point mass. State (position, velocity); scalar acceleration command
// clamped to [-1, 1]; dt = 0.1; velocity clamped to [0, 2]. Per-step reward
// is the new velocity minus 0.05 * a^2, so returns over the 60-step horizon
// range from about 0 (standing still) to about 100 (flooring it).
// Observations are (position / 12, velocity / 2). The behavior policy draws
// one of three cruise targets per episode (stop / slow / fast), tracks it
// with a proportional controller, and adds a little exploration noise.
class PointMassEnv : public Env {
 public:
  PointMassEnv();
  const EnvSpec& spec() const override { return spec_; }
  numkit::Tensor reset(numkit::Rng& rng) override;
  StepResult step(const numkit::Tensor& action, numkit::Rng& rng) override;
  numkit::Tensor behavior_action(numkit::Rng& rng) override;

 private:
  numkit::Tensor observe() const;
  EnvSpec spec_;
  double pos_ = 0.0;
  double vel_ = 0.0;
  double target_vel_ = 0.0;
  int steps_ = 0;
  bool live_ = false;
};

// Environment registry. Known ids: "chain-<n>" (n >= 2), "grid-5",
// "pointmass". Unknown ids are rejected with the list of known ones.
std::unique_ptr<Env> make_env(const std::string& id);

}  // namespace rcsl::worldkit
