#include "rcsl/cli/presets.hpp"

#include <utility>

#include "rcsl/error.hpp"

namespace rcsl::cli {
namespace {

// Runnable pointmass pipeline sized for one desk CPU: small model, 2000
// episodes, 10k optimizer steps.
RunConfig pointmass_align() {
  RunConfig c;
  c.env_id = "pointmass";
  c.episodes = 2000;
  c.embed_dim = 32;
  c.blocks = 1;
  c.heads = 2;
  c.conv_window = 4;
  c.use_conv = true;
  c.max_timestep = 128;
  c.dropout = 0.0;
  c.critic_hidden = 64;
  c.critic_lr = 3e-4;
  c.pretrain_steps = 2000;
  c.pretrain_batch = 128;
  c.align.context = 8;
  c.align.rtg_scale = 32.0;
  c.align.batch_size = 8;
  c.align.epochs = 20;
  c.align.steps_per_epoch = 500;
  c.align.sigma_e = 1.0;
  c.align.lambda_e = 1.0;
  c.align.delta_rtg = 1.0;
  c.align.gamma = 0.99;
  c.align.alpha = 0.005;
  c.align.actor_adam.lr = 1e-4;
  c.eval_targets = 12;
  c.eval_rollouts = 20;
  return c;
}

// Same pipeline at a fraction of the budget, for smoke runs and doc
// examples.
RunConfig desk_default() {
  RunConfig c = pointmass_align();
  c.episodes = 200;
  c.pretrain_steps = 500;
  c.align.epochs = 4;
  c.align.steps_per_epoch = 100;
  c.eval_rollouts = 10;
  return c;
}

// Documentation presets for the usual large benchmarks: the published
// noise scale, penalty weight, and rtg offset per task, with the
// full-scale model shape. rtg units are normalized by 1/1000 on the
// locomotion tasks, which is what rtg_scale carries.
RunConfig reference(const std::string& env, double sigma_e, double lambda_e, double delta_rtg,
                    bool sparse_maze) {
  RunConfig c;
  c.env_id = env;
  c.episodes = 1000;
  c.embed_dim = 256;
  c.blocks = 4;
  c.heads = 4;
  c.conv_window = 6;
  c.use_conv = true;
  c.max_timestep = 1024;
  c.dropout = 0.1;
  c.critic_hidden = 256;
  c.critic_lr = 3e-4;
  c.align.context = 20;
  c.align.rtg_scale = 1000.0;
  c.align.batch_size = 256;
  c.align.epochs = 100;
  c.align.steps_per_epoch = 1000;
  c.align.sigma_e = sigma_e;
  c.align.lambda_e = lambda_e;
  c.align.delta_rtg = delta_rtg;
  c.align.gamma = 0.99;
  c.align.alpha = 0.005;
  c.align.actor_adam.lr = 3e-4;
  if (sparse_maze) {
    // The maze tasks draw the rtg noise one-sided.
    c.align.noise_mode = trainer::NoiseMode::half_normal;
    c.align.rtg_scale = 1.0;
  }
  return c;
}

struct Entry {
  const char* name;
  const char* blurb;
  RunConfig (*make)();
};

const Entry kEntries[] = {
    {"desk-default", "quick pointmass pipeline for smoke runs", [] { return desk_default(); }},
    {"pointmass-align", "full desk-scale pointmass pipeline", [] { return pointmass_align(); }},
    {"ablate-no-align",
     "pointmass-align with the ranking penalty weight zeroed; pure sequence-model baseline",
     [] {
       RunConfig c = pointmass_align();
       c.align.lambda_e = 0.0;
       return c;
     }},
    {"ablate-sigma-0", "pointmass-align with rtg noise disabled",
     [] {
       RunConfig c = pointmass_align();
       c.align.sigma_e = 0.0;
       return c;
     }},
    {"ablate-delta-rtg-0", "pointmass-align with no rtg offset on critic targets",
     [] {
       RunConfig c = pointmass_align();
       c.align.delta_rtg = 0.0;
       return c;
     }},
    {"ablate-symmetric-indicator", "pointmass-align penalizing both violation directions",
     [] {
       RunConfig c = pointmass_align();
       c.align.indicator_mode = trainer::IndicatorMode::symmetric;
       return c;
     }},
    {"ablate-squared-penalty", "pointmass-align with a squared ranking penalty",
     [] {
       RunConfig c = pointmass_align();
       c.align.penalty_mode = trainer::PenaltyMode::squared;
       return c;
     }},
    {"ablate-freeze-critic", "pointmass-align with the critic held at its pretrained weights",
     [] {
       RunConfig c = pointmass_align();
       c.align.freeze_critic = true;
       return c;
     }},
    {"ablate-no-conv", "pointmass-align without the causal conv on attention projections",
     [] {
       RunConfig c = pointmass_align();
       c.use_conv = false;
       return c;
     }},
    {"ref-walker2d-medium-replay", "published hyperparameters, not runnable here",
     [] { return reference("walker2d-medium-replay-v2", 10, 0.3, 2, false); }},
    {"ref-halfcheetah-medium-replay", "published hyperparameters, not runnable here",
     [] { return reference("halfcheetah-medium-replay-v2", 15, 5, 5, false); }},
    {"ref-hopper-medium-replay", "published hyperparameters, not runnable here",
     [] { return reference("hopper-medium-replay-v2", 10, 0.3, 0.5, false); }},
    {"ref-walker2d-medium", "published hyperparameters, not runnable here",
     [] { return reference("walker2d-medium-v2", 10, 0.3, 1, false); }},
    {"ref-halfcheetah-medium", "published hyperparameters, not runnable here",
     [] { return reference("halfcheetah-medium-v2", 15, 5, 10, false); }},
    {"ref-hopper-medium", "published hyperparameters, not runnable here",
     [] { return reference("hopper-medium-v2", 10, 0.3, 1, false); }},
    {"ref-walker2d-medium-expert", "published hyperparameters, not runnable here",
     [] { return reference("walker2d-medium-expert-v2", 10, 0.3, 10, false); }},
    {"ref-halfcheetah-medium-expert", "published hyperparameters, not runnable here",
     [] { return reference("halfcheetah-medium-expert-v2", 15, 1, 10, false); }},
    {"ref-hopper-medium-expert", "published hyperparameters, not runnable here",
     [] { return reference("hopper-medium-expert-v2", 10, 0.3, 5, false); }},
    {"ref-antmaze-umaze", "published hyperparameters, not runnable here",
     [] { return reference("antmaze-umaze-v2", 5, 100, 1, true); }},
    {"ref-antmaze-umaze-diverse", "published hyperparameters, not runnable here",
     [] { return reference("antmaze-umaze-diverse-v2", 5, 100, 1, true); }},
    {"ref-antmaze-medium-play", "published hyperparameters, not runnable here",
     [] { return reference("antmaze-medium-play-v2", 5, 100, 1, true); }},
    {"ref-antmaze-medium-diverse", "published hyperparameters, not runnable here",
     [] { return reference("antmaze-medium-diverse-v2", 5, 100, 1, true); }},
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const Entry& e : kEntries) out.push_back(e.name);
  return out;
}

RunConfig preset(const std::string& name) {
  for (const Entry& e : kEntries)
    if (name == e.name) {
      RunConfig c = e.make();
      c.validate();
      return c;
    }
  std::string msg = "unknown preset '" + name + "'; known presets:";
  for (const Entry& e : kEntries) msg += std::string(" ") + e.name;
  throw ValidationError(msg);
}

std::string preset_text(const std::string& name) {
  RunConfig c = preset(name);  // rejects unknown names
  std::string header;
  for (const Entry& e : kEntries)
    if (name == e.name) header = std::string("# ") + e.name + ": " + e.blurb + "\n";
  return header + render_config(c);
}

}  // namespace rcsl::cli
