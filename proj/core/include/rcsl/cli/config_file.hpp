#pragma once

// The run configuration and its on-disk form. One flat document drives
// every command; each command reads the subset it needs, so a single file
// can describe a whole pipeline from data generation through evaluation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcsl/critic/critic.hpp"
#include "rcsl/policy/model.hpp"
#include "rcsl/trainer/config.hpp"
#include "rcsl/worldkit/dataset.hpp"

namespace rcsl::cli {

struct RunConfig {
  std::string env_id = "pointmass";
  int episodes = 2000;  // dataset generation

  // Sequence model shape. Context length and rtg scale live in `align` so
  // training and the model can never disagree about them.
  int embed_dim = 64;
  int blocks = 2;
  int heads = 2;
  int conv_window = 6;
  bool use_conv = true;
  int max_timestep = 4096;
  double dropout = 0.0;

  int critic_hidden = 64;
  double critic_lr = 3e-4;
  // Only "td_double" is implemented. "iql_expectile" names the expectile
  // regression path some sparse-reward setups ask for; the validator
  // rejects it with a pointer at the supported mode.
  std::string critic_pretrain_mode = "td_double";
  int pretrain_steps = 2000;
  int pretrain_batch = 64;

  trainer::AlignConfig align;

  // Epochs between mid-run checkpoints during training; 0 writes only the
  // final pair.
  int checkpoint_interval = 0;

  int eval_targets = 12;
  int eval_rollouts = 20;
  // Explicit conditioning grid; empty defers to target_min/target_max or,
  // failing that, to the dataset's return range.
  std::vector<double> eval_target_list;
  // Unset defers to the dataset. Set both or neither.
  std::optional<double> eval_target_min;
  std::optional<double> eval_target_max;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

// Parses `key = value` lines onto `base` and validates the result. Blank
// lines and lines starting with '#' are skipped. Unknown keys, duplicate
// keys, and malformed values are rejected with the line number. Keys not
// present keep their value from `base`, which is how preset / file / flag
// layering works.
RunConfig parse_config(const std::string& text, const RunConfig& base = RunConfig{});
RunConfig load_config(const std::string& path, const RunConfig& base = RunConfig{});

// Canonical rendering: every key once, fixed order, doubles at full
// round-trip precision. parse_config(render_config(c)) == c, and rendering
// is byte-stable, so a rendered config is a faithful snapshot.
std::string render_config(const RunConfig& cfg);

// Completed module configs for a concrete dataset: dimensions and the
// discrete flag come from the dataset's environment, everything else from
// cfg. Both reject a dataset whose rtg scale disagrees with cfg.align.
policy::PolicyConfig policy_config(const RunConfig& cfg, const worldkit::Dataset& ds);
critic::CriticConfig critic_config(const RunConfig& cfg, const worldkit::Dataset& ds);

}  // namespace rcsl::cli
