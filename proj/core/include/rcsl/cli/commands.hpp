#pragma once

// The five pipeline commands, callable in process. Each validates its
// inputs fully before touching the filesystem, writes its artifacts, then
// drops a manifest next to them; a run that dies partway still leaves a
// manifest, marked incomplete, listing whatever was written. Progress lines
// go to stderr and are silenced by quiet; files carry the real results.

#include <cstdint>
#include <string>
#include <vector>

#include "rcsl/cli/config_file.hpp"
#include "rcsl/evalkit/report.hpp"
#include "rcsl/trainer/trainer.hpp"

namespace rcsl::cli {

struct GenDataOutcome {
  std::string dataset_path;
  std::string manifest_path;
  int episodes = 0;
  double return_min = 0.0;
  double return_max = 0.0;
  double return_mean = 0.0;
};

// Rolls cfg.episodes behavior episodes in cfg.env_id (seeded by
// cfg.align.seed) and writes the dataset to out_path.
GenDataOutcome cmd_gen_data(const RunConfig& cfg, const std::string& out_path, bool quiet);

struct PretrainOutcome {
  std::string checkpoint_path;
  std::string manifest_path;
  double final_loss = 0.0;
};

// TD-pretrains a fresh twin critic on the dataset's transitions for
// cfg.pretrain_steps minibatches and writes the checkpoint to out_path.
// With zero steps the checkpoint is the bitwise initialization.
PretrainOutcome cmd_pretrain(const RunConfig& cfg, const std::string& dataset_path,
                             const std::string& out_path, bool quiet);

struct TrainOutcome {
  std::string model_path;
  std::string critic_path;
  std::string metrics_path;
  std::string manifest_path;
  std::vector<std::string> interval_checkpoints;
  std::vector<trainer::EpochRow> metrics;
};

// Co-trains model and critic on the dataset. critic_checkpoint may be empty
// for a fresh critic (the pretrained path is the intended one). Writes
// model.ckpt, critic.ckpt, and metrics.csv into out_dir, plus a numbered
// checkpoint pair every cfg.checkpoint_interval epochs when that is
// nonzero. Deterministic: same config and seed, same bytes.
TrainOutcome cmd_train(const RunConfig& cfg, const std::string& dataset_path,
                       const std::string& critic_checkpoint, const std::string& out_dir,
                       bool quiet);

struct EvalOutcome {
  std::vector<std::string> report_paths;
  std::string manifest_path;
  std::vector<evalkit::AlignmentReport> reports;  // one per seed, in order
};

// Sweeps conditioning targets in cfg.env_id with the saved model, once per
// entry of seeds (empty means the config seed), and writes a rows and a
// table report per sweep into out_dir. The grid comes from
// cfg.eval_target_list, else the cfg.eval_target_min/max range, else the
// return range of the dataset at dataset_path.
EvalOutcome cmd_eval_align(const RunConfig& cfg, const std::string& model_path,
                           const std::string& dataset_path,
                           const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                           bool quiet);

struct VerifyOptions {
  // Counting grid: every instance with up to this many states, return
  // levels, and actions.
  int max_states = 3;
  int max_levels = 4;
  int max_actions = 4;
  int greedy_instances = 50;
  int dynamics_instances = 20;
  double gamma = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SuiteOutcome {
  std::string suite;
  int cases = 0;
  int failures = 0;
  // counting: max slack of the log ceiling (at or below 0 when it holds).
  // dynamics: largest max-norm gap between the iteration limit and its
  // closed-form reference.
  double worst_residual = 0.0;
  // dynamics only: worst elementwise decrease between consecutive iterates.
  double worst_monotone = 0.0;
};

// Runs the requested oracle suites ("counting", "greedy", "dynamics", or
// "all"). counting checks the constrained-class count against brute-force
// enumeration (natural, scored, and tied action orders) and the log ceiling
// on the full grid; greedy cross-checks the high-target minimizer against
// argmax-Q on random full-support instances, tie cases included; dynamics
// compares idealized critic iteration limits against exact solves and
// checks iterate monotonicity.
std::vector<SuiteOutcome> cmd_verify(const std::string& which, const VerifyOptions& opt,
                                     bool quiet);

bool all_passed(const std::vector<SuiteOutcome>& outcomes);

}  // namespace rcsl::cli
