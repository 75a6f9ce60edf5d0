// Command-line driver for the pipeline: behavior-data generation, critic
// pretraining, co-training, conditioning sweeps, and the exact-math
// verification suites. Configuration layers in a fixed order: built-in
// defaults, then --preset, then --config, then explicit flags. Exit codes:
// 0 success, 1 bad input, 2 runtime failure (including a failed verify).

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcsl/cli/commands.hpp"
#include "rcsl/cli/manifest.hpp"
#include "rcsl/cli/presets.hpp"
#include "rcsl/error.hpp"

namespace cli = rcsl::cli;

namespace {

struct Common {
  std::string preset;
  std::string config;
  std::uint64_t seed = 0;
  bool quiet = false;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--preset", c.preset, "start from this named preset");
  sub->add_option("--config", c.config, "apply this config file on top");
  c.seed_opt = sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_flag("--quiet", c.quiet, "suppress progress lines on stderr");
}

cli::RunConfig effective(const Common& c) {
  cli::RunConfig cfg;
  if (!c.preset.empty()) cfg = cli::preset(c.preset);
  if (!c.config.empty()) cfg = cli::load_config(c.config, cfg);
  if (c.seed_opt->count() > 0) cfg.align.seed = c.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"return-conditioned sequence policies with critic-guided alignment"};
  app.set_version_flag("--version", cli::kToolVersion);
  app.require_subcommand(1);
  int exit_code = 0;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "roll behavior episodes into a dataset file");
  Common gen_c;
  add_common(gen, gen_c);
  std::string gen_env, gen_out;
  int gen_episodes = 0;
  auto* gen_env_opt = gen->add_option("--env", gen_env, "environment id");
  auto* gen_epi_opt = gen->add_option("--episodes", gen_episodes, "episode count");
  gen->add_option("--out", gen_out, "dataset file to write")->required();
  gen->callback([&] {
    cli::RunConfig cfg = effective(gen_c);
    if (gen_env_opt->count() > 0) cfg.env_id = gen_env;
    if (gen_epi_opt->count() > 0) cfg.episodes = gen_episodes;
    cli::cmd_gen_data(cfg, gen_out, gen_c.quiet);
  });

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "TD-pretrain a twin critic on a dataset");
  Common pre_c;
  add_common(pre, pre_c);
  std::string pre_data, pre_out;
  int pre_steps = 0, pre_batch = 0;
  pre->add_option("--data", pre_data, "dataset file")->required();
  auto* pre_steps_opt = pre->add_option("--steps", pre_steps, "pretraining steps");
  auto* pre_batch_opt = pre->add_option("--batch", pre_batch, "minibatch size");
  pre->add_option("--out", pre_out, "critic checkpoint to write")->required();
  pre->callback([&] {
    cli::RunConfig cfg = effective(pre_c);
    if (pre_steps_opt->count() > 0) cfg.pretrain_steps = pre_steps;
    if (pre_batch_opt->count() > 0) cfg.pretrain_batch = pre_batch;
    cli::cmd_pretrain(cfg, pre_data, pre_out, pre_c.quiet);
  });

  // train
  auto* tr = app.add_subcommand("train", "co-train the sequence policy and the critic");
  Common tr_c;
  add_common(tr, tr_c);
  std::string tr_data, tr_critic, tr_out;
  int tr_interval = 0;
  tr->add_option("--data", tr_data, "dataset file")->required();
  tr->add_option("--critic", tr_critic, "pretrained critic checkpoint (omit for fresh)");
  auto* tr_int_opt =
      tr->add_option("--checkpoint-interval", tr_interval, "epochs between saved checkpoints");
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->callback([&] {
    cli::RunConfig cfg = effective(tr_c);
    if (tr_int_opt->count() > 0) cfg.checkpoint_interval = tr_interval;
    cli::cmd_train(cfg, tr_data, tr_critic, tr_out, tr_c.quiet);
  });

  // eval-align
  auto* ev = app.add_subcommand("eval-align",
                                "sweep conditioning targets and report realized returns");
  Common ev_c;
  add_common(ev, ev_c);
  std::string ev_model, ev_env, ev_data, ev_out;
  int ev_rollouts = 0, ev_targets = 0;
  std::vector<std::uint64_t> ev_seeds;
  ev->add_option("--model", ev_model, "policy checkpoint")->required();
  auto* ev_env_opt = ev->add_option("--env", ev_env, "environment id");
  ev->add_option("--data", ev_data, "dataset file; supplies the default target grid");
  auto* ev_roll_opt = ev->add_option("--rollouts", ev_rollouts, "rollouts per target");
  auto* ev_tgt_opt = ev->add_option("--targets", ev_targets, "grid size");
  ev->add_option("--seeds", ev_seeds, "run one sweep per seed (default: the config seed)");
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->callback([&] {
    cli::RunConfig cfg = effective(ev_c);
    if (ev_env_opt->count() > 0) cfg.env_id = ev_env;
    if (ev_roll_opt->count() > 0) cfg.eval_rollouts = ev_rollouts;
    if (ev_tgt_opt->count() > 0) cfg.eval_targets = ev_targets;
    cli::cmd_eval_align(cfg, ev_model, ev_data, ev_seeds, ev_out, ev_c.quiet);
  });

  // verify
  auto* vf = app.add_subcommand("verify", "run the exact-math oracle suites");
  std::string vf_suite = "all";
  cli::VerifyOptions vf_opt;
  bool vf_quiet = false;
  vf->add_option("--suite", vf_suite, "counting, greedy, dynamics, or all");
  vf->add_option("--max-states", vf_opt.max_states, "counting grid cap");
  vf->add_option("--max-levels", vf_opt.max_levels, "counting grid cap");
  vf->add_option("--max-actions", vf_opt.max_actions, "counting grid cap");
  vf->add_option("--greedy-instances", vf_opt.greedy_instances, "random greedy instances");
  vf->add_option("--dynamics-instances", vf_opt.dynamics_instances, "random MDP instances");
  vf->add_option("--gamma", vf_opt.gamma, "dynamics discount");
  vf->add_option("--seed", vf_opt.seed, "instance seed");
  vf->add_flag("--quiet", vf_quiet, "suppress progress lines on stderr");
  vf->callback([&] {
    if (!cli::all_passed(cli::cmd_verify(vf_suite, vf_opt, vf_quiet))) exit_code = 2;
  });

  // presets
  auto* pr = app.add_subcommand("presets", "list named presets, or print one as a config file");
  std::string pr_name;
  pr->add_option("name", pr_name, "preset to print");
  pr->callback([&] {
    if (pr_name.empty()) {
      for (const std::string& n : cli::preset_names()) std::printf("%s\n", n.c_str());
    } else {
      std::printf("%s", cli::preset_text(pr_name).c_str());
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const rcsl::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const rcsl::RuntimeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return exit_code;
}
