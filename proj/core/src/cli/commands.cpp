#include "rcsl/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <set>
#include <utility>

#include "rcsl/cli/manifest.hpp"
#include "rcsl/error.hpp"
#include "rcsl/evalkit/eval.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/wire.hpp"
#include "rcsl/oracles/align_iteration.hpp"
#include "rcsl/oracles/counting.hpp"
#include "rcsl/oracles/greedy.hpp"
#include "rcsl/oracles/tabular.hpp"
#include "rcsl/worldkit/envs.hpp"

namespace rcsl::cli {
namespace fs = std::filesystem;
namespace nk = numkit;
namespace wk = worldkit;
namespace {

// Seed streams per role, so one config seed drives the whole pipeline
// without any two consumers sharing a stream.
constexpr std::uint64_t kModelInitStream = 11;
constexpr std::uint64_t kCriticInitStream = 12;
constexpr std::uint64_t kPretrainStream = 13;

void say(bool quiet, const std::string& line) {
  if (!quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

void ensure_parent_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

RunManifest start_manifest(const char* command, const RunConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.seed = cfg.align.seed;
  m.env_id = cfg.env_id;
  m.config_text = render_config(cfg);
  m.started_at = now_utc();
  return m;
}

// Full-data TD objective at the current online parameters, for reporting
// when no optimization step ran.
double td_loss_eval(const critic::CriticPair& critic, const critic::Transitions& all) {
  const double gamma = critic.config().gamma;
  nk::Tensor q1 = critic.q_value(all.s, all.a, critic::QWhich::online1);
  nk::Tensor q2 = critic.q_value(all.s, all.a, critic::QWhich::online2);
  nk::Tensor next = critic.q_value(all.s2, all.a2, critic::QWhich::target_min);
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double y = all.r[i] + (all.done[i] ? 0.0 : gamma * next[i]);
    l1 += (q1[i] - y) * (q1[i] - y);
    l2 += (q2[i] - y) * (q2[i] - y);
  }
  const double inv = 1.0 / static_cast<double>(all.size());
  return l1 * inv + l2 * inv;
}

std::vector<double> grid_targets(const RunConfig& cfg, const std::string& dataset_path,
                                 const wk::Dataset* ds) {
  if (!cfg.eval_target_list.empty()) return cfg.eval_target_list;
  if (cfg.eval_target_min) {
    if (cfg.eval_targets < 2)
      throw ValidationError("eval: a target_min/max range needs eval.targets >= 2");
    const double lo = *cfg.eval_target_min;
    const double hi = *cfg.eval_target_max;
    std::vector<double> t(static_cast<std::size_t>(cfg.eval_targets));
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(t.size() - 1);
    t.front() = lo;
    t.back() = hi;
    return t;
  }
  if (ds == nullptr)
    throw ValidationError(
        "eval: no conditioning grid; set eval.target_list or eval.target_min/max, or point "
        "--data at the training dataset");
  if (ds->env_id != cfg.env_id)
    throw ValidationError("eval: dataset at " + dataset_path + " is from '" + ds->env_id +
                          "', not '" + cfg.env_id + "'; give the grid explicitly instead");
  return evalkit::default_targets(*ds, cfg.eval_targets);
}

}  // namespace

GenDataOutcome cmd_gen_data(const RunConfig& cfg, const std::string& out_path, bool quiet) {
  cfg.validate();
  if (out_path.empty()) throw ValidationError("gen-data: output path must not be empty");
  wk::make_env(cfg.env_id);  // rejects unknown ids, listing the known ones
  wk::Dataset ds = wk::generate(cfg.env_id, cfg.episodes, cfg.align.seed);

  RunManifest man = start_manifest("gen-data", cfg);
  ensure_parent_dir(out_path);
  wk::save_dataset(ds, out_path);
  man.artifacts.push_back(out_path);
  man.complete = true;
  man.finished_at = now_utc();
  const std::string manifest_path = out_path + ".manifest.json";
  write_manifest(man, manifest_path);

  GenDataOutcome out;
  out.dataset_path = out_path;
  out.manifest_path = manifest_path;
  out.episodes = static_cast<int>(ds.trajectories.size());
  out.return_min = ds.return_min;
  out.return_max = ds.return_max;
  out.return_mean = ds.return_mean;
  say(quiet, fmt("gen-data: %d episodes of %s -> %s", out.episodes, cfg.env_id.c_str(),
                 out_path.c_str()));
  say(quiet, fmt("gen-data: returns min %.6g  max %.6g  mean %.6g", out.return_min,
                 out.return_max, out.return_mean));
  return out;
}

PretrainOutcome cmd_pretrain(const RunConfig& cfg, const std::string& dataset_path,
                             const std::string& out_path, bool quiet) {
  cfg.validate();
  if (out_path.empty()) throw ValidationError("pretrain: output path must not be empty");
  wk::Dataset ds = wk::load_dataset(dataset_path);
  critic::CriticConfig ccfg = critic_config(cfg, ds);
  nk::Rng init_rng(nk::derive_seed(cfg.align.seed, kCriticInitStream));
  critic::CriticPair critic(ccfg, init_rng);
  critic::Transitions all = critic::transitions_from(ds);

  double final_loss;
  if (cfg.pretrain_steps > 0) {
    nk::Rng rng(nk::derive_seed(cfg.align.seed, kPretrainStream));
    final_loss = critic::run_pretrain(critic, all, cfg.pretrain_steps, cfg.pretrain_batch, rng);
  } else {
    final_loss = td_loss_eval(critic, all);
  }

  RunManifest man = start_manifest("pretrain", cfg);
  ensure_parent_dir(out_path);
  critic.save(out_path);
  man.artifacts.push_back(out_path);
  man.complete = true;
  man.finished_at = now_utc();
  const std::string manifest_path = out_path + ".manifest.json";
  write_manifest(man, manifest_path);

  say(quiet, fmt("pretrain: %d steps on %zu transitions -> %s", cfg.pretrain_steps, all.size(),
                 out_path.c_str()));
  say(quiet, cfg.pretrain_steps > 0
                 ? fmt("pretrain: final td loss %.6g", final_loss)
                 : fmt("pretrain: no steps, checkpoint is the initialization (td loss %.6g)",
                       final_loss));
  return PretrainOutcome{out_path, manifest_path, final_loss};
}

TrainOutcome cmd_train(const RunConfig& cfg, const std::string& dataset_path,
                       const std::string& critic_checkpoint, const std::string& out_dir,
                       bool quiet) {
  cfg.validate();
  if (out_dir.empty()) throw ValidationError("train: output directory must not be empty");
  wk::Dataset ds = wk::load_dataset(dataset_path);
  policy::PolicyConfig pcfg = policy_config(cfg, ds);
  critic::CriticConfig ccfg = critic_config(cfg, ds);

  nk::Rng model_rng(nk::derive_seed(cfg.align.seed, kModelInitStream));
  policy::PolicyModel model(pcfg, model_rng);
  nk::Rng critic_rng(nk::derive_seed(cfg.align.seed, kCriticInitStream));
  critic::CriticPair critic = critic_checkpoint.empty()
                                  ? critic::CriticPair(ccfg, critic_rng)
                                  : critic::CriticPair::load(critic_checkpoint, ccfg);
  if (critic_checkpoint.empty())
    say(quiet, "train: no critic checkpoint given, starting from a fresh critic");

  trainer::Trainer t(std::move(model), std::move(critic), std::move(ds), cfg.align);

  RunManifest man = start_manifest("train", cfg);
  fs::create_directories(out_dir);
  const std::string dir = out_dir + "/";
  const std::string manifest_path = dir + "manifest.json";

  TrainOutcome out;
  out.model_path = dir + "model.ckpt";
  out.critic_path = dir + "critic.ckpt";
  out.metrics_path = dir + "metrics.csv";
  out.manifest_path = manifest_path;

  try {
    const int per = cfg.align.steps_per_epoch;
    const double inv = 1.0 / static_cast<double>(per);
    for (int e = 0; e < cfg.align.epochs; ++e) {
      const auto t0 = std::chrono::steady_clock::now();
      trainer::EpochRow row;
      row.epoch = e;
      row.steps = per;
      for (int s = 0; s < per; ++s) {
        trainer::StepStats st = t.step();
        row.l_sl += st.l_sl;
        row.l_align += st.l_align;
        row.l_q += st.l_q;
        row.fire_fraction += st.fire_fraction;
        row.actor_grad_norm += st.actor_grad_norm;
        row.critic_grad_norm += st.critic_grad_norm;
      }
      row.l_sl *= inv;
      row.l_align *= inv;
      row.l_q *= inv;
      row.fire_fraction *= inv;
      row.actor_grad_norm *= inv;
      row.critic_grad_norm *= inv;
      out.metrics.push_back(row);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      say(quiet, fmt("train: epoch %d/%d  l_sl %.6g  l_align %.6g  l_q %.6g  fired %.3f  (%.1fs)",
                     e + 1, cfg.align.epochs, row.l_sl, row.l_align, row.l_q, row.fire_fraction,
                     secs));
      if (cfg.checkpoint_interval > 0 && (e + 1) % cfg.checkpoint_interval == 0 &&
          e + 1 < cfg.align.epochs) {
        const std::string mpath = dir + fmt("model-e%04d.ckpt", e + 1);
        const std::string cpath = dir + fmt("critic-e%04d.ckpt", e + 1);
        t.model().save(mpath);
        t.critic().save(cpath);
        man.artifacts.push_back(mpath);
        man.artifacts.push_back(mpath + ".arch");
        man.artifacts.push_back(cpath);
        out.interval_checkpoints.push_back(mpath);
        out.interval_checkpoints.push_back(cpath);
      }
    }
    t.model().save(out.model_path);
    man.artifacts.push_back(out.model_path);
    man.artifacts.push_back(out.model_path + ".arch");
    t.critic().save(out.critic_path);
    man.artifacts.push_back(out.critic_path);
    nk::wire::spit(out.metrics_path, trainer::metrics_csv(out.metrics), "metrics log");
    man.artifacts.push_back(out.metrics_path);
    man.complete = true;
    man.finished_at = now_utc();
    write_manifest(man, manifest_path);
  } catch (...) {
    // Flag the directory as a partial run before propagating; a failing
    // manifest write must not mask the original error.
    try {
      write_manifest(man, manifest_path);
    } catch (...) {
    }
    throw;
  }
  say(quiet, fmt("train: wrote %s, %s, %s", out.model_path.c_str(), out.critic_path.c_str(),
                 out.metrics_path.c_str()));
  return out;
}

EvalOutcome cmd_eval_align(const RunConfig& cfg, const std::string& model_path,
                           const std::string& dataset_path,
                           const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                           bool quiet) {
  cfg.validate();
  if (out_dir.empty()) throw ValidationError("eval: output directory must not be empty");
  policy::PolicyModel model = policy::PolicyModel::load(model_path);
  const wk::EnvSpec spec = wk::make_env(cfg.env_id)->spec();
  if (model.config().state_dim != spec.obs_dim || model.config().action_dim != spec.act_dim)
    throw ValidationError(fmt("eval: model at %s works on %d/%d state/action widths, env '%s' "
                              "has %d/%d",
                              model_path.c_str(), model.config().state_dim,
                              model.config().action_dim, cfg.env_id.c_str(), spec.obs_dim,
                              spec.act_dim));

  wk::Dataset ds;
  bool have_ds = false;
  if (!dataset_path.empty()) {
    ds = wk::load_dataset(dataset_path);
    if (ds.rtg_scale != cfg.align.rtg_scale)
      throw ValidationError("eval: config rtg_scale does not match the dataset's");
    have_ds = true;
  }
  const std::vector<double> targets = grid_targets(cfg, dataset_path, have_ds ? &ds : nullptr);

  std::vector<std::uint64_t> use_seeds = seeds.empty()
                                             ? std::vector<std::uint64_t>{cfg.align.seed}
                                             : seeds;
  std::set<std::uint64_t> uniq(use_seeds.begin(), use_seeds.end());
  if (uniq.size() != use_seeds.size())
    throw ValidationError("eval: duplicate seeds would overwrite each other's reports");

  evalkit::SweepConfig sc;
  sc.targets = targets;
  sc.rollouts_per_target = cfg.eval_rollouts;
  sc.rtg_scale = cfg.align.rtg_scale;
  sc.validate();

  RunManifest man = start_manifest("eval-align", cfg);
  man.seed = use_seeds.front();
  fs::create_directories(out_dir);
  const std::string dir = out_dir + "/";

  EvalOutcome out;
  const auto factory = [&cfg] { return wk::make_env(cfg.env_id); };
  for (std::uint64_t s : use_seeds) {
    sc.seed = s;
    evalkit::AlignmentReport report = evalkit::alignment_sweep(model, factory, sc);
    const std::string rows_path = dir + fmt("sweep-seed%llu.rows.csv",
                                            static_cast<unsigned long long>(s));
    const std::string table_path = dir + fmt("sweep-seed%llu.table.txt",
                                             static_cast<unsigned long long>(s));
    evalkit::emit_report(report, rows_path, evalkit::ReportFormat::rows);
    evalkit::emit_report(report, table_path, evalkit::ReportFormat::table);
    man.artifacts.push_back(rows_path);
    man.artifacts.push_back(table_path);
    out.report_paths.push_back(rows_path);
    out.report_paths.push_back(table_path);
    say(quiet, fmt("eval: seed %llu  m = %.6g", static_cast<unsigned long long>(s), report.m));
    out.reports.push_back(std::move(report));
  }
  man.complete = true;
  man.finished_at = now_utc();
  out.manifest_path = dir + "manifest.json";
  write_manifest(man, out.manifest_path);
  return out;
}

void VerifyOptions::validate() const {
  if (max_states < 1 || max_levels < 1 || max_actions < 1)
    throw ValidationError("verify: counting caps must be positive");
  if (greedy_instances < 1) throw ValidationError("verify: need at least one greedy instance");
  if (dynamics_instances < 1)
    throw ValidationError("verify: need at least one dynamics instance");
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw ValidationError("verify: gamma must lie in (0, 1)");
}

namespace {

// Dense random MDP: every transition row strictly positive and summing to 1
// exactly, rewards in [0, 1) so iterate monotonicity from zero holds, full
// support behavior.
wk::TabularMDP random_verify_mdp(nk::Rng& rng, int S, int A) {
  wk::TabularMDP m;
  m.n_states = S;
  m.n_actions = A;
  m.horizon = 50;
  const auto Su = static_cast<std::size_t>(S);
  const auto Au = static_cast<std::size_t>(A);
  m.transition.assign(Su * Au * Su, 0.0);
  m.reward.assign(Su * Au, 0.0);
  m.behavior.assign(Su * Au, 0.0);
  m.init.assign(Su, 0.0);
  m.terminal.assign(Su, 0);
  auto fill_row = [&rng](double* row, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = rng.uniform(0.05, 1.0);
      total += row[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      row[i] /= total;
      acc += row[i];
    }
    row[n - 1] = 1.0 - acc;
  };
  for (std::size_t s = 0; s < Su; ++s) {
    for (std::size_t a = 0; a < Au; ++a) {
      fill_row(&m.transition[(s * Au + a) * Su], Su);
      m.reward[s * Au + a] = rng.uniform();
    }
    fill_row(&m.behavior[s * Au], Au);
  }
  m.init[0] = 1.0;
  m.validate();
  return m;
}

SuiteOutcome run_counting(const VerifyOptions& opt, bool quiet) {
  SuiteOutcome out;
  out.suite = "counting";
  out.worst_residual = -1e300;
  nk::Rng rng(nk::derive_seed(opt.seed, 300));
  for (int s = 1; s <= opt.max_states; ++s) {
    for (int g = 1; g <= opt.max_levels; ++g) {
      for (int a = 1; a <= opt.max_actions; ++a) {
        const std::string expected = oracles::count_mono(s, g, a);
        oracles::CountingInstance inst;
        inst.n_states = s;
        inst.n_levels = g;
        inst.n_actions = a;
        // Natural order, a random strict order, and an order with ties:
        // the constrained-class size must not depend on which.
        for (int variant = 0; variant < 3; ++variant) {
          if (variant == 0) {
            inst.scores.reset();
          } else {
            std::vector<double> scores(static_cast<std::size_t>(s) * a);
            for (double& v : scores)
              v = variant == 1 ? rng.uniform(-1.0, 1.0) : (rng.uniform() < 0.5 ? 0.0 : 1.0);
            inst.scores = std::move(scores);
          }
          ++out.cases;
          if (oracles::enumerate_mono(inst) != expected) ++out.failures;
        }
        ++out.cases;
        const oracles::LogBoundResult b = oracles::log_bound_check(s, g, a);
        if (!b.holds) ++out.failures;
        if (b.lhs - b.rhs > out.worst_residual) out.worst_residual = b.lhs - b.rhs;
      }
    }
  }
  say(quiet, fmt("verify counting: %d cases, %d failures, log-ceiling slack %.3g", out.cases,
                 out.failures, out.worst_residual));
  return out;
}

SuiteOutcome run_greedy(const VerifyOptions& opt, bool quiet) {
  SuiteOutcome out;
  out.suite = "greedy";
  for (int i = 0; i < opt.greedy_instances; ++i) {
    nk::Rng rng(nk::derive_seed(opt.seed, 500 + static_cast<std::uint64_t>(i)));
    const int S = 2 + i % 4;
    const int A = 2 + i % 3;
    std::vector<double> p(static_cast<std::size_t>(S) * A);
    std::vector<double> q(p.size());
    for (int s = 0; s < S; ++s) {
      double total = 0.0;
      for (int a = 0; a < A; ++a) {
        p[static_cast<std::size_t>(s) * A + a] = rng.uniform(0.05, 1.0);
        total += p[static_cast<std::size_t>(s) * A + a];
      }
      double acc = 0.0;
      for (int a = 0; a + 1 < A; ++a) {
        p[static_cast<std::size_t>(s) * A + a] /= total;
        acc += p[static_cast<std::size_t>(s) * A + a];
      }
      p[static_cast<std::size_t>(s) * A + (A - 1)] = 1.0 - acc;
      for (int a = 0; a < A; ++a) q[static_cast<std::size_t>(s) * A + a] = rng.uniform(-1.0, 1.0);
    }
    if (i % 3 == 0) {
      // Duplicate each state's best value into a random slot so argmax ties
      // are exercised; set equality at the top is part of the contract.
      for (int s = 0; s < S; ++s) {
        int best = 0;
        for (int a = 1; a < A; ++a)
          if (q[static_cast<std::size_t>(s) * A + a] > q[static_cast<std::size_t>(s) * A + best])
            best = a;
        const int j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(A)));
        q[static_cast<std::size_t>(s) * A + j] = q[static_cast<std::size_t>(s) * A + best];
      }
    }
    ++out.cases;
    if (!oracles::greedy_equiv_check(p, q, S, A).all_ok) ++out.failures;
  }
  say(quiet, fmt("verify greedy: %d cases, %d failures", out.cases, out.failures));
  return out;
}

SuiteOutcome run_dynamics(const VerifyOptions& opt, bool quiet) {
  SuiteOutcome out;
  out.suite = "dynamics";
  const int iterations = 400;
  for (int i = 0; i < opt.dynamics_instances; ++i) {
    nk::Rng rng(nk::derive_seed(opt.seed, 700 + static_cast<std::uint64_t>(i)));
    const int S = 2 + i % 5;
    const int A = 2 + i % 3;
    wk::TabularMDP m = random_verify_mdp(rng, S, A);
    std::vector<std::uint8_t> support(static_cast<std::size_t>(S) * A, 1);
    // Reachable-safe thinning: action 0 stays supported everywhere.
    for (std::size_t j = 0; j < support.size(); ++j)
      if (j % static_cast<std::size_t>(A) != 0 && rng.uniform() < 0.4) support[j] = 0;

    struct Mode {
      oracles::PerturbMode mode;
      std::vector<std::uint8_t> support;
      oracles::SolveResult ref;
    };
    Mode modes[2] = {
        {oracles::PerturbMode::zero, {}, oracles::policy_evaluation(m, {}, opt.gamma)},
        {oracles::PerturbMode::large, support, oracles::value_iteration(m, support, opt.gamma)},
    };
    for (const Mode& mode : modes) {
      const std::vector<oracles::QTable> seq =
          oracles::exact_align_iteration(m, mode.support, mode.mode, opt.gamma, iterations);
      double residual = 0.0;
      for (std::size_t j = 0; j < seq.back().q.size(); ++j)
        residual = std::max(residual, std::fabs(seq.back().q[j] - mode.ref.q.q[j]));
      double worst_drop = 0.0;
      for (std::size_t it = 0; it + 1 < seq.size(); ++it)
        for (std::size_t j = 0; j < seq[it].q.size(); ++j)
          worst_drop = std::max(worst_drop, seq[it].q[j] - seq[it + 1].q[j]);
      ++out.cases;
      if (residual >= 1e-10 || worst_drop > 1e-12) ++out.failures;
      out.worst_residual = std::max(out.worst_residual, residual);
      out.worst_monotone = std::max(out.worst_monotone, worst_drop);
    }
  }
  say(quiet, fmt("verify dynamics: %d cases, %d failures, max fixed-point gap %.3g, worst "
                 "iterate drop %.3g",
                 out.cases, out.failures, out.worst_residual, out.worst_monotone));
  return out;
}

}  // namespace

std::vector<SuiteOutcome> cmd_verify(const std::string& which, const VerifyOptions& opt,
                                     bool quiet) {
  opt.validate();
  if (which != "counting" && which != "greedy" && which != "dynamics" && which != "all")
    throw ValidationError("verify: unknown suite '" + which +
                          "'; expected counting, greedy, dynamics, or all");
  std::vector<SuiteOutcome> outcomes;
  if (which == "counting" || which == "all") outcomes.push_back(run_counting(opt, quiet));
  if (which == "greedy" || which == "all") outcomes.push_back(run_greedy(opt, quiet));
  if (which == "dynamics" || which == "all") outcomes.push_back(run_dynamics(opt, quiet));
  say(quiet, all_passed(outcomes) ? "verify: all suites passed" : "verify: FAILED");
  return outcomes;
}

bool all_passed(const std::vector<SuiteOutcome>& outcomes) {
  for (const SuiteOutcome& o : outcomes)
    if (o.failures != 0) return false;
  return true;
}

}  // namespace rcsl::cli
