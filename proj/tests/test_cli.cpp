// CLI layer: config documents, presets, run manifests, the command entry
// points, and the installed binary's exit-code contract. Command tests run
// in-process on tiny chain-5 configs; the binary tests shell out to the
// tool named by RCSL_TOOL.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "rcsl/cli/commands.hpp"
#include "rcsl/cli/config_file.hpp"
#include "rcsl/cli/manifest.hpp"
#include "rcsl/cli/presets.hpp"
#include "rcsl/critic/critic.hpp"
#include "rcsl/error.hpp"
#include "rcsl/evalkit/eval.hpp"
#include "rcsl/evalkit/report.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/wire.hpp"
#include "rcsl/policy/model.hpp"
#include "rcsl/trainer/trainer.hpp"
#include "rcsl/worldkit/dataset.hpp"
#include "rcsl/worldkit/envs.hpp"

namespace cli = rcsl::cli;
namespace ek = rcsl::evalkit;
namespace nk = rcsl::numkit;
namespace wk = rcsl::worldkit;
namespace fs = std::filesystem;
using rcsl::RuntimeError;
using rcsl::ValidationError;

namespace {

std::string read_file(const std::string& path) { return nk::wire::slurp(path, "test file"); }
void write_file(const std::string& path, const std::string& buf) {
  nk::wire::spit(path, buf, "test file");
}

fs::path fresh_dir(const std::string& leaf) {
  fs::path d = fs::temp_directory_path() / ("rcsl-cli-" + leaf);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Small chain-5 run that finishes in well under a second.
cli::RunConfig tiny_chain() {
  cli::RunConfig c;
  c.env_id = "chain-5";
  c.episodes = 40;
  c.embed_dim = 16;
  c.blocks = 1;
  c.heads = 2;
  c.conv_window = 3;
  c.max_timestep = 64;
  c.critic_hidden = 16;
  c.pretrain_steps = 30;
  c.pretrain_batch = 16;
  c.align.context = 4;
  c.align.rtg_scale = 1.0;
  c.align.batch_size = 2;
  c.align.epochs = 2;
  c.align.steps_per_epoch = 5;
  c.align.seed = 7;
  c.eval_targets = 3;
  c.eval_rollouts = 2;
  return c;
}

struct Staged {
  fs::path dir;
  cli::RunConfig cfg;
  std::string ds, critic, model;
};

Staged stage(const std::string& leaf) {
  Staged s;
  s.dir = fresh_dir(leaf);
  s.cfg = tiny_chain();
  s.ds = cli::cmd_gen_data(s.cfg, (s.dir / "ds.bin").string(), true).dataset_path;
  s.critic = cli::cmd_pretrain(s.cfg, s.ds, (s.dir / "critic.ckpt").string(), true).checkpoint_path;
  s.model = cli::cmd_train(s.cfg, s.ds, s.critic, (s.dir / "run").string(), true).model_path;
  return s;
}

template <class E, class F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  FAIL("expected exception did not fire");
  return {};
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

bool lists(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& x : v)
    if (x == s) return true;
  return false;
}

// Manifest invariant: every regular file under `dir` except the manifest
// itself appears in the artifact list.
void check_artifacts_cover_dir(const cli::RunManifest& m, const fs::path& dir,
                               const std::string& manifest_path) {
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string p = e.path().string();
    if (p == manifest_path) continue;
    CAPTURE(p);
    CHECK(lists(m.artifacts, p));
  }
  for (const auto& a : m.artifacts) CHECK(fs::exists(a));
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(RCSL_TOOL) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

}  // namespace

TEST_CASE("config: canonical render round trips and layers") {
  SUBCASE("defaults survive a round trip") {
    const cli::RunConfig base;
    CHECK(cli::parse_config(cli::render_config(base)) == base);
  }

  SUBCASE("awkward doubles survive bit for bit") {
    cli::RunConfig c = tiny_chain();
    c.align.sigma_e = 0.1 + 0.2;  // not representable as a short decimal
    c.align.lambda_e = 1.0 / 3.0;
    c.align.gamma = 1.0 - 1e-12;
    c.align.actor_adam.lr = 3e-4 * (1.0 + 1e-15);
    c.eval_target_list = {0.1, 0.30000000000000004, 1e17};
    const cli::RunConfig back = cli::parse_config(cli::render_config(c));
    CHECK(back == c);
    CHECK(cli::render_config(back) == cli::render_config(c));
  }

  SUBCASE("comments, blanks, and whitespace are tolerated") {
    const cli::RunConfig c =
        cli::parse_config("# header\n\n  sigma_e   =  2.5  \nlambda_e = 0\n");
    CHECK(c.align.sigma_e == 2.5);
    CHECK(c.align.lambda_e == 0.0);
  }

  SUBCASE("keys not present keep the base value") {
    const cli::RunConfig base = cli::preset("pointmass-align");
    const cli::RunConfig c = cli::parse_config("sigma_e = 9\n", base);
    cli::RunConfig want = base;
    want.align.sigma_e = 9.0;
    CHECK(c == want);
  }

  SUBCASE("optional eval range renders only when set") {
    cli::RunConfig c = tiny_chain();
    CHECK(!contains(cli::render_config(c), "eval.target_min"));
    c.eval_target_min = 0.0;
    c.eval_target_max = 4.0;
    CHECK(contains(cli::render_config(c), "eval.target_min"));
    CHECK(cli::parse_config(cli::render_config(c)) == c);
  }
}

TEST_CASE("config: malformed documents are rejected with the line") {
  using C = cli::RunConfig;
  SUBCASE("unknown key") {
    const std::string m =
        message_of<ValidationError>([] { cli::parse_config("unknown_knob = 3\n"); });
    CHECK(contains(m, "line 1"));
    CHECK(contains(m, "unknown_knob"));
  }
  SUBCASE("duplicate key") {
    const std::string m =
        message_of<ValidationError>([] { cli::parse_config("sigma_e = 1\nsigma_e = 2\n"); });
    CHECK(contains(m, "line 2"));
    CHECK(contains(m, "duplicate"));
  }
  SUBCASE("line numbers count comments and blanks") {
    const std::string m =
        message_of<ValidationError>([] { cli::parse_config("# c\n\nepisodes = x\n"); });
    CHECK(contains(m, "line 3"));
  }
  SUBCASE("malformed values") {
    CHECK_THROWS_AS((void)cli::parse_config("episodes = 3.5\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("sigma_e = abc\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("use_conv = yes\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("noise = pink\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("just a line\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("eval.target_list = 1,,2\n"), ValidationError);
  }
  SUBCASE("semantic validation") {
    CHECK_THROWS_AS((void)cli::parse_config("episodes = 0\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("eval.target_list = 3,2\n"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("eval.target_min = 1\n"), ValidationError);
    CHECK_THROWS_AS(
        (void)cli::parse_config("eval.target_min = 0\neval.target_max = 1\neval.target_list = 1,2\n"),
        ValidationError);
    CHECK_THROWS_AS((void)cli::parse_config("model.embed_dim = 30\nmodel.heads = 4\n"),
                    ValidationError);
    const std::string m = message_of<ValidationError>(
        [] { cli::parse_config("critic.pretrain_mode = iql_expectile\n"); });
    CHECK(contains(m, "not implemented"));
    CHECK(contains(m, "td_double"));
  }
  SUBCASE("validation failures leave no partial object in play") {
    C base = tiny_chain();
    CHECK_THROWS_AS((void)cli::parse_config("gamma = 0\n", base), ValidationError);
    CHECK(base == tiny_chain());  // base passed by const ref, untouched
  }
}

TEST_CASE("presets: named configurations validate and round trip") {
  const std::vector<std::string> names = cli::preset_names();
  CHECK(names.size() == 22);
  CHECK(lists(names, "desk-default"));
  CHECK(lists(names, "pointmass-align"));
  CHECK(lists(names, "ablate-no-align"));
  CHECK(lists(names, "ref-halfcheetah-medium"));

  SUBCASE("every preset validates and renders canonically") {
    for (const auto& n : names) {
      CAPTURE(n);
      const cli::RunConfig c = cli::preset(n);
      CHECK_NOTHROW(c.validate());
      CHECK(cli::parse_config(cli::render_config(c)) == c);
      // preset_text is a comment header plus the canonical rendering.
      const std::string text = cli::preset_text(n);
      CHECK(contains(text, "# " + n + ":"));
      CHECK(cli::parse_config(text) == c);
    }
  }

  SUBCASE("shipped preset files match the built-ins byte for byte") {
    for (const auto& n : names) {
      CAPTURE(n);
      const std::string path = std::string(RCSL_PRESETS_DIR) + "/" + n + ".cfg";
      REQUIRE(fs::exists(path));
      CHECK(read_file(path) == cli::preset_text(n));
    }
  }

  SUBCASE("ablations differ from the base run in exactly one knob") {
    const cli::RunConfig base = cli::preset("pointmass-align");
    auto expect = [&](const std::string& name, const std::function<void(cli::RunConfig&)>& tweak) {
      CAPTURE(name);
      cli::RunConfig want = base;
      tweak(want);
      CHECK(cli::preset(name) == want);
    };
    expect("ablate-no-align", [](cli::RunConfig& c) { c.align.lambda_e = 0.0; });
    expect("ablate-sigma-0", [](cli::RunConfig& c) { c.align.sigma_e = 0.0; });
    expect("ablate-delta-rtg-0", [](cli::RunConfig& c) { c.align.delta_rtg = 0.0; });
    expect("ablate-symmetric-indicator", [](cli::RunConfig& c) {
      c.align.indicator_mode = rcsl::trainer::IndicatorMode::symmetric;
    });
    expect("ablate-squared-penalty", [](cli::RunConfig& c) {
      c.align.penalty_mode = rcsl::trainer::PenaltyMode::squared;
    });
    expect("ablate-freeze-critic", [](cli::RunConfig& c) { c.align.freeze_critic = true; });
    expect("ablate-no-conv", [](cli::RunConfig& c) { c.use_conv = false; });
  }

  SUBCASE("documentation presets carry the published knob triples") {
    const cli::RunConfig hc = cli::preset("ref-halfcheetah-medium");
    CHECK(hc.align.sigma_e == 15.0);
    CHECK(hc.align.lambda_e == 5.0);
    CHECK(hc.align.delta_rtg == 10.0);
    CHECK(hc.align.context == 20);
    CHECK(hc.align.rtg_scale == 1000.0);
    CHECK(hc.embed_dim == 256);
    CHECK(hc.blocks == 4);
    const cli::RunConfig am = cli::preset("ref-antmaze-umaze");
    CHECK(am.align.sigma_e == 5.0);
    CHECK(am.align.lambda_e == 100.0);
    CHECK(am.align.delta_rtg == 1.0);
    CHECK(am.align.noise_mode == rcsl::trainer::NoiseMode::half_normal);
    CHECK(am.align.rtg_scale == 1.0);
  }

  SUBCASE("unknown names are rejected with the catalog") {
    const std::string m = message_of<ValidationError>([] { cli::preset("no-such"); });
    CHECK(contains(m, "desk-default"));
    CHECK_THROWS_AS((void)cli::preset_text("no-such"), ValidationError);
  }
}

TEST_CASE("manifests: render and parse agree and reject malformed documents") {
  cli::RunManifest m;
  m.command = "train";
  m.seed = 42;
  m.env_id = "chain-5";
  m.config_text = "sigma_e = 1\n";
  m.artifacts = {"/tmp/a.ckpt", "/tmp/b.csv"};
  m.started_at = "2026-01-02T03:04:05Z";
  m.finished_at = "2026-01-02T03:06:07Z";
  m.complete = true;

  SUBCASE("round trip") {
    const cli::RunManifest back = cli::parse_manifest(cli::render_manifest(m));
    CHECK(back.tool == m.tool);
    CHECK(back.version == m.version);
    CHECK(back.command == m.command);
    CHECK(back.seed == m.seed);
    CHECK(back.env_id == m.env_id);
    CHECK(back.config_text == m.config_text);
    CHECK(back.artifacts == m.artifacts);
    CHECK(back.started_at == m.started_at);
    CHECK(back.finished_at == m.finished_at);
    CHECK(back.complete == m.complete);
    CHECK(cli::render_manifest(back) == cli::render_manifest(m));
  }

  SUBCASE("a partial run parses with the complete flag down") {
    m.finished_at.clear();
    m.complete = false;
    const cli::RunManifest back = cli::parse_manifest(cli::render_manifest(m));
    CHECK(!back.complete);
    CHECK(back.finished_at.empty());
  }

  SUBCASE("malformed documents are rejected") {
    CHECK_THROWS_AS((void)cli::parse_manifest("{"), ValidationError);
    CHECK_THROWS_AS((void)cli::parse_manifest("[]"), ValidationError);
    auto doc = nlohmann::ordered_json::parse(cli::render_manifest(m));
    auto drop = doc;
    drop.erase("seed");
    CHECK_THROWS_AS((void)cli::parse_manifest(drop.dump()), ValidationError);
    auto extra = doc;
    extra["surprise"] = 1;
    CHECK_THROWS_AS((void)cli::parse_manifest(extra.dump()), ValidationError);
    auto wrong = doc;
    wrong["seed"] = "not a number";
    CHECK_THROWS_AS((void)cli::parse_manifest(wrong.dump()), ValidationError);
    auto inconsistent = doc;
    inconsistent["finished_at"] = "";
    CHECK_THROWS_AS((void)cli::parse_manifest(inconsistent.dump()), ValidationError);
  }

  SUBCASE("file round trip") {
    const fs::path dir = fresh_dir("manifest");
    const std::string p = (dir / "run.manifest.json").string();
    cli::write_manifest(m, p);
    CHECK(cli::read_manifest(p).command == "train");
    CHECK(read_file(p) == cli::render_manifest(m));
  }
}

TEST_CASE("gen-data: deterministic artifacts and early validation") {
  const fs::path dir = fresh_dir("gendata");
  cli::RunConfig cfg = tiny_chain();
  cfg.episodes = 100;

  SUBCASE("same config, same bytes") {
    const auto a = cli::cmd_gen_data(cfg, (dir / "a.bin").string(), true);
    const auto b = cli::cmd_gen_data(cfg, (dir / "b.bin").string(), true);
    CHECK(read_file(a.dataset_path) == read_file(b.dataset_path));
    CHECK(a.episodes == 100);
    const wk::Dataset ds = wk::load_dataset(a.dataset_path);
    CHECK(ds.trajectories.size() == 100);
    CHECK(a.return_min == ds.return_min);
    CHECK(a.return_max == ds.return_max);
    CHECK(a.return_mean == ds.return_mean);

    const cli::RunManifest m = cli::read_manifest(a.manifest_path);
    CHECK(m.tool == cli::kToolName);
    CHECK(m.command == "gen-data");
    CHECK(m.env_id == "chain-5");
    CHECK(m.seed == cfg.align.seed);
    CHECK(m.complete);
    CHECK(!m.finished_at.empty());
    CHECK(m.artifacts == std::vector<std::string>{a.dataset_path});
    CHECK(m.config_text == cli::render_config(cfg));
  }

  SUBCASE("parent directories are created") {
    const auto out = cli::cmd_gen_data(cfg, (dir / "nested" / "deep" / "ds.bin").string(), true);
    CHECK(fs::exists(out.dataset_path));
  }

  SUBCASE("invalid requests leave no files behind") {
    cli::RunConfig bad = cfg;
    bad.episodes = 0;
    const std::string out = (dir / "never.bin").string();
    CHECK_THROWS_AS((void)cli::cmd_gen_data(bad, out, true), ValidationError);
    CHECK(!fs::exists(out));
    CHECK(!fs::exists(out + ".manifest.json"));

    cli::RunConfig unknown = cfg;
    unknown.env_id = "lorenz";
    const std::string m =
        message_of<ValidationError>([&] { cli::cmd_gen_data(unknown, out, true); });
    CHECK(contains(m, "pointmass"));  // the rejection names the registry
    CHECK(!fs::exists(out));
  }

  SUBCASE("the point-mass behavior spans slow and fast episodes") {
    cli::RunConfig pm = cfg;
    pm.env_id = "pointmass";
    pm.episodes = 300;
    pm.align.rtg_scale = 32.0;
    const auto out = cli::cmd_gen_data(pm, (dir / "pm.bin").string(), true);
    CHECK(out.return_min < 15.0);
    CHECK(out.return_max > 70.0);
    CHECK(out.return_mean > out.return_min);
    CHECK(out.return_mean < out.return_max);
  }
}

TEST_CASE("pretrain: seedable, with an honest zero-step baseline") {
  const fs::path dir = fresh_dir("pretrain");
  cli::RunConfig cfg = tiny_chain();
  const auto gen = cli::cmd_gen_data(cfg, (dir / "ds.bin").string(), true);

  SUBCASE("same seed, same checkpoint") {
    const auto a = cli::cmd_pretrain(cfg, gen.dataset_path, (dir / "a.ckpt").string(), true);
    const auto b = cli::cmd_pretrain(cfg, gen.dataset_path, (dir / "b.ckpt").string(), true);
    CHECK(read_file(a.checkpoint_path) == read_file(b.checkpoint_path));
    CHECK(a.final_loss == b.final_loss);
    CHECK(std::isfinite(a.final_loss));
    const cli::RunManifest m = cli::read_manifest(a.manifest_path);
    CHECK(m.command == "pretrain");
    CHECK(m.complete);
    CHECK(m.artifacts == std::vector<std::string>{a.checkpoint_path});
  }

  SUBCASE("zero steps writes the bitwise initialization") {
    cli::RunConfig zero = cfg;
    zero.pretrain_steps = 0;
    const auto out = cli::cmd_pretrain(zero, gen.dataset_path, (dir / "z.ckpt").string(), true);
    // The initialization depends only on (config seed, critic init stream).
    const wk::Dataset ds = wk::load_dataset(gen.dataset_path);
    nk::Rng init(nk::derive_seed(zero.align.seed, 12));
    rcsl::critic::CriticPair fresh(cli::critic_config(zero, ds), init);
    const std::string ref = (dir / "ref.ckpt").string();
    fresh.save(ref);
    CHECK(read_file(out.checkpoint_path) == read_file(ref));
    // The reported loss is the TD objective of that untrained critic, so it
    // is well above the trained run's.
    const auto trained =
        cli::cmd_pretrain(cfg, gen.dataset_path, (dir / "t.ckpt").string(), true);
    CHECK(out.final_loss > 0.0);
    CHECK(read_file(out.checkpoint_path) != read_file(trained.checkpoint_path));
  }

  SUBCASE("enough steps drive the TD objective down hard") {
    cli::RunConfig long_run = cfg;
    long_run.pretrain_steps = 600;
    long_run.pretrain_batch = 64;
    const auto out =
        cli::cmd_pretrain(long_run, gen.dataset_path, (dir / "long.ckpt").string(), true);
    CHECK(out.final_loss < 1e-3);
  }

  SUBCASE("mismatched rtg scale is rejected") {
    cli::RunConfig bad = cfg;
    bad.align.rtg_scale = 32.0;
    CHECK_THROWS_AS((void)cli::cmd_pretrain(bad, gen.dataset_path, (dir / "x.ckpt").string(), true),
                    ValidationError);
  }

  SUBCASE("a missing dataset is a runtime failure") {
    CHECK_THROWS_AS(
        (void)cli::cmd_pretrain(cfg, (dir / "nope.bin").string(), (dir / "x.ckpt").string(), true),
        RuntimeError);
  }
}

TEST_CASE("train: deterministic, mirrors the library loop, flags partial runs") {
  const fs::path dir = fresh_dir("train");
  cli::RunConfig cfg = tiny_chain();
  const auto gen = cli::cmd_gen_data(cfg, (dir / "ds.bin").string(), true);
  const auto pre = cli::cmd_pretrain(cfg, gen.dataset_path, (dir / "critic.ckpt").string(), true);

  SUBCASE("two runs, identical bytes") {
    const auto a =
        cli::cmd_train(cfg, gen.dataset_path, pre.checkpoint_path, (dir / "r1").string(), true);
    const auto b =
        cli::cmd_train(cfg, gen.dataset_path, pre.checkpoint_path, (dir / "r2").string(), true);
    CHECK(read_file(a.model_path) == read_file(b.model_path));
    CHECK(read_file(a.model_path + ".arch") == read_file(b.model_path + ".arch"));
    CHECK(read_file(a.critic_path) == read_file(b.critic_path));
    CHECK(read_file(a.metrics_path) == read_file(b.metrics_path));

    CHECK(read_file(a.metrics_path) == rcsl::trainer::metrics_csv(a.metrics));
    CHECK(a.metrics.size() == std::size_t(cfg.align.epochs));

    const cli::RunManifest m = cli::read_manifest(a.manifest_path);
    CHECK(m.command == "train");
    CHECK(m.complete);
    check_artifacts_cover_dir(m, dir / "r1", a.manifest_path);
  }

  SUBCASE("the command is the library loop plus plumbing") {
    const auto out =
        cli::cmd_train(cfg, gen.dataset_path, pre.checkpoint_path, (dir / "lib").string(), true);
    const wk::Dataset ds = wk::load_dataset(gen.dataset_path);
    nk::Rng model_init(nk::derive_seed(cfg.align.seed, 11));
    rcsl::policy::PolicyModel model(cli::policy_config(cfg, ds), model_init);
    rcsl::critic::CriticPair critic =
        rcsl::critic::CriticPair::load(pre.checkpoint_path, cli::critic_config(cfg, ds));
    rcsl::trainer::Trainer t(model, critic, ds, cfg.align);
    const auto rows = t.run();
    CHECK(rcsl::trainer::metrics_csv(rows) == read_file(out.metrics_path));
    const std::string ref = (dir / "lib-ref.ckpt").string();
    model.save(ref);
    CHECK(read_file(ref) == read_file(out.model_path));
  }

  SUBCASE("interval checkpoints are written, loadable, and listed") {
    cli::RunConfig ci = cfg;
    ci.checkpoint_interval = 1;  // epochs = 2: one mid-run pair, then the final
    const auto out =
        cli::cmd_train(ci, gen.dataset_path, pre.checkpoint_path, (dir / "ck").string(), true);
    REQUIRE(out.interval_checkpoints.size() == 2);
    for (const auto& p : out.interval_checkpoints) CHECK(fs::exists(p));
    const wk::Dataset ds = wk::load_dataset(gen.dataset_path);
    CHECK_NOTHROW(rcsl::policy::PolicyModel::load(out.interval_checkpoints[0]));
    CHECK_NOTHROW(
        rcsl::critic::CriticPair::load(out.interval_checkpoints[1], cli::critic_config(ci, ds)));
    const cli::RunManifest m = cli::read_manifest(out.manifest_path);
    check_artifacts_cover_dir(m, dir / "ck", out.manifest_path);
  }

  SUBCASE("a blown-up run leaves a manifest with the complete flag down") {
    cli::RunConfig bomb = cfg;
    bomb.align.actor_adam.lr = 1e18;  // guarantees a non-finite loss in a few steps
    bomb.align.epochs = 1;
    bomb.align.steps_per_epoch = 10;
    const std::string out = (dir / "bomb").string();
    CHECK_THROWS_AS(
        (void)cli::cmd_train(bomb, gen.dataset_path, pre.checkpoint_path, out, true),
        RuntimeError);
    const cli::RunManifest m = cli::read_manifest(out + "/run.manifest.json");
    CHECK(!m.complete);
    CHECK(m.finished_at.empty());
  }

  SUBCASE("an empty critic path starts from a fresh critic") {
    cli::RunConfig quick = cfg;
    quick.align.epochs = 1;
    quick.align.steps_per_epoch = 2;
    const auto out = cli::cmd_train(quick, gen.dataset_path, "", (dir / "fresh").string(), true);
    CHECK(fs::exists(out.critic_path));
  }

  SUBCASE("validation happens before the output directory appears") {
    cli::RunConfig bad = cfg;
    bad.align.gamma = 0.0;
    const std::string out = (dir / "never").string();
    CHECK_THROWS_AS((void)cli::cmd_train(bad, gen.dataset_path, pre.checkpoint_path, out, true),
                    ValidationError);
    CHECK(!fs::exists(out));
  }
}

TEST_CASE("eval-align: reports match the sweep library and repeat bit for bit") {
  const Staged s = stage("eval");

  SUBCASE("single explicit target, m is the absolute gap") {
    cli::RunConfig cfg = s.cfg;
    cfg.eval_target_list = {1.0};
    cfg.eval_rollouts = 3;
    const auto out =
        cli::cmd_eval_align(cfg, s.model, "", {}, (s.dir / "e1").string(), true);
    REQUIRE(out.reports.size() == 1);
    const ek::AlignmentReport& r = out.reports[0];
    CHECK(r.seed == cfg.align.seed);
    CHECK(r.targets == std::vector<double>{1.0});
    CHECK(r.m == std::fabs(r.means[0] - 1.0));
    REQUIRE(out.report_paths.size() == 2);
    const ek::AlignmentReport parsed = ek::parse_report_rows(read_file(out.report_paths[0]));
    CHECK(parsed.means == r.means);
    CHECK(contains(read_file(out.report_paths[1]), "conditioning sweep"));

    // The command is the library sweep on a loaded model.
    const rcsl::policy::PolicyModel model = rcsl::policy::PolicyModel::load(s.model);
    ek::SweepConfig sc;
    sc.targets = {1.0};
    sc.rollouts_per_target = 3;
    sc.rtg_scale = cfg.align.rtg_scale;
    sc.seed = cfg.align.seed;
    const ek::AlignmentReport lib = ek::alignment_sweep(
        model, [&] { return wk::make_env(cfg.env_id); }, sc);
    CHECK(lib.means == r.means);
    CHECK(lib.m == r.m);
  }

  SUBCASE("identical invocations write identical files") {
    cli::RunConfig cfg = s.cfg;
    cfg.eval_target_list = {0.5, 1.5};
    cfg.eval_rollouts = 2;
    const auto a = cli::cmd_eval_align(cfg, s.model, "", {}, (s.dir / "a").string(), true);
    const auto b = cli::cmd_eval_align(cfg, s.model, "", {}, (s.dir / "b").string(), true);
    REQUIRE(a.report_paths.size() == b.report_paths.size());
    for (std::size_t i = 0; i < a.report_paths.size(); ++i) {
      CHECK(read_file(a.report_paths[i]) == read_file(b.report_paths[i]));
    }
  }

  SUBCASE("one sweep per requested seed") {
    cli::RunConfig cfg = s.cfg;
    cfg.eval_target_list = {1.0};
    cfg.eval_rollouts = 2;
    const auto out =
        cli::cmd_eval_align(cfg, s.model, "", {3, 9}, (s.dir / "seeds").string(), true);
    REQUIRE(out.reports.size() == 2);
    CHECK(out.reports[0].seed == 3);
    CHECK(out.reports[1].seed == 9);
    CHECK(out.report_paths.size() == 4);
    const cli::RunManifest m = cli::read_manifest(out.manifest_path);
    CHECK(m.command == "eval-align");
    check_artifacts_cover_dir(m, s.dir / "seeds", out.manifest_path);
    CHECK_THROWS_AS((void)cli::cmd_eval_align(cfg, s.model, "", {3, 3},
                                              (s.dir / "dup").string(), true),
                    ValidationError);
  }

  SUBCASE("grid sources: range, dataset, or nothing") {
    cli::RunConfig range = s.cfg;
    range.eval_target_min = 0.0;
    range.eval_target_max = 4.0;
    range.eval_targets = 5;
    range.eval_rollouts = 1;
    const auto out =
        cli::cmd_eval_align(range, s.model, "", {}, (s.dir / "range").string(), true);
    REQUIRE(out.reports[0].targets.size() == 5);
    CHECK(out.reports[0].targets.front() == 0.0);
    CHECK(out.reports[0].targets.back() == 4.0);
    CHECK(out.reports[0].targets[2] == 2.0);

    cli::RunConfig from_ds = s.cfg;
    from_ds.eval_targets = 3;
    from_ds.eval_rollouts = 1;
    const auto dsout =
        cli::cmd_eval_align(from_ds, s.model, s.ds, {}, (s.dir / "dsgrid").string(), true);
    const wk::Dataset ds = wk::load_dataset(s.ds);
    CHECK(dsout.reports[0].targets == ek::default_targets(ds, 3));

    CHECK_THROWS_AS(
        (void)cli::cmd_eval_align(from_ds, s.model, "", {}, (s.dir / "no-grid").string(), true),
        ValidationError);
  }

  SUBCASE("a model and environment that disagree are rejected") {
    cli::RunConfig wrong = s.cfg;
    wrong.env_id = "pointmass";
    wrong.eval_target_list = {1.0};
    CHECK_THROWS_AS(
        (void)cli::cmd_eval_align(wrong, s.model, "", {}, (s.dir / "wrong").string(), true),
        ValidationError);
  }
}

TEST_CASE("verify: oracle suites pass under the default caps") {
  const cli::VerifyOptions opt;

  SUBCASE("all suites, no failures") {
    const auto outcomes = cli::cmd_verify("all", opt, true);
    REQUIRE(outcomes.size() == 3);
    for (const auto& o : outcomes) {
      CAPTURE(o.suite);
      CHECK(o.cases > 0);
      CHECK(o.failures == 0);
    }
    CHECK(cli::all_passed(outcomes));
  }

  SUBCASE("single-suite selection and determinism") {
    const auto a = cli::cmd_verify("dynamics", opt, true);
    const auto b = cli::cmd_verify("dynamics", opt, true);
    REQUIRE(a.size() == 1);
    CHECK(a[0].suite == "dynamics");
    CHECK(a[0].worst_residual == b[0].worst_residual);
    CHECK(a[0].worst_monotone == b[0].worst_monotone);
    CHECK(a[0].worst_residual < 1e-10);
  }

  SUBCASE("bad requests are rejected") {
    CHECK_THROWS_AS((void)cli::cmd_verify("vibes", opt, true), ValidationError);
    cli::VerifyOptions bad = opt;
    bad.max_states = 0;
    CHECK_THROWS_AS((void)cli::cmd_verify("counting", bad, true), ValidationError);
    bad = opt;
    bad.gamma = 1.0;
    CHECK_THROWS_AS((void)cli::cmd_verify("dynamics", bad, true), ValidationError);
  }
}

TEST_CASE("binary: exit codes and manifest snapshots") {
  const fs::path dir = fresh_dir("tool");

  SUBCASE("exit 0 on success") {
    CHECK(run_tool("--version") == 0);
    CHECK(run_tool("--help") == 0);
    CHECK(run_tool("verify --suite greedy --greedy-instances 5 --quiet") == 0);
    CHECK(run_tool("presets") == 0);
  }

  SUBCASE("exit 1 on bad requests") {
    CHECK(run_tool("no-such-command") == 1);
    CHECK(run_tool("verify --no-such-flag") == 1);
    CHECK(run_tool("presets no-such-preset") == 1);
    const std::string out = (dir / "never.bin").string();
    CHECK(run_tool("gen-data --env bogus --out " + out) == 1);
    CHECK(!fs::exists(out));
  }

  SUBCASE("exit 2 on runtime failures") {
    CHECK(run_tool("pretrain --data " + (dir / "missing.bin").string() + " --out " +
                   (dir / "c.ckpt").string()) == 2);
  }

  SUBCASE("a canonical config file is snapshotted byte for byte") {
    const std::string cfg_path = (dir / "run.cfg").string();
    cli::RunConfig cfg = cli::preset("desk-default");
    write_file(cfg_path, cli::render_config(cfg));
    const std::string out = (dir / "ds.bin").string();
    CHECK(run_tool("gen-data --config " + cfg_path + " --out " + out + " --quiet") == 0);
    const cli::RunManifest m = cli::read_manifest(out + ".manifest.json");
    CHECK(m.config_text == read_file(cfg_path));
    CHECK(m.seed == cfg.align.seed);
  }

  SUBCASE("the seed flag overrides the config document") {
    const std::string cfg_path = (dir / "seeded.cfg").string();
    write_file(cfg_path, cli::render_config(cli::preset("desk-default")));
    const std::string out = (dir / "ds2.bin").string();
    CHECK(run_tool("gen-data --config " + cfg_path + " --seed 99 --out " + out + " --quiet") == 0);
    CHECK(cli::read_manifest(out + ".manifest.json").seed == 99);
  }

  SUBCASE("the presets command prints the shipped document") {
    const std::string out = (dir / "preset.txt").string();
    const std::string cmd = std::string(RCSL_TOOL) + " presets pointmass-align > " + out + " 2>/dev/null";
    const int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    CHECK(WEXITSTATUS(st) == 0);
    CHECK(read_file(out) == cli::preset_text("pointmass-align"));
  }
}
