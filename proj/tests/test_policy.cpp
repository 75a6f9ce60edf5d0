#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "rcsl/error.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/wire.hpp"
#include "rcsl/policy/context_window.hpp"
#include "rcsl/policy/model.hpp"
#include "rcsl/worldkit/dataset.hpp"
#include "rcsl/worldkit/sampler.hpp"

namespace nk = rcsl::numkit;
namespace wk = rcsl::worldkit;
namespace pl = rcsl::policy;

namespace {

bool same_bits(const nk::Tensor& a, const nk::Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

pl::PolicyConfig small_cfg(int sd, int ad) {
  pl::PolicyConfig cfg;
  cfg.state_dim = sd;
  cfg.action_dim = ad;
  cfg.embed_dim = 16;
  cfg.blocks = 2;
  cfg.heads = 2;
  cfg.context = 8;
  cfg.conv_window = 6;
  cfg.max_timestep = 64;
  return cfg;
}

// Fully valid window with random content, timesteps t0..t0+k-1.
pl::ContextWindow random_window(nk::Rng& rng, int k, int sd, int ad, int t0) {
  pl::ContextWindow w = pl::ContextWindow::blank(k, sd, ad);
  for (int i = 0; i < k; ++i) {
    w.valid[static_cast<std::size_t>(i)] = 1;
    w.timesteps[static_cast<std::size_t>(i)] = t0 + i;
    w.rtgs[static_cast<std::size_t>(i)] = rng.uniform(0.0, 3.0);
    w.rewards[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
    for (int c = 0; c < sd; ++c) {
      w.states.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) =
          rng.uniform(-1.0, 1.0);
    }
    for (int c = 0; c < ad; ++c) {
      w.actions.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) =
          rng.uniform(-1.0, 1.0);
    }
  }
  return w;
}

}  // namespace

TEST_CASE("rtg shift moves valid slots only and round trips on the reward grid") {
  wk::Dataset ds = wk::generate("pointmass", 3, 404);
  nk::Rng rng(7);

  SUBCASE("zero shift is the identity") {
    pl::ContextWindow w = wk::sample_window(ds, rng, 8);
    pl::ContextWindow s = pl::shift_rtg(w, 0.0);
    CHECK(same_bits(w.rtgs, s.rtgs));
    CHECK(same_bits(w.states, s.states));
    CHECK(same_bits(w.actions, s.actions));
    CHECK(w.timesteps == s.timesteps);
    CHECK(w.valid == s.valid);
    CHECK(w.ends_episode == s.ends_episode);
  }

  SUBCASE("shift adds to every valid slot") {
    pl::ContextWindow w = pl::ContextWindow::blank(3, 1, 1);
    w.valid = {1, 1, 1};
    w.timesteps = {0, 1, 2};
    w.rtgs = nk::Tensor({3}, {5.0, 3.0, 1.0});
    pl::ContextWindow s = pl::shift_rtg(w, 2.0);
    CHECK(s.rtgs[0] == 7.0);
    CHECK(s.rtgs[1] == 5.0);
    CHECK(s.rtgs[2] == 3.0);
    // Everything else untouched.
    CHECK(same_bits(w.states, s.states));
    CHECK(w.timesteps == s.timesteps);
  }

  SUBCASE("padded slots stay zero under shift") {
    pl::ContextWindow w = wk::window_at(ds, 0, 2, 8);  // left padding present
    REQUIRE(w.first_valid() > 0);
    pl::ContextWindow s = pl::shift_rtg(w, 1.5);
    for (int i = 0; i < w.first_valid(); ++i) {
      CHECK(s.rtgs[static_cast<std::size_t>(i)] == 0.0);
    }
    for (int i = w.first_valid(); i < 8; ++i) {
      CHECK(s.rtgs[static_cast<std::size_t>(i)] ==
            w.rtgs[static_cast<std::size_t>(i)] + 1.5);
    }
  }

  SUBCASE("round trip is exact for grid-aligned shifts") {
    // Rewards are dyadic and rtg_scale is a power of two, so normalized
    // rtgs sit on a dyadic grid; shifting by grid-aligned amounts and back
    // cancels exactly in double arithmetic.
    for (int trial = 0; trial < 50; ++trial) {
      pl::ContextWindow w = wk::sample_window(ds, rng, 8);
      const double g =
          std::ldexp(std::nearbyint(std::ldexp(rng.uniform(-4.0, 4.0), 20)), -20);
      pl::ContextWindow back = pl::shift_rtg(pl::shift_rtg(w, g), -g);
      CHECK(same_bits(w.rtgs, back.rtgs));
    }
  }
}

TEST_CASE("identical inputs produce bit-identical predictions") {
  nk::Rng rng(11);
  pl::PolicyModel model(small_cfg(3, 2), rng);
  pl::ContextWindow w = random_window(rng, 8, 3, 2, 4);
  auto [s1, a1] = model.predict(w);
  auto [s2, a2] = model.predict(w);
  CHECK(same_bits(s1, s2));
  CHECK(same_bits(a1, a2));
}

TEST_CASE("outputs are strictly causal in the step index") {
  nk::Rng rng(13);
  pl::PolicyModel model(small_cfg(3, 2), rng);
  pl::ContextWindow base = random_window(rng, 8, 3, 2, 0);
  auto [s0, a0] = model.predict(base);

  for (int j = 0; j < 8; ++j) {
    pl::ContextWindow mod = base;
    const auto js = static_cast<std::size_t>(j);
    mod.rtgs[js] += 11.0;
    for (int c = 0; c < 3; ++c) {
      mod.states.at2(js, static_cast<std::size_t>(c)) = rng.uniform(-9.0, 9.0);
    }
    for (int c = 0; c < 2; ++c) {
      mod.actions.at2(js, static_cast<std::size_t>(c)) = rng.uniform(-9.0, 9.0);
    }
    auto [s1, a1] = model.predict(mod);

    // Steps before j: exact equality, bit for bit.
    for (int i = 0; i < j; ++i) {
      for (int c = 0; c < 3; ++c) {
        CHECK(s1.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) ==
              s0.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)));
      }
      for (int c = 0; c < 2; ++c) {
        CHECK(a1.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) ==
              a0.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)));
      }
    }
    // The perturbed step itself reacts: rtg feeds the state prediction and
    // the state feeds the action prediction at the same index.
    bool moved = false;
    for (int c = 0; c < 3; ++c) {
      moved |= s1.at2(js, static_cast<std::size_t>(c)) != s0.at2(js, static_cast<std::size_t>(c));
    }
    for (int c = 0; c < 2; ++c) {
      moved |= a1.at2(js, static_cast<std::size_t>(c)) != a0.at2(js, static_cast<std::size_t>(c));
    }
    CHECK(moved);
  }
}

TEST_CASE("padded slot content never reaches valid outputs") {
  nk::Rng rng(17);
  pl::PolicyModel model(small_cfg(3, 2), rng);

  pl::ContextWindow clean = random_window(rng, 8, 3, 2, 0);
  for (int i = 0; i < 3; ++i) {
    const auto is = static_cast<std::size_t>(i);
    clean.valid[is] = 0;
    clean.rtgs[is] = 0.0;
    clean.rewards[is] = 0.0;
    clean.timesteps[is] = 0;
    for (int c = 0; c < 3; ++c) clean.states.at2(is, static_cast<std::size_t>(c)) = 0.0;
    for (int c = 0; c < 2; ++c) clean.actions.at2(is, static_cast<std::size_t>(c)) = 0.0;
  }
  for (int i = 3; i < 8; ++i) clean.timesteps[static_cast<std::size_t>(i)] = i - 3;
  auto [s0, a0] = model.predict(clean);

  pl::ContextWindow garbage = clean;
  for (int i = 0; i < 3; ++i) {
    const auto is = static_cast<std::size_t>(i);
    garbage.rtgs[is] = rng.uniform(-50.0, 50.0);
    garbage.timesteps[is] = 1 << 20;  // nonsense; must never be looked up
    for (int c = 0; c < 3; ++c) {
      garbage.states.at2(is, static_cast<std::size_t>(c)) = rng.uniform(-50.0, 50.0);
    }
    for (int c = 0; c < 2; ++c) {
      garbage.actions.at2(is, static_cast<std::size_t>(c)) = rng.uniform(-50.0, 50.0);
    }
  }
  auto [s1, a1] = model.predict(garbage);

  for (int i = 3; i < 8; ++i) {
    for (int c = 0; c < 3; ++c) {
      CHECK(s1.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) ==
            s0.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)));
    }
    for (int c = 0; c < 2; ++c) {
      CHECK(a1.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) ==
            a0.at2(static_cast<std::size_t>(i), static_cast<std::size_t>(c)));
    }
  }
}

TEST_CASE("depth zero reduces the action path to an affine map") {
  pl::PolicyConfig cfg = small_cfg(3, 2);
  cfg.blocks = 0;
  nk::Rng rng(19);
  pl::PolicyModel model(cfg, rng);
  pl::ContextWindow w = random_window(rng, 8, 3, 2, 2);
  auto [s_hat, a_hat] = model.predict(w);

  const nk::ParamStore& p = model.params();
  const nk::Tensor& ws = p.at("embed_state_w");
  const nk::Tensor& bs = p.at("embed_state_b");
  const nk::Tensor& tt = p.at("embed_time");
  const nk::Tensor& hw = p.at("head_action_w");
  const nk::Tensor& hb = p.at("head_action_b");

  for (int i = 0; i < 8; ++i) {
    const auto is = static_cast<std::size_t>(i);
    std::vector<double> tok(16, 0.0);
    for (std::size_t e = 0; e < 16; ++e) {
      double acc = bs[e] + tt.at2(static_cast<std::size_t>(w.timesteps[is]), e);
      for (std::size_t c = 0; c < 3; ++c) acc += w.states.at2(is, c) * ws.at2(c, e);
      tok[e] = acc;
    }
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = hb[o];
      for (std::size_t e = 0; e < 16; ++e) acc += tok[e] * hw.at2(e, o);
      CHECK(a_hat.at2(is, o) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("the rtg input reaches the action output") {
  nk::Rng rng(23);
  pl::PolicyModel model(small_cfg(2, 2), rng);
  pl::ContextWindow w = random_window(rng, 8, 2, 2, 0);
  nk::Tensor a0 = model.act_raw(w);
  nk::Tensor a2 = model.act_raw(pl::shift_rtg(w, 2.0));
  CHECK(!same_bits(a0, a2));
}

TEST_CASE("act slices the last valid step and snaps discrete outputs") {
  nk::Rng rng(29);

  SUBCASE("continuous action equals the last prediction row") {
    pl::PolicyModel model(small_cfg(2, 2), rng);
    pl::ContextWindow w = random_window(rng, 8, 2, 2, 0);
    w.valid[7] = 0;  // last valid is now slot 6
    nk::Tensor a = model.act(w);
    nk::Tensor rows = model.predict(w).second;
    CHECK(a[0] == rows.at2(6, 0));
    CHECK(a[1] == rows.at2(6, 1));
  }

  SUBCASE("discrete heads pick the nearest codeword, ties to the lowest") {
    pl::PolicyConfig cfg = small_cfg(2, 2);
    cfg.discrete = true;
    pl::PolicyModel model(cfg, rng);
    // Zero the action head weights so the head output is exactly its bias.
    nk::Tensor& hw = model.params().at("head_action_w");
    for (std::size_t i = 0; i < hw.size(); ++i) hw[i] = 0.0;
    nk::Tensor& hb = model.params().at("head_action_b");
    pl::ContextWindow w = random_window(rng, 8, 2, 2, 0);

    hb = nk::Tensor({2}, {0.9, 0.1});
    nk::Tensor a = model.act(w);
    CHECK(a[0] == 1.0);
    CHECK(a[1] == 0.0);

    hb = nk::Tensor({2}, {0.1, 0.9});
    a = model.act(w);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 1.0);

    hb = nk::Tensor({2}, {0.5, 0.5});
    a = model.act(w);
    CHECK(a[0] == 1.0);  // exact tie resolves to action 0
    CHECK(a[1] == 0.0);
  }

  SUBCASE("a window with no valid slot is rejected") {
    pl::PolicyModel model(small_cfg(2, 2), rng);
    pl::ContextWindow w = pl::ContextWindow::blank(8, 2, 2);
    CHECK_THROWS_AS(model.act(w), rcsl::ValidationError);
  }
}

TEST_CASE("conv ablation drops the conv parameters and still runs") {
  nk::Rng rng1(31);
  nk::Rng rng2(31);
  pl::PolicyConfig with = small_cfg(2, 2);
  pl::PolicyConfig without = with;
  without.use_conv = false;
  pl::PolicyModel m1(with, rng1);
  pl::PolicyModel m2(without, rng2);
  CHECK(m1.params().count() > m2.params().count());
  CHECK(m1.params().has("blk0_convq_k"));
  CHECK(!m2.params().has("blk0_convq_k"));

  nk::Rng wrng(5);
  pl::ContextWindow w = random_window(wrng, 8, 2, 2, 0);
  auto [s1, a1] = m1.predict(w);
  auto [s2, a2] = m2.predict(w);
  CHECK(s1.rows() == 8);
  CHECK(s2.rows() == 8);
  CHECK(!same_bits(a1, a2));
}

TEST_CASE("dropout is seeded and absent from the inference path") {
  pl::PolicyConfig cfg = small_cfg(2, 2);
  cfg.dropout = 0.25;
  nk::Rng rng(37);
  pl::PolicyModel model(cfg, rng);
  pl::ContextWindow w = random_window(rng, 8, 2, 2, 0);

  auto run = [&](std::uint64_t seed) {
    nk::Rng drng(seed);
    nk::Tape tape;
    nk::BoundParams bound = nk::bind(tape, model.params(), false);
    pl::PolicyOutput out = model.forward(tape, bound, w, &drng);
    return std::make_pair(tape.val(out.pred_states), tape.val(out.pred_actions));
  };

  auto [s1, a1] = run(100);
  auto [s2, a2] = run(100);
  CHECK(same_bits(s1, s2));
  CHECK(same_bits(a1, a2));

  auto [s3, a3] = run(101);
  CHECK((!same_bits(s1, s3) || !same_bits(a1, a3)));

  // No rng: deterministic inference, differs from the dropout runs.
  auto [si, ai] = model.predict(w);
  CHECK(!same_bits(ai, a1));

  // Rate zero with an rng supplied records no dropout at all.
  pl::PolicyConfig cfg0 = cfg;
  cfg0.dropout = 0.0;
  nk::Rng rng0(37);
  pl::PolicyModel model0(cfg0, rng0);
  CHECK(model0.params().bitwise_equal(model.params()));
  nk::Rng drng(55);
  nk::Tape tape;
  nk::BoundParams bound = nk::bind(tape, model0.params(), false);
  pl::PolicyOutput out = model0.forward(tape, bound, w, &drng);
  auto [sp, ap] = model0.predict(w);
  CHECK(same_bits(tape.val(out.pred_states), sp));
  CHECK(same_bits(tape.val(out.pred_actions), ap));
}

TEST_CASE("target blending matches the closed form") {
  nk::Rng rng(41);
  pl::PolicyModel online(small_cfg(2, 2), rng);
  pl::PolicyModel target(small_cfg(2, 2), rng);

  SUBCASE("rate one copies") {
    target.polyak_from(online, 1.0);
    CHECK(target.params().bitwise_equal(online.params()));
  }

  SUBCASE("fractional rate blends") {
    const double before = target.params().at("blk0_wq")[3];
    const double now = online.params().at("blk0_wq")[3];
    target.polyak_from(online, 0.005);
    CHECK(target.params().at("blk0_wq")[3] ==
          doctest::Approx(0.005 * now + 0.995 * before).epsilon(1e-15));
  }

  SUBCASE("architecture mismatch is rejected") {
    pl::PolicyConfig other = small_cfg(2, 2);
    other.use_conv = false;
    nk::Rng r2(1);
    pl::PolicyModel small(other, r2);
    CHECK_THROWS_AS(small.polyak_from(online, 0.5), rcsl::ValidationError);
    CHECK_THROWS_AS(target.polyak_from(online, 0.0), rcsl::ValidationError);
  }
}

TEST_CASE("checkpoints restore the model and its descriptor") {
  pl::PolicyConfig cfg = small_cfg(3, 2);
  cfg.discrete = true;
  nk::Rng rng(43);
  pl::PolicyModel model(cfg, rng);
  pl::ContextWindow w = random_window(rng, 8, 3, 2, 0);

  const std::string path = "test_policy_ckpt.bin";
  model.save(path);
  pl::PolicyModel back = pl::PolicyModel::load(path);
  CHECK(back.config() == cfg);
  CHECK(back.params().bitwise_equal(model.params()));
  auto [s0, a0] = model.predict(w);
  auto [s1, a1] = back.predict(w);
  CHECK(same_bits(s0, s1));
  CHECK(same_bits(a0, a1));
  CHECK(same_bits(model.act(w), back.act(w)));

  SUBCASE("descriptor tampering is caught") {
    // Claim a different context length than the checkpoint was built with.
    std::string arch = nk::wire::slurp(path + ".arch", "descriptor");
    const std::string from = "\"context\": 8";
    const std::string to = "\"context\": 4";
    arch.replace(arch.find(from), from.size(), to);
    nk::wire::spit(path + ".arch", arch, "descriptor");
    CHECK_THROWS(pl::PolicyModel::load(path));
  }

  SUBCASE("missing descriptor is reported") {
    std::remove((path + ".arch").c_str());
    CHECK_THROWS_AS(pl::PolicyModel::load(path), rcsl::RuntimeError);
  }
  std::remove(path.c_str());
  std::remove((path + ".arch").c_str());
}

TEST_CASE("configuration and window mismatches are rejected") {
  nk::Rng rng(47);

  pl::PolicyConfig bad = small_cfg(2, 2);
  bad.heads = 3;  // does not divide 16
  CHECK_THROWS_AS(pl::PolicyModel(bad, rng), rcsl::ValidationError);
  bad = small_cfg(0, 2);
  CHECK_THROWS_AS(pl::PolicyModel(bad, rng), rcsl::ValidationError);
  bad = small_cfg(2, 2);
  bad.dropout = 1.0;
  CHECK_THROWS_AS(pl::PolicyModel(bad, rng), rcsl::ValidationError);

  pl::PolicyModel model(small_cfg(2, 2), rng);
  pl::ContextWindow wrong_k = random_window(rng, 4, 2, 2, 0);
  CHECK_THROWS_AS(model.predict(wrong_k), rcsl::ValidationError);
  pl::ContextWindow wrong_dim = random_window(rng, 8, 3, 2, 0);
  CHECK_THROWS_AS(model.predict(wrong_dim), rcsl::ValidationError);

  pl::ContextWindow late = random_window(rng, 8, 2, 2, 60);  // timesteps 60..67
  CHECK_THROWS_AS(model.predict(late), rcsl::ValidationError);
}
