#include "rcsl/policy/model.hpp"

#include <cmath>
#include <fstream>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcsl/error.hpp"
#include "rcsl/numkit/checkpoint.hpp"
#include "rcsl/numkit/init.hpp"
#include "rcsl/numkit/wire.hpp"

namespace rcsl::policy {

namespace nk = rcsl::numkit;

namespace {

std::string blk(int i, const char* suffix) {
  return "blk" + std::to_string(i) + "_" + suffix;
}

nk::Tensor ones(std::vector<std::size_t> shape) {
  nk::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.0;
  return t;
}

nk::ParamStore build_params(const PolicyConfig& cfg, nk::Rng& rng) {
  const auto d = static_cast<std::size_t>(cfg.embed_dim);
  const auto sd = static_cast<std::size_t>(cfg.state_dim);
  const auto ad = static_cast<std::size_t>(cfg.action_dim);
  const auto w = static_cast<std::size_t>(cfg.conv_window);
  nk::ParamStore p;

  p.add("embed_rtg_w", nk::uniform_fan_in(rng, {1, d}, 1));
  p.add("embed_rtg_b", nk::Tensor({d}));
  p.add("embed_state_w", nk::uniform_fan_in(rng, {sd, d}, sd));
  p.add("embed_state_b", nk::Tensor({d}));
  p.add("embed_action_w", nk::uniform_fan_in(rng, {ad, d}, ad));
  p.add("embed_action_b", nk::Tensor({d}));
  p.add("embed_time",
        nk::uniform_fan_in(rng, {static_cast<std::size_t>(cfg.max_timestep), d}, d));

  for (int l = 0; l < cfg.blocks; ++l) {
    p.add(blk(l, "ln1_g"), ones({d}));
    p.add(blk(l, "ln1_b"), nk::Tensor({d}));
    p.add(blk(l, "wq"), nk::uniform_fan_in(rng, {d, d}, d));
    p.add(blk(l, "bq"), nk::Tensor({d}));
    p.add(blk(l, "wk"), nk::uniform_fan_in(rng, {d, d}, d));
    p.add(blk(l, "bk"), nk::Tensor({d}));
    p.add(blk(l, "wv"), nk::uniform_fan_in(rng, {d, d}, d));
    p.add(blk(l, "bv"), nk::Tensor({d}));
    if (cfg.use_conv) {
      p.add(blk(l, "convq_k"), nk::uniform_fan_in(rng, {w, d, d}, w * d));
      p.add(blk(l, "convq_b"), nk::Tensor({d}));
      p.add(blk(l, "convk_k"), nk::uniform_fan_in(rng, {w, d, d}, w * d));
      p.add(blk(l, "convk_b"), nk::Tensor({d}));
      p.add(blk(l, "convv_k"), nk::uniform_fan_in(rng, {w, d, d}, w * d));
      p.add(blk(l, "convv_b"), nk::Tensor({d}));
    }
    p.add(blk(l, "wo"), nk::uniform_fan_in(rng, {d, d}, d));
    p.add(blk(l, "bo"), nk::Tensor({d}));
    p.add(blk(l, "ln2_g"), ones({d}));
    p.add(blk(l, "ln2_b"), nk::Tensor({d}));
    p.add(blk(l, "ffn_w1"), nk::uniform_fan_in(rng, {d, 4 * d}, d));
    p.add(blk(l, "ffn_b1"), nk::Tensor({4 * d}));
    p.add(blk(l, "ffn_w2"), nk::uniform_fan_in(rng, {4 * d, d}, 4 * d));
    p.add(blk(l, "ffn_b2"), nk::Tensor({d}));
  }

  if (cfg.blocks >= 1) {
    p.add("final_ln_g", ones({d}));
    p.add("final_ln_b", nk::Tensor({d}));
  }

  // Small heads keep early outputs near zero so training starts from the
  // supervised signal rather than head noise.
  p.add("head_state_w", nk::uniform_fan_in(rng, {d, sd}, d, 1e-3));
  p.add("head_state_b", nk::Tensor({sd}));
  p.add("head_action_w", nk::uniform_fan_in(rng, {d, ad}, d, 1e-3));
  p.add("head_action_b", nk::Tensor({ad}));
  return p;
}

// Additive attention mask over the 3k token rows. Allowed pairs score 0,
// banned pairs -1e30 (which underflows to an exact zero weight after the
// max-subtracted softmax). A key is visible when it is causally earlier or
// equal AND either belongs to a valid step or is the query itself; the self
// term keeps padded rows from softmaxing over an empty set.
nk::Tensor attention_mask(const ContextWindow& w) {
  const std::size_t T = static_cast<std::size_t>(w.k) * 3;
  nk::Tensor m({T, T});
  for (std::size_t q = 0; q < T; ++q) {
    for (std::size_t k = 0; k < T; ++k) {
      const bool causal = k <= q;
      const bool key_ok = w.valid[k / 3] != 0 || k == q;
      m.at2(q, k) = (causal && key_ok) ? 0.0 : -1e30;
    }
  }
  return m;
}

nlohmann::json descriptor_json(const PolicyConfig& cfg) {
  nlohmann::json j;
  j["state_dim"] = cfg.state_dim;
  j["action_dim"] = cfg.action_dim;
  j["embed_dim"] = cfg.embed_dim;
  j["blocks"] = cfg.blocks;
  j["heads"] = cfg.heads;
  j["context"] = cfg.context;
  j["conv_window"] = cfg.conv_window;
  j["use_conv"] = cfg.use_conv;
  j["max_timestep"] = cfg.max_timestep;
  j["dropout"] = cfg.dropout;
  j["discrete"] = cfg.discrete;
  return j;
}

PolicyConfig descriptor_parse(const nlohmann::json& j) {
  PolicyConfig cfg;
  try {
    cfg.state_dim = j.at("state_dim").get<int>();
    cfg.action_dim = j.at("action_dim").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.blocks = j.at("blocks").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.context = j.at("context").get<int>();
    cfg.conv_window = j.at("conv_window").get<int>();
    cfg.use_conv = j.at("use_conv").get<bool>();
    cfg.max_timestep = j.at("max_timestep").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.discrete = j.at("discrete").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("architecture descriptor: ") + e.what());
  }
  return cfg;
}

}  // namespace

void PolicyConfig::validate() const {
  if (state_dim < 1 || action_dim < 1) {
    throw ValidationError("model config: state and action widths must be positive");
  }
  if (embed_dim < 1) throw ValidationError("model config: embedding width must be positive");
  if (blocks < 0) throw ValidationError("model config: block count must be nonnegative");
  if (heads < 1 || embed_dim % heads != 0) {
    throw ValidationError("model config: head count must divide the embedding width");
  }
  if (context < 1) throw ValidationError("model config: context length must be positive");
  if (conv_window < 1) throw ValidationError("model config: conv window must be positive");
  if (max_timestep < 1) {
    throw ValidationError("model config: timestep table needs at least one row");
  }
  if (!(dropout >= 0.0) || dropout >= 1.0) {
    throw ValidationError("model config: dropout must lie in [0, 1)");
  }
}

PolicyModel::PolicyModel(const PolicyConfig& cfg, nk::Rng& rng)
    : cfg_((cfg.validate(), cfg)), params_(build_params(cfg, rng)) {}

PolicyOutput PolicyModel::forward(nk::Tape& tape, const nk::BoundParams& bound,
                                  const ContextWindow& w, nk::Rng* dropout_rng) const {
  // Structural checks only. Content of invalid slots is deliberately not
  // inspected: the mask has to neutralize whatever sits there.
  if (w.k != cfg_.context) {
    throw ValidationError("model forward: window length " + std::to_string(w.k) +
                          ", model expects " + std::to_string(cfg_.context));
  }
  if (w.states.cols() != static_cast<std::size_t>(cfg_.state_dim) ||
      w.actions.cols() != static_cast<std::size_t>(cfg_.action_dim)) {
    throw ValidationError("model forward: window carries " + w.states.shape_str() +
                          " states and " + w.actions.shape_str() +
                          " actions, model expects widths " + std::to_string(cfg_.state_dim) +
                          " and " + std::to_string(cfg_.action_dim));
  }
  const auto k = static_cast<std::size_t>(w.k);
  if (w.rtgs.size() != k || w.states.rows() != k || w.actions.rows() != k ||
      w.timesteps.size() != k || w.valid.size() != k) {
    throw ValidationError("model forward: window field lengths disagree");
  }
  std::vector<std::size_t> time_idx(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    if (!w.valid[i]) continue;
    if (w.timesteps[i] < 0 || w.timesteps[i] >= cfg_.max_timestep) {
      throw ValidationError("model forward: timestep " + std::to_string(w.timesteps[i]) +
                            " outside the learned table of " +
                            std::to_string(cfg_.max_timestep) + " rows");
    }
    time_idx[i] = static_cast<std::size_t>(w.timesteps[i]);
  }

  auto p = [&](const std::string& name) { return bound.var(params_, name); };
  const bool drop = dropout_rng != nullptr && cfg_.dropout > 0.0;

  nk::Tensor rtg_col({k, 1});
  nk::Tensor valid_col({k});
  for (std::size_t i = 0; i < k; ++i) {
    rtg_col.at2(i, 0) = w.rtgs[i];
    valid_col[i] = w.valid[i] ? 1.0 : 0.0;
  }

  nk::Var time_rows = nk::gather_rows(p("embed_time"), time_idx);
  nk::Var rtg_tok = nk::add(
      nk::add_rowvec(nk::matmul(tape.constant(rtg_col), p("embed_rtg_w")), p("embed_rtg_b")),
      time_rows);
  nk::Var state_tok = nk::add(
      nk::add_rowvec(nk::matmul(tape.constant(w.states), p("embed_state_w")),
                     p("embed_state_b")),
      time_rows);
  nk::Var act_tok = nk::add(
      nk::add_rowvec(nk::matmul(tape.constant(w.actions), p("embed_action_w")),
                     p("embed_action_b")),
      time_rows);

  // Force padded slots to exact zeros: downstream values at those rows then
  // depend on parameters only, never on whatever the window holds there.
  nk::Var vmask = tape.constant(valid_col);
  rtg_tok = nk::mul_colvec(rtg_tok, vmask);
  state_tok = nk::mul_colvec(state_tok, vmask);
  act_tok = nk::mul_colvec(act_tok, vmask);

  nk::Var x = nk::interleave_rows3(rtg_tok, state_tok, act_tok);
  if (drop) x = nk::dropout(x, cfg_.dropout, *dropout_rng);

  const int dh = cfg_.embed_dim / cfg_.heads;
  nk::Var mask = tape.constant(attention_mask(w));

  for (int l = 0; l < cfg_.blocks; ++l) {
    nk::Var a = nk::layer_norm(x, p(blk(l, "ln1_g")), p(blk(l, "ln1_b")));
    nk::Var q = nk::add_rowvec(nk::matmul(a, p(blk(l, "wq"))), p(blk(l, "bq")));
    nk::Var kk = nk::add_rowvec(nk::matmul(a, p(blk(l, "wk"))), p(blk(l, "bk")));
    nk::Var v = nk::add_rowvec(nk::matmul(a, p(blk(l, "wv"))), p(blk(l, "bv")));
    if (cfg_.use_conv) {
      q = nk::add_rowvec(nk::causal_conv1d(q, p(blk(l, "convq_k"))), p(blk(l, "convq_b")));
      kk = nk::add_rowvec(nk::causal_conv1d(kk, p(blk(l, "convk_k"))), p(blk(l, "convk_b")));
      v = nk::add_rowvec(nk::causal_conv1d(v, p(blk(l, "convv_k"))), p(blk(l, "convv_b")));
    }
    std::vector<nk::Var> head_outs;
    head_outs.reserve(static_cast<std::size_t>(cfg_.heads));
    for (int h = 0; h < cfg_.heads; ++h) {
      const auto c0 = static_cast<std::size_t>(h * dh);
      const auto c1 = static_cast<std::size_t>((h + 1) * dh);
      nk::Var scores = nk::scale(nk::matmul_nt(nk::slice_cols(q, c0, c1),
                                               nk::slice_cols(kk, c0, c1)),
                                 1.0 / std::sqrt(static_cast<double>(dh)));
      nk::Var weights = nk::softmax_rows(nk::add(scores, mask));
      head_outs.push_back(nk::matmul(weights, nk::slice_cols(v, c0, c1)));
    }
    nk::Var attn = nk::add_rowvec(nk::matmul(nk::concat_cols(head_outs), p(blk(l, "wo"))),
                                  p(blk(l, "bo")));
    if (drop) attn = nk::dropout(attn, cfg_.dropout, *dropout_rng);
    x = nk::add(x, attn);

    nk::Var f = nk::layer_norm(x, p(blk(l, "ln2_g")), p(blk(l, "ln2_b")));
    f = nk::add_rowvec(nk::matmul(f, p(blk(l, "ffn_w1"))), p(blk(l, "ffn_b1")));
    f = nk::gelu(f);
    f = nk::add_rowvec(nk::matmul(f, p(blk(l, "ffn_w2"))), p(blk(l, "ffn_b2")));
    if (drop) f = nk::dropout(f, cfg_.dropout, *dropout_rng);
    x = nk::add(x, f);
  }

  if (cfg_.blocks >= 1) x = nk::layer_norm(x, p("final_ln_g"), p("final_ln_b"));

  nk::Var state_hidden = nk::take_rows_stride3(x, 0);  // rtg-token rows
  nk::Var action_hidden = nk::take_rows_stride3(x, 1);  // state-token rows
  PolicyOutput out;
  out.pred_states = nk::add_rowvec(nk::matmul(state_hidden, p("head_state_w")),
                                   p("head_state_b"));
  out.pred_actions = nk::add_rowvec(nk::matmul(action_hidden, p("head_action_w")),
                                    p("head_action_b"));
  return out;
}

std::pair<nk::Tensor, nk::Tensor> PolicyModel::predict(const ContextWindow& w) const {
  nk::Tape tape;
  nk::BoundParams bound = nk::bind(tape, params_, /*trainable=*/false);
  PolicyOutput out = forward(tape, bound, w);
  return {tape.val(out.pred_states), tape.val(out.pred_actions)};
}

nk::Tensor PolicyModel::act_raw(const ContextWindow& w) const {
  const int last = w.last_valid();
  if (last < 0) throw ValidationError("act: window has no valid slot");
  nk::Tensor actions = predict(w).second;
  nk::Tensor out({actions.cols()});
  for (std::size_t c = 0; c < actions.cols(); ++c) {
    out[c] = actions.at2(static_cast<std::size_t>(last), c);
  }
  return out;
}

nk::Tensor PolicyModel::act(const ContextWindow& w) const {
  nk::Tensor raw = act_raw(w);
  if (!cfg_.discrete) return raw;
  // Nearest one-hot codeword; strict < keeps the lowest index on ties.
  int best = 0;
  double best_d = 0.0;
  for (int j = 0; j < cfg_.action_dim; ++j) {
    double d2 = 0.0;
    for (int c = 0; c < cfg_.action_dim; ++c) {
      const double diff = raw[static_cast<std::size_t>(c)] - (c == j ? 1.0 : 0.0);
      d2 += diff * diff;
    }
    if (j == 0 || d2 < best_d) {
      best = j;
      best_d = d2;
    }
  }
  nk::Tensor out({static_cast<std::size_t>(cfg_.action_dim)});
  out[static_cast<std::size_t>(best)] = 1.0;
  return out;
}

void PolicyModel::polyak_from(const PolicyModel& online, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ValidationError("model: target rate must lie in (0, 1]");
  }
  if (!params_.same_layout(online.params_)) {
    throw ValidationError("model: target update across different architectures");
  }
  for (std::size_t i = 0; i < params_.count(); ++i) {
    const nk::Tensor& src = online.params_.tensor(i);
    nk::Tensor& dst = params_.tensor(i);
    for (std::size_t j = 0; j < src.size(); ++j) {
      dst[j] = alpha * src[j] + (1.0 - alpha) * dst[j];
    }
  }
}

void PolicyModel::save(const std::string& path) const {
  nk::ParamStore meta;
  meta.add("descriptor",
           nk::Tensor({11}, {static_cast<double>(cfg_.state_dim),
                             static_cast<double>(cfg_.action_dim),
                             static_cast<double>(cfg_.embed_dim),
                             static_cast<double>(cfg_.blocks),
                             static_cast<double>(cfg_.heads),
                             static_cast<double>(cfg_.context),
                             static_cast<double>(cfg_.conv_window),
                             cfg_.use_conv ? 1.0 : 0.0,
                             static_cast<double>(cfg_.max_timestep), cfg_.dropout,
                             cfg_.discrete ? 1.0 : 0.0}));
  nk::save_checkpoint(path, {{"meta", &meta}, {"params", &params_}});
  nk::wire::spit(path + ".arch", descriptor_json(cfg_).dump(2) + "\n",
                 "architecture descriptor");
}

PolicyModel PolicyModel::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(nk::wire::slurp(path + ".arch", "architecture descriptor"));
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError("architecture descriptor " + path + ".arch: " + e.what());
  }
  PolicyConfig cfg = descriptor_parse(j);
  cfg.validate();
  nk::Rng scratch(0);
  PolicyModel model(cfg, scratch);
  nk::ParamStore meta;
  meta.add("descriptor", nk::Tensor({11}));
  nk::load_checkpoint(path, {{"meta", &meta}, {"params", &model.params_}});
  const nk::Tensor& d = meta.at("descriptor");
  const bool meta_ok = d[0] == cfg.state_dim && d[1] == cfg.action_dim &&
                       d[2] == cfg.embed_dim && d[3] == cfg.blocks && d[4] == cfg.heads &&
                       d[5] == cfg.context && d[6] == cfg.conv_window &&
                       d[7] == (cfg.use_conv ? 1.0 : 0.0) && d[8] == cfg.max_timestep &&
                       d[9] == cfg.dropout && d[10] == (cfg.discrete ? 1.0 : 0.0);
  if (!meta_ok) {
    throw ValidationError("model: checkpoint and architecture descriptor disagree");
  }
  return model;
}

}  // namespace rcsl::policy
