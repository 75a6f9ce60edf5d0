#include "rcsl/critic/critic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcsl/error.hpp"
#include "rcsl/numkit/checkpoint.hpp"
#include "rcsl/numkit/init.hpp"

namespace rcsl::critic {

namespace nk = rcsl::numkit;

namespace {

// Layer sizes of one net: in -> hidden -> hidden -> hidden -> 1.
constexpr int kHiddenLayers = 3;

nk::ParamStore fresh_net(const CriticConfig& cfg, nk::Rng& rng) {
  nk::ParamStore store;
  int fan_in = cfg.state_dim + cfg.action_dim;
  for (int l = 1; l <= kHiddenLayers; ++l) {
    store.add("w" + std::to_string(l),
              nk::uniform_fan_in(rng, {static_cast<std::size_t>(fan_in),
                                       static_cast<std::size_t>(cfg.hidden)},
                                 fan_in));
    store.add("b" + std::to_string(l), nk::Tensor({static_cast<std::size_t>(cfg.hidden)}));
    fan_in = cfg.hidden;
  }
  store.add("w4", nk::uniform_fan_in(rng, {static_cast<std::size_t>(fan_in), 1}, fan_in));
  store.add("b4", nk::Tensor({1}));
  return store;
}

// Non-tape forward pass over a batch.
nk::Tensor plain_forward(const nk::ParamStore& net, const nk::Tensor& states,
                         const nk::Tensor& actions) {
  const std::size_t n = states.rows();
  nk::Tensor x({n, states.cols() + actions.cols()});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < states.cols(); ++c) x.at2(i, c) = states.at2(i, c);
    for (std::size_t c = 0; c < actions.cols(); ++c)
      x.at2(i, states.cols() + c) = actions.at2(i, c);
  }
  for (int l = 1; l <= kHiddenLayers + 1; ++l) {
    const nk::Tensor& w = net.at("w" + std::to_string(l));
    const nk::Tensor& b = net.at("b" + std::to_string(l));
    nk::Tensor y({n, w.cols()});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < w.cols(); ++o) {
        double acc = b[o];
        for (std::size_t c = 0; c < w.rows(); ++c) acc += x.at2(i, c) * w.at2(c, o);
        if (l <= kHiddenLayers) acc = 0.5 * acc * (1.0 + std::erf(acc / std::sqrt(2.0)));
        y.at2(i, o) = acc;
      }
    }
    x = std::move(y);
  }
  nk::Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = x.at2(i, 0);
  return out;
}

void check_dims(const CriticConfig& cfg, const nk::Tensor& states, const nk::Tensor& actions) {
  if (states.rows() != actions.rows() ||
      states.cols() != static_cast<std::size_t>(cfg.state_dim) ||
      actions.cols() != static_cast<std::size_t>(cfg.action_dim)) {
    throw ValidationError("critic: input batch is " + states.shape_str() + " states with " +
                          actions.shape_str() + " actions, expected widths " +
                          std::to_string(cfg.state_dim) + " and " +
                          std::to_string(cfg.action_dim));
  }
}

}  // namespace

void CriticConfig::validate() const {
  if (state_dim < 1 || action_dim < 1) {
    throw ValidationError("critic config: state and action widths must be positive");
  }
  if (hidden < 1) throw ValidationError("critic config: hidden width must be positive");
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw ValidationError("critic config: discount must lie in (0, 1]");
  }
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ValidationError("critic config: target rate must lie in (0, 1]");
  }
}

Transitions Transitions::rows(const std::vector<std::size_t>& idx) const {
  Transitions out;
  const std::size_t n = idx.size();
  out.s = nk::Tensor({n, s.cols()});
  out.a = nk::Tensor({n, a.cols()});
  out.r = nk::Tensor({n});
  out.s2 = nk::Tensor({n, s2.cols()});
  out.a2 = nk::Tensor({n, a2.cols()});
  out.done.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = idx[i];
    if (j >= size()) throw ValidationError("transitions: row index out of range");
    for (std::size_t c = 0; c < s.cols(); ++c) out.s.at2(i, c) = s.at2(j, c);
    for (std::size_t c = 0; c < a.cols(); ++c) out.a.at2(i, c) = a.at2(j, c);
    out.r[i] = r[j];
    for (std::size_t c = 0; c < s2.cols(); ++c) out.s2.at2(i, c) = s2.at2(j, c);
    for (std::size_t c = 0; c < a2.cols(); ++c) out.a2.at2(i, c) = a2.at2(j, c);
    out.done[i] = done[j];
  }
  return out;
}

Transitions transitions_from(const worldkit::Dataset& ds) {
  ds.validate();
  std::size_t total = 0;
  for (const auto& t : ds.trajectories) total += t.length();
  const std::size_t obs_dim = ds.trajectories.front().states.cols();
  const std::size_t act_dim = ds.trajectories.front().actions.cols();
  Transitions out;
  out.s = nk::Tensor({total, obs_dim});
  out.a = nk::Tensor({total, act_dim});
  out.r = nk::Tensor({total});
  out.s2 = nk::Tensor({total, obs_dim});
  out.a2 = nk::Tensor({total, act_dim});
  out.done.assign(total, 0);
  std::size_t row = 0;
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t, ++row) {
      for (std::size_t c = 0; c < obs_dim; ++c) out.s.at2(row, c) = traj.states.at2(t, c);
      for (std::size_t c = 0; c < act_dim; ++c) out.a.at2(row, c) = traj.actions.at2(t, c);
      out.r[row] = traj.rewards[t];
      if (t + 1 < traj.length()) {
        for (std::size_t c = 0; c < obs_dim; ++c) out.s2.at2(row, c) = traj.states.at2(t + 1, c);
        for (std::size_t c = 0; c < act_dim; ++c) out.a2.at2(row, c) = traj.actions.at2(t + 1, c);
      } else {
        out.done[row] = 1;  // next rows stay zero and are never consulted
      }
    }
  }
  return out;
}

nk::Var critic_forward(nk::Tape& tape, const std::vector<nk::Var>& params, nk::Var states,
                       nk::Var actions) {
  if (params.size() != 2 * (kHiddenLayers + 1)) {
    throw ValidationError("critic forward: expected " +
                          std::to_string(2 * (kHiddenLayers + 1)) + " parameter tensors");
  }
  nk::Var x = nk::concat_cols({states, actions});
  for (int l = 0; l <= kHiddenLayers; ++l) {
    x = nk::add_rowvec(nk::matmul(x, params[static_cast<std::size_t>(2 * l)]),
                       params[static_cast<std::size_t>(2 * l + 1)]);
    if (l < kHiddenLayers) x = nk::gelu(x);
  }
  return x;
}

CriticPair::CriticPair(const CriticConfig& cfg, nk::Rng& rng)
    : cfg_((cfg.validate(), cfg)),
      online1_(fresh_net(cfg, rng)),
      online2_(fresh_net(cfg, rng)),
      target1_(online1_),
      target2_(online2_),
      opt1_(cfg.adam, online1_),
      opt2_(cfg.adam, online2_) {}

nk::ParamStore& CriticPair::online(int m) {
  if (m != 1 && m != 2) throw ValidationError("critic: net index must be 1 or 2");
  return m == 1 ? online1_ : online2_;
}
nk::ParamStore& CriticPair::target(int m) {
  if (m != 1 && m != 2) throw ValidationError("critic: net index must be 1 or 2");
  return m == 1 ? target1_ : target2_;
}
const nk::ParamStore& CriticPair::online(int m) const {
  return const_cast<CriticPair*>(this)->online(m);
}
const nk::ParamStore& CriticPair::target(int m) const {
  return const_cast<CriticPair*>(this)->target(m);
}

nk::Tensor CriticPair::q_value(const nk::Tensor& states, const nk::Tensor& actions,
                               QWhich which) const {
  check_dims(cfg_, states, actions);
  switch (which) {
    case QWhich::online1:
      return plain_forward(online1_, states, actions);
    case QWhich::online2:
      return plain_forward(online2_, states, actions);
    case QWhich::target1:
      return plain_forward(target1_, states, actions);
    case QWhich::target2:
      return plain_forward(target2_, states, actions);
    case QWhich::target_min: {
      nk::Tensor q1 = plain_forward(target1_, states, actions);
      const nk::Tensor q2 = plain_forward(target2_, states, actions);
      for (std::size_t i = 0; i < q1.size(); ++i) q1[i] = std::min(q1[i], q2[i]);
      return q1;
    }
  }
  throw ValidationError("critic: unknown head selector");
}

double CriticPair::pretrain_step(const Transitions& batch) {
  if (batch.size() == 0) throw ValidationError("critic pretrain: empty batch");
  check_dims(cfg_, batch.s2, batch.a2);

  // Bootstrap targets, computed outside any tape: they are constants.
  const nk::Tensor boot = q_value(batch.s2, batch.a2, QWhich::target_min);
  nk::Tensor y({batch.size()});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch.r[i] + (batch.done[i] ? 0.0 : cfg_.gamma * boot[i]);
  }
  return td_step(batch.s, batch.a, y, 1.0 / static_cast<double>(batch.size()));
}

double CriticPair::td_step(const nk::Tensor& states, const nk::Tensor& actions,
                           const nk::Tensor& y, double loss_scale, double* grad_norm) {
  const std::size_t n = states.rows();
  if (n == 0) throw ValidationError("critic regression: empty batch");
  check_dims(cfg_, states, actions);
  if (y.size() != n) throw ValidationError("critic regression: target length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) {
      throw RuntimeError("critic regression: non-finite target at batch row " +
                         std::to_string(i));
    }
  }
  nk::Tensor y_col({n, 1});
  for (std::size_t i = 0; i < n; ++i) y_col.at2(i, 0) = y[i];

  double total_loss = 0.0;
  double norm_sq = 0.0;
  nk::ParamStore* nets[2] = {&online1_, &online2_};
  nk::Adam* opts[2] = {&opt1_, &opt2_};
  for (int m = 0; m < 2; ++m) {
    nk::Tape tape;
    nk::BoundParams bound = nk::bind(tape, *nets[m], /*trainable=*/true);
    nk::Var q = critic_forward(tape, bound.vars, tape.constant(states),
                               tape.constant(actions));
    nk::Var d = nk::sub(q, tape.constant(y_col));
    nk::Var loss = nk::scale(nk::sum(nk::mul(d, d)), loss_scale);
    tape.backward(loss);
    std::vector<nk::Tensor> grads;
    nk::accumulate_grads(tape, bound, grads, 1.0);
    if (grad_norm != nullptr) {
      const double g = nk::grad_l2_norm(grads);
      norm_sq += g * g;
    }
    opts[m]->step(*nets[m], grads);
    total_loss += tape.val(loss)[0];
  }
  if (grad_norm != nullptr) *grad_norm = std::sqrt(norm_sq);
  return total_loss;
}

void CriticPair::polyak_update() { polyak_update(cfg_.alpha); }

void CriticPair::polyak_update(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ValidationError("critic: target rate must lie in (0, 1]");
  }
  const nk::ParamStore* from[2] = {&online1_, &online2_};
  nk::ParamStore* to[2] = {&target1_, &target2_};
  for (int m = 0; m < 2; ++m) {
    for (std::size_t i = 0; i < from[m]->count(); ++i) {
      const nk::Tensor& src = from[m]->tensor(i);
      nk::Tensor& dst = to[m]->tensor(i);
      for (std::size_t j = 0; j < src.size(); ++j) {
        dst[j] = alpha * src[j] + (1.0 - alpha) * dst[j];
      }
    }
  }
}

void CriticPair::save(const std::string& path) const {
  nk::ParamStore meta;
  meta.add("descriptor",
           nk::Tensor({5}, {static_cast<double>(cfg_.state_dim),
                            static_cast<double>(cfg_.action_dim),
                            static_cast<double>(cfg_.hidden), cfg_.gamma, cfg_.alpha}));
  nk::save_checkpoint(path, {{"meta", &meta},
                             {"online1", &online1_},
                             {"online2", &online2_},
                             {"target1", &target1_},
                             {"target2", &target2_}});
}

CriticPair CriticPair::load(const std::string& path, const CriticConfig& cfg) {
  cfg.validate();
  nk::Rng scratch(0);
  CriticPair critic(cfg, scratch);
  nk::ParamStore meta;
  meta.add("descriptor", nk::Tensor({5}));
  nk::load_checkpoint(path, {{"meta", &meta},
                             {"online1", &critic.online1_},
                             {"online2", &critic.online2_},
                             {"target1", &critic.target1_},
                             {"target2", &critic.target2_}});
  const nk::Tensor& d = meta.at("descriptor");
  if (d[0] != cfg.state_dim || d[1] != cfg.action_dim || d[2] != cfg.hidden ||
      d[3] != cfg.gamma || d[4] != cfg.alpha) {
    throw ValidationError("critic: checkpoint descriptor disagrees with the requested config");
  }
  return critic;
}

double run_pretrain(CriticPair& critic, const Transitions& all, int steps, int batch_size,
                    nk::Rng& rng) {
  if (steps < 1) throw ValidationError("critic pretrain: step count must be positive");
  if (batch_size < 1) throw ValidationError("critic pretrain: batch size must be positive");
  if (all.size() == 0) throw ValidationError("critic pretrain: no transitions");
  double loss = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(batch_size));
  for (int step = 0; step < steps; ++step) {
    for (auto& j : idx) j = rng.uniform_index(all.size());
    loss = critic.pretrain_step(all.rows(idx));
    critic.polyak_update();
  }
  return loss;
}

}  // namespace rcsl::critic
