#include "rcsl/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "rcsl/error.hpp"
#include "rcsl/worldkit/sampler.hpp"

namespace rcsl::trainer {

namespace nk = rcsl::numkit;
namespace pl = rcsl::policy;

std::string metrics_csv(const std::vector<EpochRow>& rows) {
  std::string out =
      "epoch,steps,l_sl,l_align,l_q,indicator_fraction,actor_grad_norm,critic_grad_norm\n";
  char line[256];
  for (const EpochRow& r : rows) {
    std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.epoch, r.steps, r.l_sl, r.l_align, r.l_q, r.fire_fraction,
                  r.actor_grad_norm, r.critic_grad_norm);
    out += line;
  }
  return out;
}

Trainer::Trainer(pl::PolicyModel model, critic::CriticPair critic, worldkit::Dataset ds,
                 AlignConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      model_(std::move(model)),
      target_model_(model_),
      critic_(std::move(critic)),
      ds_(std::move(ds)),
      opt_actor_(cfg_.actor_adam, model_.params()),
      rng_(cfg_.seed) {
  ds_.validate();
  if (ds_.trajectories.empty()) throw ValidationError("trainer: dataset holds no episodes");
  if (model_.config().context != cfg_.context) {
    throw ValidationError("trainer: model context " +
                          std::to_string(model_.config().context) + " but config asks " +
                          std::to_string(cfg_.context));
  }
  if (ds_.rtg_scale != cfg_.rtg_scale) {
    throw ValidationError("trainer: dataset rtg scale disagrees with config");
  }
}

std::vector<pl::ContextWindow> Trainer::sample_batch() {
  std::vector<pl::ContextWindow> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int b = 0; b < cfg_.batch_size; ++b) {
    batch.push_back(worldkit::sample_window(ds_, rng_, cfg_.context));
  }
  return batch;
}

StepStats Trainer::critic_step(const std::vector<pl::ContextWindow>& batch) {
  StepStats stats;
  if (cfg_.freeze_critic) return stats;
  if (batch.empty()) throw ValidationError("critic step: empty batch");

  // Regression rows pooled over the batch: states and logged actions paired
  // with targets bootstrapped through the target critics at the target
  // policy's response to the rtg-shifted window.
  const auto sd = static_cast<std::size_t>(model_.config().state_dim);
  const auto ad = static_cast<std::size_t>(model_.config().action_dim);
  std::vector<double> row_s, row_a, row_r;
  std::vector<double> next_s, next_a;  // rows needing a bootstrap value
  std::vector<std::size_t> boot_of_row;  // index into the bootstrap block, or npos
  constexpr std::size_t kTerminal = static_cast<std::size_t>(-1);

  for (const pl::ContextWindow& w : batch) {
    const int fv = w.first_valid();
    const int lv = w.last_valid();
    if (lv < 0) throw ValidationError("critic step: window with no valid slot");
    nk::Tensor shifted_actions =
        target_model_.predict(pl::shift_rtg(w, cfg_.delta_rtg)).second;
    for (int i = fv; i <= lv; ++i) {
      const auto is = static_cast<std::size_t>(i);
      const bool terminal = (i == lv && w.ends_episode);
      if (i == lv && !terminal) continue;  // next step exists but is out of window
      for (std::size_t c = 0; c < sd; ++c) row_s.push_back(w.states.at2(is, c));
      for (std::size_t c = 0; c < ad; ++c) row_a.push_back(w.actions.at2(is, c));
      row_r.push_back(w.rewards[is]);
      if (terminal) {
        boot_of_row.push_back(kTerminal);
      } else {
        boot_of_row.push_back(next_s.size() / sd);
        for (std::size_t c = 0; c < sd; ++c) next_s.push_back(w.states.at2(is + 1, c));
        for (std::size_t c = 0; c < ad; ++c) {
          next_a.push_back(shifted_actions.at2(is + 1, c));
        }
      }
    }
  }

  const std::size_t n = row_r.size();
  if (n == 0) return stats;  // nothing regressable in this batch

  nk::Tensor boot_vals;
  if (!next_s.empty()) {
    const std::size_t m = next_s.size() / sd;
    nk::Tensor s2({m, sd}, std::move(next_s));
    nk::Tensor a2({m, ad}, std::move(next_a));
    boot_vals = critic_.q_value(s2, a2, critic::QWhich::target_min);
  }
  nk::Tensor s({n, sd}, std::move(row_s));
  nk::Tensor a({n, ad}, std::move(row_a));
  nk::Tensor y({n});
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = row_r[i];
    if (boot_of_row[i] != kTerminal) y[i] += cfg_.gamma * boot_vals[boot_of_row[i]];
  }

  stats.l_q = critic_.td_step(s, a, y, 1.0 / static_cast<double>(batch.size()),
                              &stats.critic_grad_norm);
  return stats;
}

StepStats Trainer::actor_step(const std::vector<pl::ContextWindow>& batch) {
  if (batch.empty()) throw ValidationError("actor step: empty batch");
  StepStats stats;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<nk::Tensor> grads;
  int fired = 0;
  int considered = 0;
  nk::Rng* drng = model_.config().dropout > 0.0 ? &rng_ : nullptr;

  for (const pl::ContextWindow& w : batch) {
    const double delta =
        cfg_.lambda_e > 0.0 ? sample_delta(cfg_.sigma_e, cfg_.noise_mode, rng_) : 0.0;

    nk::Tape tape;
    nk::BoundParams bound = nk::bind(tape, model_.params(), /*trainable=*/true);
    pl::PolicyOutput out = model_.forward(tape, bound, w, drng);
    nk::Var loss = supervised_loss(tape, out, w);
    const double sl_val = tape.val(loss)[0];
    double align_val = 0.0;

    if (cfg_.lambda_e > 0.0 && delta != 0.0) {
      AlignTerms terms =
          alignment_loss(tape, model_, bound, out, critic_, w, delta, cfg_, drng);
      align_val = tape.val(terms.loss)[0];
      fired += terms.fired;
      considered += terms.considered;
      loss = nk::add(loss, nk::scale(terms.loss, cfg_.lambda_e));
    }

    const double total = tape.val(loss)[0];
    if (!std::isfinite(total)) {
      throw RuntimeError("actor step: non-finite loss (supervised " +
                         std::to_string(sl_val) + ", ranking " + std::to_string(align_val) +
                         "); no update applied");
    }
    tape.backward(loss);
    nk::accumulate_grads(tape, bound, grads, inv_b);
    stats.l_sl += sl_val * inv_b;
    stats.l_align += align_val * inv_b;
  }

  stats.actor_grad_norm = nk::grad_l2_norm(grads);
  stats.fire_fraction =
      considered > 0 ? static_cast<double>(fired) / static_cast<double>(considered) : 0.0;
  opt_actor_.step(model_.params(), grads);
  return stats;
}

void Trainer::update_targets() {
  target_model_.polyak_from(model_, cfg_.alpha);
  if (!cfg_.freeze_critic) critic_.polyak_update(cfg_.alpha);
}

StepStats Trainer::step() {
  std::vector<pl::ContextWindow> batch = sample_batch();
  StepStats cs = critic_step(batch);
  StepStats as = actor_step(batch);
  update_targets();
  as.l_q = cs.l_q;
  as.critic_grad_norm = cs.critic_grad_norm;
  return as;
}

std::vector<EpochRow> Trainer::run() {
  std::vector<EpochRow> log;
  log.reserve(static_cast<std::size_t>(cfg_.epochs));
  for (int e = 0; e < cfg_.epochs; ++e) {
    EpochRow row;
    row.epoch = e;
    row.steps = cfg_.steps_per_epoch;
    for (int s = 0; s < cfg_.steps_per_epoch; ++s) {
      StepStats st = step();
      row.l_sl += st.l_sl;
      row.l_align += st.l_align;
      row.l_q += st.l_q;
      row.fire_fraction += st.fire_fraction;
      row.actor_grad_norm += st.actor_grad_norm;
      row.critic_grad_norm += st.critic_grad_norm;
    }
    const double inv = 1.0 / static_cast<double>(cfg_.steps_per_epoch);
    row.l_sl *= inv;
    row.l_align *= inv;
    row.l_q *= inv;
    row.fire_fraction *= inv;
    row.actor_grad_norm *= inv;
    row.critic_grad_norm *= inv;
    log.push_back(row);
  }
  return log;
}

TrainResult train(pl::PolicyModel model, critic::CriticPair critic, worldkit::Dataset ds,
                  const AlignConfig& cfg) {
  Trainer t(std::move(model), std::move(critic), std::move(ds), cfg);
  std::vector<EpochRow> metrics = t.run();
  return TrainResult{std::move(t.model()), std::move(t.critic()), std::move(metrics)};
}

}  // namespace rcsl::trainer
