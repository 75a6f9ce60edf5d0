#include "rcsl/trainer/losses.hpp"

#include <cmath>
#include <vector>

#include "rcsl/error.hpp"

namespace rcsl::trainer {

namespace nk = rcsl::numkit;

double sample_delta(double sigma_e, NoiseMode mode, nk::Rng& rng) {
  if (sigma_e < 0.0) throw ValidationError("rtg noise: stddev must be nonnegative");
  if (sigma_e == 0.0) return 0.0;
  const double draw = sigma_e * rng.normal();
  return mode == NoiseMode::half_normal ? std::fabs(draw) : draw;
}

nk::Var supervised_loss(nk::Tape& tape, const policy::PolicyOutput& out,
                        const policy::ContextWindow& w) {
  nk::Tensor valid_col({static_cast<std::size_t>(w.k)});
  for (int i = 0; i < w.k; ++i) {
    valid_col[static_cast<std::size_t>(i)] = w.valid[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  nk::Var vmask = tape.constant(valid_col);
  nk::Var ds = nk::mul_colvec(nk::sub(out.pred_states, tape.constant(w.states)), vmask);
  nk::Var da = nk::mul_colvec(nk::sub(out.pred_actions, tape.constant(w.actions)), vmask);
  return nk::add(nk::sum(nk::mul(ds, ds)), nk::sum(nk::mul(da, da)));
}

double indicator_weight(double delta, double q_shifted, double q_ref, IndicatorMode mode) {
  const double sgn = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
  const bool violated = sgn * (q_shifted - q_ref) < 0.0;
  if (mode == IndicatorMode::asymmetric) return violated ? 1.0 : 0.0;
  return violated ? 1.0 : -1.0;
}

double penalty_value(double q_shifted, double q_ref, PenaltyMode mode) {
  const double d = q_shifted - q_ref;
  return mode == PenaltyMode::absolute ? std::fabs(d) : d * d;
}

AlignTerms alignment_loss(nk::Tape& tape, const policy::PolicyModel& model,
                          const nk::BoundParams& actor_bound,
                          const policy::PolicyOutput& unshifted,
                          const critic::CriticPair& critic, const policy::ContextWindow& w,
                          double delta, const AlignConfig& cfg, nk::Rng* dropout_rng) {
  AlignTerms terms;
  const auto k = static_cast<std::size_t>(w.k);

  policy::ContextWindow shifted = policy::shift_rtg(w, delta);
  policy::PolicyOutput out_shifted = model.forward(tape, actor_bound, shifted, dropout_rng);

  // Both branches evaluate the same critic; its parameters enter the tape as
  // constants so actor gradients never leak into it.
  nk::BoundParams c1 = nk::bind(tape, critic.online(1), /*trainable=*/false);
  nk::Var states = tape.constant(w.states);
  auto q_of = [&](nk::Var actions) {
    nk::Var q1 = critic::critic_forward(tape, c1.vars, states, actions);
    if (!cfg.align_on_min) return q1;
    nk::BoundParams c2 = nk::bind(tape, critic.online(2), false);
    nk::Var q2 = critic::critic_forward(tape, c2.vars, states, actions);
    // min(a, b) = (a + b - |a - b|) / 2, exact elementwise.
    return nk::scale(nk::sub(nk::add(q1, q2), nk::absolute(nk::sub(q1, q2))), 0.5);
  };

  nk::Var q_shift = q_of(out_shifted.pred_actions);
  nk::Var q_ref = nk::stop_gradient(q_of(unshifted.pred_actions));

  // Indicator weights come from recorded values and are baked in as
  // constants: the ranking test itself is not differentiated through.
  const nk::Tensor& qs = tape.val(q_shift);
  const nk::Tensor& qr = tape.val(q_ref);
  nk::Tensor weights({k});
  for (std::size_t i = 0; i < k; ++i) {
    if (!w.valid[i]) continue;
    ++terms.considered;
    const double wgt = indicator_weight(delta, qs.at2(i, 0), qr.at2(i, 0),
                                        cfg.indicator_mode);
    if (wgt > 0.0) ++terms.fired;
    weights[i] = wgt;
  }

  nk::Var diff = nk::sub(q_shift, q_ref);
  nk::Var penalty = cfg.penalty_mode == PenaltyMode::absolute ? nk::absolute(diff)
                                                              : nk::mul(diff, diff);
  terms.loss = nk::sum(nk::mul_colvec(penalty, tape.constant(weights)));
  return terms;
}

}  // namespace rcsl::trainer
