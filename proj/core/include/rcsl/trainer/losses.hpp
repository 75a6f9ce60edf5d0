#pragma once

#include "rcsl/critic/critic.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tape.hpp"
#include "rcsl/policy/context_window.hpp"
#include "rcsl/policy/model.hpp"
#include "rcsl/trainer/config.hpp"

namespace rcsl::trainer {

// One noise draw per context window. sigma_e == 0 returns 0.0 without
// consuming the rng, so noise-free configs leave the stream untouched.
double sample_delta(double sigma_e, NoiseMode mode, numkit::Rng& rng);

// Squared state and action prediction error summed over valid slots.
numkit::Var supervised_loss(numkit::Tape& tape, const policy::PolicyOutput& out,
                            const policy::ContextWindow& w);

// Per-slot ranking pieces, separated out so tests can pin the arithmetic.
// The indicator looks at whether the critic's response to the rtg shift has
// the same direction as the shift itself; asymmetric mode only penalizes
// violations, symmetric mode also rewards widening a correct ordering.
double indicator_weight(double delta, double q_shifted, double q_ref, IndicatorMode mode);
double penalty_value(double q_shifted, double q_ref, PenaltyMode mode);

struct AlignTerms {
  numkit::Var loss;    // [1]; zero Var when no slot contributes
  int fired = 0;       // valid slots whose ordering was violated
  int considered = 0;  // valid slots examined
};

// Ranking penalty for one window on the caller's tape. `unshifted` must be
// the actor's forward of `w` on this same tape; the shifted branch is
// recorded here. Indicator weights are computed from recorded values and
// enter the tape as constants, and the reference critic value sits behind a
// gradient barrier, so gradients reach actor parameters only through the
// shifted branch. Critic parameters are bound as constants.
AlignTerms alignment_loss(numkit::Tape& tape, const policy::PolicyModel& model,
                          const numkit::BoundParams& actor_bound,
                          const policy::PolicyOutput& unshifted,
                          const critic::CriticPair& critic,
                          const policy::ContextWindow& w, double delta,
                          const AlignConfig& cfg,
                          numkit::Rng* dropout_rng = nullptr);

}  // namespace rcsl::trainer
