#pragma once

// Conditioned sequence model over (rtg, state, action) token triples. Each
// window step contributes three tokens in that order; a stack of pre-norm
// attention blocks (optionally with a causal conv after the q/k/v
// projections) feeds two linear heads:
//
//   state prediction  s_hat[i]  reads the hidden row of the rtg token i,
//   action prediction a_hat[i]  reads the hidden row of the state token i.
//
// Padded window slots are embedded as exact zeros and masked out of
// attention, so outputs at valid steps never depend on padded content, and
// outputs at step i never depend on tokens of steps j > i (bit-for-bit).

#include <string>
#include <utility>

#include "rcsl/numkit/param_store.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tape.hpp"
#include "rcsl/numkit/tensor.hpp"
#include "rcsl/policy/context_window.hpp"

namespace rcsl::policy {

struct PolicyConfig {
  int state_dim = 0;
  int action_dim = 0;
  int embed_dim = 64;
  int blocks = 2;
  int heads = 2;
  int context = 8;
  int conv_window = 6;
  bool use_conv = true;
  int max_timestep = 4096;  // rows of the learned timestep table
  double dropout = 0.0;     // applied only when a forward pass gets an rng
  bool discrete = false;    // actions snap to one-hot codewords in act()

  void validate() const;
  bool operator==(const PolicyConfig&) const = default;
};

// Traced predictions for one window, both k rows.
struct PolicyOutput {
  numkit::Var pred_states;
  numkit::Var pred_actions;
};

class PolicyModel {
 public:
  PolicyModel(const PolicyConfig& cfg, numkit::Rng& rng);

  const PolicyConfig& config() const { return cfg_; }
  numkit::ParamStore& params() { return params_; }
  const numkit::ParamStore& params() const { return params_; }

  // Records the forward pass for one window on the caller's tape. bound must
  // come from numkit::bind(tape, params(), ...) of this model (or a store
  // with identical layout, e.g. a target copy). dropout_rng enables dropout
  // at the configured rate; null runs the deterministic inference path.
  PolicyOutput forward(numkit::Tape& tape, const numkit::BoundParams& bound,
                       const ContextWindow& w,
                       numkit::Rng* dropout_rng = nullptr) const;

  // Untraced forward: (predicted states, predicted actions) as plain tensors.
  std::pair<numkit::Tensor, numkit::Tensor> predict(const ContextWindow& w) const;

  // Raw action head output at the last valid slot.
  numkit::Tensor act_raw(const ContextWindow& w) const;

  // act_raw, then for discrete configs nearest-codeword snap over the
  // one-hot codebook, ties toward the lower action index.
  numkit::Tensor act(const ContextWindow& w) const;

  // params <- alpha * online.params + (1 - alpha) * params, elementwise.
  void polyak_from(const PolicyModel& online, double alpha);

  // Checkpoint at `path` plus a JSON architecture descriptor at
  // `path + ".arch"`; load rebuilds the model from the pair.
  void save(const std::string& path) const;
  static PolicyModel load(const std::string& path);

 private:
  PolicyConfig cfg_;
  numkit::ParamStore params_;
};

}  // namespace rcsl::policy
