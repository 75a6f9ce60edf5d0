#pragma once

// Twin action-value networks with lagging target copies. The online nets
// learn by TD regression on behavior data; targets trail them through
// Polyak averaging and supply the bootstrap minimum.

#include <cstdint>
#include <string>
#include <vector>

#include "rcsl/numkit/adam.hpp"
#include "rcsl/numkit/param_store.hpp"
#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tape.hpp"
#include "rcsl/numkit/tensor.hpp"
#include "rcsl/worldkit/dataset.hpp"

namespace rcsl::critic {

struct CriticConfig {
  int state_dim = 0;
  int action_dim = 0;
  int hidden = 256;      // width of the three hidden layers
  double gamma = 0.99;   // bootstrap discount
  double alpha = 0.005;  // target update rate
  numkit::AdamConfig adam;

  void validate() const;
};

enum class QWhich { online1, online2, target1, target2, target_min };

// Batch of one-step transitions in array form. done marks episode-final
// steps; their next state/action rows are zeros and never consulted.
struct Transitions {
  numkit::Tensor s;   // N x state_dim
  numkit::Tensor a;   // N x action_dim
  numkit::Tensor r;   // N
  numkit::Tensor s2;  // N x state_dim
  numkit::Tensor a2;  // N x action_dim
  std::vector<std::uint8_t> done;

  std::size_t size() const { return done.size(); }
  Transitions rows(const std::vector<std::size_t>& idx) const;
};

// Every consecutive step pair of every trajectory, plus a terminal
// transition for each episode's last step.
Transitions transitions_from(const worldkit::Dataset& ds);

// Differentiable evaluation of one critic net: params must hold the store's
// eight entries in layout order. Returns an N x 1 column of values.
numkit::Var critic_forward(numkit::Tape& tape, const std::vector<numkit::Var>& params,
                           numkit::Var states, numkit::Var actions);

class CriticPair {
 public:
  // Fresh nets; targets start as bitwise copies of the online nets.
  CriticPair(const CriticConfig& cfg, numkit::Rng& rng);

  const CriticConfig& config() const { return cfg_; }
  numkit::ParamStore& online(int m);  // m in {1, 2}
  numkit::ParamStore& target(int m);
  const numkit::ParamStore& online(int m) const;
  const numkit::ParamStore& target(int m) const;

  // Plain forward pass, one value per input row.
  numkit::Tensor q_value(const numkit::Tensor& states, const numkit::Tensor& actions,
                         QWhich which) const;

  // One TD regression step on both online nets toward
  //   y = r + gamma * (1 - done) * min_m target_m(s', a')
  // with next actions taken from the batch. Returns the summed batch-mean
  // squared error of both nets. Does not touch the targets.
  double pretrain_step(const Transitions& batch);

  // One Adam step per online net toward externally supplied row targets y.
  // Each net's loss is loss_scale times its summed squared error; the return
  // value is both losses added. grad_norm, when non-null, receives the l2
  // norm over both nets' gradients. Rejects non-finite targets.
  double td_step(const numkit::Tensor& states, const numkit::Tensor& actions,
                 const numkit::Tensor& y, double loss_scale, double* grad_norm = nullptr);

  // target <- alpha * online + (1 - alpha) * target, both pairs.
  void polyak_update();
  void polyak_update(double alpha);

  void save(const std::string& path) const;
  // Restores all four nets; the file's descriptor must match cfg exactly.
  static CriticPair load(const std::string& path, const CriticConfig& cfg);

 private:
  CriticConfig cfg_;
  numkit::ParamStore online1_, online2_, target1_, target2_;
  numkit::Adam opt1_, opt2_;
};

// TD pretraining loop: `steps` uniform minibatches, a pretrain_step and a
// polyak_update each. Returns the final step's loss.
double run_pretrain(CriticPair& critic, const Transitions& all, int steps, int batch_size,
                    numkit::Rng& rng);

}  // namespace rcsl::critic
