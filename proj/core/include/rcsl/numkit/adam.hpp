#pragma once

#include <cstdint>
#include <vector>

#include "rcsl/numkit/param_store.hpp"

namespace rcsl::numkit {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

// Adam with bias correction. Moments are kept in the order of the store the
// optimizer was built for; step() rejects a gradient vector of any other
// layout.
class Adam {
 public:
  Adam(AdamConfig cfg, const ParamStore& store);

  void step(ParamStore& params, const std::vector<Tensor>& grads);
  std::int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace rcsl::numkit
