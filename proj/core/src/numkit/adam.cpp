#include "rcsl/numkit/adam.hpp"

#include <cmath>

#include "rcsl/error.hpp"

namespace rcsl::numkit {

Adam::Adam(AdamConfig cfg, const ParamStore& store) : cfg_(cfg) {
  if (cfg_.lr <= 0.0) throw ValidationError("adam: learning rate must be positive");
  if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0) {
    throw ValidationError("adam: betas must lie in [0, 1)");
  }
  m_ = zero_grads_like(store);
  v_ = zero_grads_like(store);
}

void Adam::step(ParamStore& params, const std::vector<Tensor>& grads) {
  if (grads.size() != m_.size() || params.count() != m_.size()) {
    throw ValidationError("adam: gradient layout does not match optimizer state");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    Tensor& p = params.tensor(i);
    const Tensor& g = grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    if (!p.same_shape(g)) throw ValidationError("adam: gradient shape mismatch at index " + std::to_string(i));
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace rcsl::numkit
