#pragma once

// Shared test helpers: finite-difference gradient oracle and random tensors.
// The FD side deliberately knows nothing about the tape internals; it only
// re-evaluates a black-box scalar function under point perturbations.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tensor.hpp"

namespace testsupport {

inline rcsl::numkit::Tensor random_tensor(rcsl::numkit::Rng& rng,
                                          std::vector<std::size_t> shape, double lo = -1.0,
                                          double hi = 1.0) {
  rcsl::numkit::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Central difference d f / d slot with a scale-aware step.
inline double central_diff(const std::function<double()>& f, double& slot) {
  const double orig = slot;
  const double h = 1e-5 * std::max(1.0, std::fabs(orig));
  slot = orig + h;
  const double fp = f();
  slot = orig - h;
  const double fm = f();
  slot = orig;
  return (fp - fm) / (2.0 * h);
}

// Same acceptance rule the gradient-fidelity criterion pins: relative error
// 1e-4 with an absolute floor of 1e-8.
inline bool grad_close(double got, double want, double rel = 1e-4, double floor_abs = 1e-8) {
  const double diff = std::fabs(got - want);
  const double scale = std::max(std::fabs(got), std::fabs(want));
  return diff <= std::max(floor_abs, rel * scale);
}

struct GradCheckResult {
  bool ok = true;
  std::string detail;
};

// Compares tape gradients against central differences for every scalar in
// every listed tensor. build_loss must re-run the full forward from the
// current tensor contents each call.
inline GradCheckResult check_grads(const std::function<double()>& loss,
                                   const std::vector<rcsl::numkit::Tensor*>& inputs,
                                   const std::function<std::vector<rcsl::numkit::Tensor>()>& tape_grads,
                                   double rel = 1e-4, double floor_abs = 1e-8) {
  GradCheckResult res;
  const std::vector<rcsl::numkit::Tensor> analytic = tape_grads();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i = 0; i < inputs[t]->size(); ++i) {
      const double numeric = central_diff(loss, (*inputs[t])[i]);
      if (!grad_close(analytic[t][i], numeric, rel, floor_abs)) {
        res.ok = false;
        res.detail = "tensor " + std::to_string(t) + " slot " + std::to_string(i) +
                     ": tape " + std::to_string(analytic[t][i]) + " vs numeric " +
                     std::to_string(numeric);
        return res;
      }
    }
  }
  return res;
}

}  // namespace testsupport
