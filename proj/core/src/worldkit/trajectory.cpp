#include "rcsl/worldkit/trajectory.hpp"

#include <cmath>

#include "rcsl/error.hpp"

namespace rcsl::worldkit {

std::vector<double> annotate_rtg(const std::vector<double>& rewards) {
  if (rewards.empty()) throw ValidationError("rtg annotation: empty reward sequence");
  std::vector<double> rtgs(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (!std::isfinite(rewards[i])) {
      throw ValidationError("rtg annotation: non-finite reward at step " + std::to_string(i));
    }
    acc += rewards[i];
    rtgs[i] = acc;
  }
  return rtgs;
}

void Trajectory::validate() const {
  const std::size_t T = rewards.size();
  if (T == 0) throw ValidationError("trajectory: empty");
  if (rtgs.size() != T || states.rows() != T || actions.rows() != T) {
    throw ValidationError("trajectory: sequence lengths disagree");
  }
  if (!states.all_finite() || !actions.all_finite()) {
    throw ValidationError("trajectory: non-finite state or action");
  }
  // Telescoping must hold exactly in both directions. The shipped
  // environments emit rewards on a dyadic grid, so the one-pass suffix sums
  // are exact and the subtraction form carries no rounding either.
  for (std::size_t t = 0; t + 1 < T; ++t) {
    if (rtgs[t] != rewards[t] + rtgs[t + 1] || rtgs[t] - rtgs[t + 1] != rewards[t]) {
      throw ValidationError("trajectory: rtg telescoping violated at step " + std::to_string(t));
    }
  }
  if (rtgs[T - 1] != rewards[T - 1]) {
    throw ValidationError("trajectory: final rtg does not equal final reward");
  }
}

}  // namespace rcsl::worldkit
