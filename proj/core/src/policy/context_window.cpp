#include "rcsl/policy/context_window.hpp"

#include <string>

#include "rcsl/error.hpp"

namespace rcsl::policy {

namespace nk = rcsl::numkit;

ContextWindow ContextWindow::blank(int k, int obs_dim, int act_dim) {
  ContextWindow w;
  w.k = k;
  const auto ku = static_cast<std::size_t>(k);
  w.rtgs = nk::Tensor({ku});
  w.states = nk::Tensor({ku, static_cast<std::size_t>(obs_dim)});
  w.actions = nk::Tensor({ku, static_cast<std::size_t>(act_dim)});
  w.timesteps.assign(ku, 0);
  w.valid.assign(ku, 0);
  w.rewards = nk::Tensor({ku});
  return w;
}

int ContextWindow::first_valid() const {
  for (int i = 0; i < k; ++i)
    if (valid[static_cast<std::size_t>(i)]) return i;
  return k;
}

int ContextWindow::last_valid() const {
  for (int i = k; i-- > 0;)
    if (valid[static_cast<std::size_t>(i)]) return i;
  return -1;
}

void ContextWindow::validate() const {
  const auto ku = static_cast<std::size_t>(k);
  if (k <= 0) throw ValidationError("context window: length must be positive");
  if (rtgs.size() != ku || rewards.size() != ku || timesteps.size() != ku || valid.size() != ku ||
      states.rows() != ku || actions.rows() != ku) {
    throw ValidationError("context window: sequence lengths disagree");
  }
  int prev_t = -1;
  bool seen_valid = false;
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (valid[iu]) {
      seen_valid = true;
      if (timesteps[iu] <= prev_t) {
        throw ValidationError("context window: timesteps not strictly increasing at slot " +
                              std::to_string(i));
      }
      prev_t = timesteps[iu];
      continue;
    }
    if (seen_valid) {
      throw ValidationError("context window: padding must be contiguous on the left (slot " +
                            std::to_string(i) + ")");
    }
    bool zeros = rtgs[iu] == 0.0 && rewards[iu] == 0.0 && timesteps[iu] == 0;
    for (std::size_t c = 0; c < states.cols() && zeros; ++c) zeros = states.at2(iu, c) == 0.0;
    for (std::size_t c = 0; c < actions.cols() && zeros; ++c) zeros = actions.at2(iu, c) == 0.0;
    if (!zeros) {
      throw ValidationError("context window: padded slot " + std::to_string(i) + " is not zeroed");
    }
  }
}

ContextWindow shift_rtg(const ContextWindow& w, double g) {
  ContextWindow out = w;
  for (int i = 0; i < w.k; ++i) {
    if (w.valid[static_cast<std::size_t>(i)]) out.rtgs[static_cast<std::size_t>(i)] += g;
  }
  return out;
}

}  // namespace rcsl::policy
