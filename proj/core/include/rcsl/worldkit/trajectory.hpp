#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcsl/numkit/tensor.hpp"

namespace rcsl::worldkit {

// One episode. states row t is the observation BEFORE action t; rewards[t]
// is collected by action t. rtgs are undiscounted suffix sums of rewards,
// so rtgs[t] - rtgs[t+1] == rewards[t] exactly in 64-bit arithmetic.
struct Trajectory {
  numkit::Tensor states;   // T x obs_dim
  numkit::Tensor actions;  // T x act_dim
  std::vector<double> rewards;
  std::vector<double> rtgs;
  std::uint64_t seed = 0;
  std::string env_id;
  std::string behavior_id;

  std::size_t length() const { return rewards.size(); }
  double episode_return() const { return rtgs.empty() ? 0.0 : rtgs.front(); }

  // Checks the length agreements and the telescoping identity.
  void validate() const;
};

// Undiscounted suffix sums in one reverse pass. Rejects non-finite rewards
// and empty input.
std::vector<double> annotate_rtg(const std::vector<double>& rewards);

}  // namespace rcsl::worldkit
