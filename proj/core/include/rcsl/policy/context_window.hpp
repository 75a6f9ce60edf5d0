#pragma once

#include <cstdint>
#include <vector>

#include "rcsl/numkit/tensor.hpp"

namespace rcsl::policy {

// A fixed-length slice of one trajectory, the model's unit of input. Slot
// k-1 is the most recent step; windows reaching past the episode start are
// left-padded with valid[i] == 0, and every padded slot holds zeros.
// rewards ride along for the critic's transition targets; they are zeros
// outside dataset sampling. ends_episode marks that the last valid slot is
// its trajectory's final step.
struct ContextWindow {
  int k = 0;
  numkit::Tensor rtgs;              // k, reward units divided by rtg_scale
  numkit::Tensor states;            // k x obs_dim
  numkit::Tensor actions;           // k x act_dim
  std::vector<int> timesteps;       // k, strictly increasing over valid slots
  std::vector<std::uint8_t> valid;  // k
  numkit::Tensor rewards;           // k, raw reward units
  bool ends_episode = false;

  // Zero-filled window with the given dimensions, all slots invalid.
  static ContextWindow blank(int k, int obs_dim, int act_dim);

  int first_valid() const;  // index of the first valid slot, k if none
  int last_valid() const;   // index of the last valid slot, -1 if none

  // Throws ValidationError on length disagreements, nonzero padded slots,
  // or non-increasing valid timesteps.
  void validate() const;
};

// Copy with every valid rtg slot incremented by g. Padded slots stay zero.
ContextWindow shift_rtg(const ContextWindow& w, double g);

}  // namespace rcsl::policy
