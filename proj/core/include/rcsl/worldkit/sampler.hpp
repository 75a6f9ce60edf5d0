#pragma once

#include "rcsl/numkit/rng.hpp"
#include "rcsl/policy/context_window.hpp"
#include "rcsl/worldkit/dataset.hpp"

namespace rcsl::worldkit {

// Draws a training window: uniform over all (trajectory, end-timestep)
// pairs, so longer episodes are proportionally more likely. The window
// covers steps end-k+1 .. end of the chosen trajectory; steps before the
// episode start become left padding. rtg slots are divided by the dataset's
// rtg_scale; rewards stay in raw units.
policy::ContextWindow sample_window(const Dataset& ds, numkit::Rng& rng, int k);

// Deterministic variant: window ending at step `end_t` of trajectory
// `traj_index`. sample_window is this plus the uniform draw.
policy::ContextWindow window_at(const Dataset& ds, std::size_t traj_index, std::size_t end_t,
                                int k);

}  // namespace rcsl::worldkit
