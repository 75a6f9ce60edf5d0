#pragma once

// Named starting-point configurations. Three families:
//   desk-default / pointmass-align: runnable end to end on a workstation.
//   ablate-*: pointmass-align with exactly one knob changed, one preset per
//     loss-variant or training-variant switch, for controlled comparisons.
//   ref-*: hyperparameter documentation for the large locomotion and maze
//     benchmarks these methods are usually reported on. Those environments
//     are not bundled, so the ref presets exist to be read and copied from,
//     not run.

#include <string>
#include <vector>

#include "rcsl/cli/config_file.hpp"

namespace rcsl::cli {

std::vector<std::string> preset_names();

// Rejects unknown names with the list of known ones.
RunConfig preset(const std::string& name);

// The preset as a config document: a comment header plus
// render_config(preset(name)).
std::string preset_text(const std::string& name);

}  // namespace rcsl::cli
