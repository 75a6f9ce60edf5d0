#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rcsl/worldkit/trajectory.hpp"

namespace rcsl::worldkit {

// An immutable collection of behavior-policy episodes plus the summary
// numbers training and evaluation key off. rtg_scale is fixed at generation
// time (the environment's default); window sampling divides rtg values by
// it. Powers of two keep that division exact in IEEE arithmetic.
struct Dataset {
  std::string env_id;
  std::string behavior_id;
  double rtg_scale = 1.0;
  std::vector<Trajectory> trajectories;
  double return_min = 0.0;
  double return_max = 0.0;
  double return_mean = 0.0;

  // Recomputes the summary statistics from the trajectories in index order.
  void recompute_stats();
  // Validates every trajectory and that the stored statistics equal a fresh
  // recomputation bit for bit.
  void validate() const;
};

// Rolls `episodes` behavior-policy episodes in the named environment. Each
// episode e runs on its own rng stream derived from (seed, e), so the result
// is a pure function of (env_id, episodes, seed) no matter how generation is
// scheduled. A non-finite state or reward aborts with the episode index.
Dataset generate(const std::string& env_id, int episodes, std::uint64_t seed);

// Same contract for a caller-supplied environment factory; the factory is
// invoked once per worker-visible episode and must yield independent
// instances of the same environment.
class Env;
Dataset generate_with(const std::function<std::unique_ptr<Env>()>& factory, int episodes,
                      std::uint64_t seed);

// Versioned checksummed binary container. Round trips are bit-exact on
// every field. Loading rejects wrong magic, unsupported versions, checksum
// mismatches, truncation, and trailing bytes, each with its own message.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace rcsl::worldkit
