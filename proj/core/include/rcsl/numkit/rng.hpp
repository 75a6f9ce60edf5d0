#pragma once

#include <cstdint>
#include <random>

namespace rcsl::numkit {

// splitmix64 step; used to derive independent child seeds so that parallel
// workers (episodes, rollouts, batch slots) get decorrelated streams that
// depend only on (root seed, logical index), never on scheduling.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Deterministic RNG with explicit distributions. Gaussian draws go through
// our own Box-Muller so the stream does not depend on the standard library's
// unspecified normal_distribution algorithm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : seed_(seed), gen_(mix64(seed ^ 0x9e3779b97f4a7c15ull)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Child stream keyed by (this rng's seed, stream id); independent of how
  // many values the parent has produced.
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rcsl::numkit
