#pragma once

#include <cstdint>
#include <string>

#include "rcsl/numkit/adam.hpp"

namespace rcsl::trainer {

enum class NoiseMode { gaussian, half_normal };
enum class IndicatorMode { asymmetric, symmetric };
enum class PenaltyMode { absolute, squared };

const char* to_string(NoiseMode m);
const char* to_string(IndicatorMode m);
const char* to_string(PenaltyMode m);
NoiseMode noise_mode_from(const std::string& s);
IndicatorMode indicator_mode_from(const std::string& s);
PenaltyMode penalty_mode_from(const std::string& s);

// Knobs of the co-training loop. sigma_e, delta_rtg and any rtg shift are in
// normalized rtg units (raw returns divided by rtg_scale).
struct AlignConfig {
  double sigma_e = 1.0;    // rtg noise stddev for the actor's shifted branch
  double lambda_e = 1.0;   // weight of the ranking penalty in the actor loss
  double delta_rtg = 1.0;  // rtg offset for the critic's target actions
  double gamma = 0.99;     // discount in the critic bootstrap
  double alpha = 0.005;    // target-network blend rate
  int context = 8;         // window length k
  int batch_size = 4;
  int epochs = 10;
  int steps_per_epoch = 100;
  double rtg_scale = 1.0;  // divisor from raw return units to rtg tokens
  NoiseMode noise_mode = NoiseMode::gaussian;
  IndicatorMode indicator_mode = IndicatorMode::asymmetric;
  PenaltyMode penalty_mode = PenaltyMode::absolute;
  bool freeze_critic = false;
  // Evaluate the ranking penalty on min(Q1, Q2) instead of Q1. Off by
  // default: the penalty definition reads a single critic.
  bool align_on_min = false;
  std::uint64_t seed = 0;
  numkit::AdamConfig actor_adam{1e-4, 0.9, 0.999, 1e-8};

  void validate() const;
  bool operator==(const AlignConfig&) const = default;
};

}  // namespace rcsl::trainer
