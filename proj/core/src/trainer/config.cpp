#include "rcsl/trainer/config.hpp"

#include "rcsl/error.hpp"

namespace rcsl::trainer {

const char* to_string(NoiseMode m) {
  return m == NoiseMode::gaussian ? "gaussian" : "half_normal";
}
const char* to_string(IndicatorMode m) {
  return m == IndicatorMode::asymmetric ? "asymmetric" : "symmetric";
}
const char* to_string(PenaltyMode m) {
  return m == PenaltyMode::absolute ? "absolute" : "squared";
}

NoiseMode noise_mode_from(const std::string& s) {
  if (s == "gaussian") return NoiseMode::gaussian;
  if (s == "half_normal") return NoiseMode::half_normal;
  throw ValidationError("noise_mode '" + s + "': expected gaussian or half_normal");
}
IndicatorMode indicator_mode_from(const std::string& s) {
  if (s == "asymmetric") return IndicatorMode::asymmetric;
  if (s == "symmetric") return IndicatorMode::symmetric;
  throw ValidationError("indicator_mode '" + s + "': expected asymmetric or symmetric");
}
PenaltyMode penalty_mode_from(const std::string& s) {
  if (s == "absolute") return PenaltyMode::absolute;
  if (s == "squared") return PenaltyMode::squared;
  throw ValidationError("penalty_mode '" + s + "': expected absolute or squared");
}

void AlignConfig::validate() const {
  if (!(sigma_e >= 0.0)) throw ValidationError("config: sigma_e must be nonnegative");
  if (!(lambda_e >= 0.0)) throw ValidationError("config: lambda_e must be nonnegative");
  if (!(delta_rtg >= 0.0)) throw ValidationError("config: delta_rtg must be nonnegative");
  if (!(gamma > 0.0) || gamma > 1.0) throw ValidationError("config: gamma must lie in (0, 1]");
  if (!(alpha > 0.0) || alpha > 1.0) throw ValidationError("config: alpha must lie in (0, 1]");
  if (context < 1) throw ValidationError("config: context length must be at least 1");
  if (batch_size < 1) throw ValidationError("config: batch size must be positive");
  if (epochs < 0) throw ValidationError("config: epoch count must be nonnegative");
  if (steps_per_epoch < 1) throw ValidationError("config: steps per epoch must be positive");
  if (!(rtg_scale > 0.0)) throw ValidationError("config: rtg_scale must be positive");
  if (!(actor_adam.lr > 0.0)) throw ValidationError("config: actor learning rate must be positive");
}

}  // namespace rcsl::trainer
