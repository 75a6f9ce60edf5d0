#pragma once

#include <cmath>
#include <vector>

#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tensor.hpp"

namespace rcsl::numkit {

// Zero-mean uniform on [-damp/sqrt(fan_in), +damp/sqrt(fan_in)].
inline Tensor uniform_fan_in(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in,
                             double damp = 1.0) {
  Tensor t(std::move(shape));
  const double bound = damp / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace rcsl::numkit
