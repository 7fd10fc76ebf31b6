// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "tensor/tensor.hpp"

namespace cgnmt {

using Rng = std::mt19937_64;

/// Deterministic sub-seed for a named stage, so every stage of a run can be
/// reproduced from the single top-level seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index = 0);

template <typename Real>
void fill_uniform(Tensor<Real>& t, Rng& rng, Real low, Real high) {
  std::uniform_real_distribution<double> dist{double(low), double(high)};
  for (auto& v : t.values()) v = Real(dist(rng));
}

template <typename Real>
Tensor<Real> random_uniform(Shape shape, Rng& rng, Real low = Real(-1), Real high = Real(1)) {
  Tensor<Real> t(std::move(shape));
  fill_uniform(t, rng, low, high);
  return t;
}

}  // namespace cgnmt
