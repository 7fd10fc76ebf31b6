// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nmt/model.hpp"
#include "tensor/random.hpp"

namespace cgnmt::nmt {

/// Target ids a batch needs in the support: its targets, EOS and BOS.
std::vector<int> batch_types(const Batch& batch);

/// Uniform sample of `sample_size` ids without replacement, unioned with `batch`.
SampledSupport sample_support(const std::vector<int>& batch, std::size_t sample_size, std::size_t vocab_size, Rng& rng);

struct SplitStats {
  std::size_t peak_workspace = 0;  // largest transient buffer, in elements
  std::size_t splits = 0;
};

/// states [B x D] . W_o^T computed over `num_splits` contiguous vocabulary blocks.
template <typename Real>
Tensor<Real> split_forward_logits(const Tensor<Real>& states, const Tensor<Real>& w_o, std::size_t num_splits,
                                  SplitStats* stats = nullptr);

/// Softmax of a single state over all rows of W_o, or only the support rows.
template <typename Real>
Tensor<Real> output_distribution(const Tensor<Real>& state, const Tensor<Real>& w_o, const SampledSupport* support = nullptr);

}  // namespace cgnmt::nmt
