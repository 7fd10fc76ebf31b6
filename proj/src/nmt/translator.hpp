// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nmt/model.hpp"

namespace cgnmt::nmt {

struct BeamOptions {
  std::size_t beam = 5;
  std::size_t max_len = 100;  // generated tokens, EOS included
  std::size_t splits = 1;
  bool normalize_length = false;
};

struct Hypothesis {
  std::vector<int> tokens;  // without EOS
  double score = 0;         // summed log-probabilities, EOS included when finished
  bool finished = false;
};

/// Decoding against a fixed parameter snapshot. The target matrices are
/// computed once at construction; all methods are const and reentrant.
template <typename Real>
class Translator {
 public:
  explicit Translator(const Model<Real>& model);

  const Model<Real>& model() const noexcept { return model_; }
  const Tensor<Real>& input_matrix() const noexcept { return w_s_; }
  const Tensor<Real>& output_matrix() const noexcept { return w_o_; }

  Hypothesis beam_search(const std::vector<int>& src, const BeamOptions& options) const;
  /// Teacher-forced log-probability of `tgt` followed by EOS, using the decoding distribution.
  double score(const std::vector<int>& src, const std::vector<int>& tgt) const;
  /// Per-step log-probabilities along `prefix` (size prefix+1: the last entry is the next-token row).
  std::vector<std::vector<double>> prefix_log_probs(const std::vector<int>& src, const std::vector<int>& prefix) const;

 private:
  const Model<Real>& model_;
  Tensor<Real> w_s_;
  Tensor<Real> w_o_;
};

extern template class Translator<float>;
extern template class Translator<double>;

}  // namespace cgnmt::nmt
