// SPDX-License-Identifier: Apache-2.0
#include "nmt/softmax.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <numeric>

#include "subword/vocab.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::nmt {

std::vector<int> batch_types(const Batch& batch) {
  std::vector<int> ids{subword::kBos, subword::kEos};
  for (const auto& t : batch.tgt) ids.insert(ids.end(), t.begin(), t.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

SampledSupport sample_support(const std::vector<int>& batch, std::size_t sample_size, std::size_t vocab_size, Rng& rng) {
  if (sample_size > vocab_size)
    fail(ErrorCode::Config, "sample size " + std::to_string(sample_size) + " exceeds vocabulary of " + std::to_string(vocab_size));
  std::vector<int> all(vocab_size);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> drawn;
  drawn.reserve(sample_size);
  std::sample(all.begin(), all.end(), std::back_inserter(drawn), sample_size, rng);

  std::vector<std::uint8_t> in_batch(vocab_size, 0), in_support(vocab_size, 0);
  for (int id : batch) {
    if (id < 0 || std::size_t(id) >= vocab_size) fail(ErrorCode::Index, "batch type " + std::to_string(id) + " out of range");
    in_batch[std::size_t(id)] = in_support[std::size_t(id)] = 1;
  }
  for (int id : drawn) in_support[std::size_t(id)] = 1;
  SampledSupport s;
  for (std::size_t v = 0; v < vocab_size; ++v)
    if (in_support[v]) {
      s.ids.push_back(int(v));
      s.from_batch.push_back(in_batch[v]);
    }
  return s;
}

template <typename Real>
Tensor<Real> split_forward_logits(const Tensor<Real>& states, const Tensor<Real>& w_o, std::size_t num_splits, SplitStats* stats) {
  if (num_splits == 0) fail(ErrorCode::Config, "num_splits must be at least 1");
  if (states.rank() > 2 || w_o.rank() != 2 || states.cols() != w_o.cols())
    fail(ErrorCode::Dimension, "split_forward_logits: states " + shape_string(states.shape()) + " vs W_o " + shape_string(w_o.shape()));
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t B = states.rows(), V = w_o.rows(), D = w_o.cols();
  const std::size_t splits = std::min(num_splits, V);
  const std::size_t block = (V + splits - 1) / splits;
  // Accumulated in double and rounded once to Real.
  const Eigen::MatrixXd S = Eigen::Map<const Mat>(states.data(), Eigen::Index(B), Eigen::Index(D)).template cast<double>();
  Tensor<Real> out({B, V});
  Eigen::Map<Mat> O(out.data(), Eigen::Index(B), Eigen::Index(V));
  if (stats) *stats = SplitStats{};
  for (std::size_t begin = 0; begin < V; begin += block) {
    const std::size_t rows = std::min(block, V - begin);
    Eigen::Map<const Mat> W(w_o.data() + begin * D, Eigen::Index(rows), Eigen::Index(D));
    const Eigen::MatrixXd workspace = S * W.template cast<double>().transpose();
    if (stats) {
      stats->peak_workspace = std::max(stats->peak_workspace, std::size_t(workspace.size()));
      ++stats->splits;
    }
    O.middleCols(Eigen::Index(begin), Eigen::Index(rows)) = workspace.cast<Real>();
  }
  return out;
}

template <typename Real>
Tensor<Real> output_distribution(const Tensor<Real>& state, const Tensor<Real>& w_o, const SampledSupport* support) {
  auto row = state.reshaped({1, state.size()});
  if (!support) return softmax(split_forward_logits(row, w_o, 1)).reshaped({w_o.rows()});
  Tensor<Real> sub({support->ids.size(), w_o.cols()});
  for (std::size_t r = 0; r < support->ids.size(); ++r) {
    const int id = support->ids[r];
    if (id < 0 || std::size_t(id) >= w_o.rows()) fail(ErrorCode::Index, "support id " + std::to_string(id) + " out of range");
    std::copy_n(w_o.data() + std::size_t(id) * w_o.cols(), w_o.cols(), sub.data() + r * w_o.cols());
  }
  return softmax(split_forward_logits(row, sub, 1)).reshaped({sub.rows()});
}

template Tensor<float> split_forward_logits(const Tensor<float>&, const Tensor<float>&, std::size_t, SplitStats*);
template Tensor<double> split_forward_logits(const Tensor<double>&, const Tensor<double>&, std::size_t, SplitStats*);
template Tensor<float> output_distribution(const Tensor<float>&, const Tensor<float>&, const SampledSupport*);
template Tensor<double> output_distribution(const Tensor<double>&, const Tensor<double>&, const SampledSupport*);

}  // namespace cgnmt::nmt
