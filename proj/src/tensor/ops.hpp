// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "tensor/tape.hpp"

namespace cgnmt {

enum class Activation { Tanh, Sigmoid, Relu };

// Differentiable primitives. Every op checks its shapes and throws
// Error(ErrorCode::Dimension) naming the offending shapes.

/// [m x k] . [k x n] -> [m x n]
template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);
/// a . b^T for a [m x k], b [n x k] -> [m x n]
template <typename Real>
Var<Real> matmul_nt(const Var<Real>& a, const Var<Real>& b);

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
/// a [m x n] + b [n] broadcast over rows.
template <typename Real>
Var<Real> add_bias(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> scale(const Var<Real>& a, Real factor);
/// 1 - a
template <typename Real>
Var<Real> one_minus(const Var<Real>& a);
template <typename Real>
Var<Real> sum(const Var<Real>& a);

template <typename Real>
Var<Real> pointwise(Activation fn, const Var<Real>& x);
template <typename Real>
Var<Real> vtanh(const Var<Real>& x) { return pointwise(Activation::Tanh, x); }
template <typename Real>
Var<Real> vsigmoid(const Var<Real>& x) { return pointwise(Activation::Sigmoid, x); }
template <typename Real>
Var<Real> vrelu(const Var<Real>& x) { return pointwise(Activation::Relu, x); }

template <typename Real>
Var<Real> concat_cols(const std::vector<Var<Real>>& parts);
template <typename Real>
Var<Real> slice_cols(const Var<Real>& a, std::size_t begin, std::size_t count);
template <typename Real>
Var<Real> concat_rows(const std::vector<Var<Real>>& parts);
template <typename Real>
Var<Real> reshape(const Var<Real>& a, Shape shape);

/// Row lookup: table [V x E], ids -> [n x E]. Backward scatter-adds into the table.
template <typename Real>
Var<Real> gather_rows(const Var<Real>& table, const std::vector<int>& ids);
/// row r = mask[r] ? fresh[r] : old[r]
template <typename Real>
Var<Real> blend_rows(const std::vector<std::uint8_t>& mask, const Var<Real>& fresh, const Var<Real>& old);
/// Replaces the listed rows with a constant; no gradient reaches them.
template <typename Real>
Var<Real> pin_rows(const Var<Real>& a, const std::vector<int>& rows, Real value);

/// Stacks T tensors of [B x H] into [B x T x H].
template <typename Real>
Var<Real> stack_time(const std::vector<Var<Real>>& steps);

/// Valid 1-D cross-correlation over time. input [T x C_in] or [N x T x C_in],
/// kernel [k x C_in x C_out] -> [(T-k+1) x C_out] (or [N x (T-k+1) x C_out]).
template <typename Real>
Var<Real> conv1d(const Var<Real>& input, const Var<Real>& kernel);

/// Column-wise max of [T x C] -> [C]. Ties route the gradient to the first row.
template <typename Real>
Var<Real> max_over_time(const Var<Real>& input);
/// Batched form: input [N x T x C], only the first lengths[n] steps of item n
/// take part -> [N x C].
template <typename Real>
Var<Real> max_over_time(const Var<Real>& input, const std::vector<std::size_t>& lengths);

/// scores[b, i] = <memory[b, i, :], query[b, :]>; memory [B x I x H], query [B x H].
template <typename Real>
Var<Real> batched_dot(const Var<Real>& memory, const Var<Real>& query);
/// Row softmax restricted to the first lengths[b] columns; masked entries are 0.
template <typename Real>
Var<Real> masked_softmax(const Var<Real>& scores, const std::vector<std::size_t>& lengths);
/// out[b, :] = sum_i weights[b, i] * memory[b, i, :]
template <typename Real>
Var<Real> weighted_sum(const Var<Real>& memory, const Var<Real>& weights);

/// -log softmax(logits)[target] for logits of shape [V] or [1 x V].
template <typename Real>
Var<Real> softmax_xent(const Var<Real>& logits, int target);
/// Sum of per-row cross entropies; rows whose target is negative are ignored.
template <typename Real>
Var<Real> softmax_xent_rows(const Var<Real>& logits, const std::vector<int>& targets);

// Value-only helpers.
template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& logits);
template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& logits);

}  // namespace cgnmt
