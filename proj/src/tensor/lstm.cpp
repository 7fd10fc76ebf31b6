// SPDX-License-Identifier: Apache-2.0
#include "tensor/lstm.hpp"

#include "tensor/errors.hpp"

namespace cgnmt {

template <typename Real>
LstmState<Real> lstm_cell(const LstmWeights<Real>& w, const Var<Real>& x, const LstmState<Real>& state) {
  const auto& wh = w.wh.value();
  if (wh.rank() != 2 || wh.dim(1) != 4 * wh.dim(0))
    fail(ErrorCode::Dimension, "lstm_cell: recurrent weight must be [D x 4D], got " + shape_string(wh.shape()));
  const std::size_t D = wh.dim(0);
  if (state.h.value().cols() != D || state.c.value().cols() != D)
    fail(ErrorCode::Dimension, "lstm_cell: state " + shape_string(state.h.shape()) + " does not match hidden size " +
                                   std::to_string(D));
  if (x.value().rank() != 2 || x.value().dim(1) != w.wx.value().dim(0))
    fail(ErrorCode::Dimension, "lstm_cell: input " + shape_string(x.shape()) + " does not match input weight " +
                                   shape_string(w.wx.shape()));

  auto pre = add_bias(add(matmul(x, w.wx), matmul(state.h, w.wh)), w.b);
  auto i = vsigmoid(slice_cols(pre, 0, D));
  auto f = vsigmoid(slice_cols(pre, D, D));
  auto g = vtanh(slice_cols(pre, 2 * D, D));
  auto o = vsigmoid(slice_cols(pre, 3 * D, D));
  auto c = add(mul(f, state.c), mul(i, g));
  auto h = mul(o, vtanh(c));
  return {h, c};
}

template <typename Real>
void init_lstm_bias(Tensor<Real>& bias, std::size_t hidden, Real forget) {
  if (bias.size() != 4 * hidden) fail(ErrorCode::Dimension, "init_lstm_bias: bias " + shape_string(bias.shape()));
  for (std::size_t k = hidden; k < 2 * hidden; ++k) bias[k] = forget;
}

template LstmState<float> lstm_cell(const LstmWeights<float>&, const Var<float>&, const LstmState<float>&);
template LstmState<double> lstm_cell(const LstmWeights<double>&, const Var<double>&, const LstmState<double>&);
template void init_lstm_bias(Tensor<float>&, std::size_t, float);
template void init_lstm_bias(Tensor<double>&, std::size_t, double);

}  // namespace cgnmt
