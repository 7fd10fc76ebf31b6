// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tensor/ops.hpp"

namespace cgnmt {

/// Weights of one LSTM layer: input projection [in x 4D], recurrent projection
/// [D x 4D] and bias [4D]. Gate blocks are ordered input, forget, cell, output.
template <typename Real>
struct LstmWeights {
  Var<Real> wx;
  Var<Real> wh;
  Var<Real> b;
};

template <typename Real>
struct LstmState {
  Var<Real> h;
  Var<Real> c;
};

/// One step of the standard LSTM recurrence for a batch of rows.
template <typename Real>
LstmState<Real> lstm_cell(const LstmWeights<Real>& w, const Var<Real>& x, const LstmState<Real>& state);

/// Sets the forget-gate block of an LSTM bias to `forget`; other entries are left as they are.
template <typename Real>
void init_lstm_bias(Tensor<Real>& bias, std::size_t hidden, Real forget = Real(1));

extern template LstmState<float> lstm_cell(const LstmWeights<float>&, const Var<float>&, const LstmState<float>&);
extern template LstmState<double> lstm_cell(const LstmWeights<double>&, const Var<double>&, const LstmState<double>&);

}  // namespace cgnmt
