// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tensor/tape.hpp"

namespace cgnmt {

/// Plain SGD, p <- p - lr * g, with an optional global max-norm gradient clip
/// (disabled when max_grad_norm <= 0).
template <typename Real>
class Sgd {
 public:
  explicit Sgd(Real initial_lr, Real max_grad_norm = Real(0));

  Real learning_rate() const noexcept { return lr_; }
  Real initial_learning_rate() const noexcept { return initial_lr_; }
  void set_learning_rate(Real lr);

  /// Applies the update to every parameter and zeroes the gradients.
  /// Returns the global gradient norm before clipping.
  Real step(ParameterSet<Real>& params);

 private:
  Real initial_lr_;
  Real lr_;
  Real max_grad_norm_;
};

extern template class Sgd<float>;
extern template class Sgd<double>;

}  // namespace cgnmt
