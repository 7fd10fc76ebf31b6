// SPDX-License-Identifier: Apache-2.0
#include "tensor/sgd.hpp"

#include <cmath>

#include "tensor/errors.hpp"

namespace cgnmt {

template <typename Real>
Sgd<Real>::Sgd(Real initial_lr, Real max_grad_norm) : initial_lr_(initial_lr), lr_(initial_lr), max_grad_norm_(max_grad_norm) {
  if (!(initial_lr > Real(0))) fail(ErrorCode::Config, "learning rate must be positive");
}

template <typename Real>
void Sgd<Real>::set_learning_rate(Real lr) {
  if (!(lr > Real(0)) || lr > initial_lr_)
    fail(ErrorCode::Config, "learning rate " + std::to_string(lr) + " outside (0, " + std::to_string(initial_lr_) + "]");
  lr_ = lr;
}

template <typename Real>
Real Sgd<Real>::step(ParameterSet<Real>& params) {
  double sq = 0;
  for (auto& p : params) {
    if (p->grad.shape() != p->value.shape())
      fail(ErrorCode::Dimension, "sgd: gradient " + shape_string(p->grad.shape()) + " for parameter '" + p->name + "' of shape " +
                                     shape_string(p->value.shape()));
    for (auto g : p->grad.values()) sq += double(g) * double(g);
  }
  const Real norm = Real(std::sqrt(sq));
  Real factor = lr_;
  if (max_grad_norm_ > Real(0) && norm > max_grad_norm_) factor *= max_grad_norm_ / norm;
  for (auto& p : params) {
    auto& v = p->value;
    const auto& g = p->grad;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= factor * g[i];
    p->zero_grad();
  }
  return norm;
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace cgnmt
