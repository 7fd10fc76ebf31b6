// SPDX-License-Identifier: Apache-2.0
#include "tensor/tape.hpp"

#include "tensor/errors.hpp"

namespace cgnmt {

template <typename Real>
Parameter<Real>& ParameterSet<Real>::add(const std::string& name, Tensor<Real> value) {
  if (index_.count(name)) fail(ErrorCode::InvalidArgument, "duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter<Real>>();
  p->name = name;
  p->grad = Tensor<Real>(value.shape(), Real(0));
  p->value = std::move(value);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename Real>
Parameter<Real>& ParameterSet<Real>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::Index, "no parameter named '" + name + "'");
  return *params_[it->second];
}

template <typename Real>
const Parameter<Real>& ParameterSet<Real>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::Index, "no parameter named '" + name + "'");
  return *params_[it->second];
}

template <typename Real>
void ParameterSet<Real>::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

template <typename Real>
std::size_t ParameterSet<Real>::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename Real>
Tape<Real>& Var<Real>::tape() const {
  if (!valid()) fail(ErrorCode::State, "variable is not attached to a live tape");
  return *tape_;
}

template <typename Real>
bool Var<Real>::valid() const {
  return tape_ != nullptr && tape_->generation() == generation_ && id_ < tape_->size();
}

template <typename Real>
const Tensor<Real>& Var<Real>::value() const {
  return tape().value(id_);
}

template <typename Real>
Var<Real> Tape<Real>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<Real>(this, nodes_.size() - 1, generation_);
}

template <typename Real>
Var<Real> Tape<Real>::constant(Tensor<Real> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename Real>
Var<Real> Tape<Real>::constant_ref(const Tensor<Real>& value) {
  Node n;
  n.external = &value;
  return push(std::move(n));
}

template <typename Real>
Var<Real> Tape<Real>::parameter(Parameter<Real>& p) {
  Node n;
  n.external = &p.value;
  if (grad_enabled_) {
    n.requires_grad = true;
    n.param = &p;
  }
  return push(std::move(n));
}

template <typename Real>
Var<Real> Tape<Real>::record(Tensor<Real> value, std::initializer_list<std::size_t> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<std::size_t>(inputs), std::move(fn));
}

template <typename Real>
Var<Real> Tape<Real>::record(Tensor<Real> value, const std::vector<std::size_t>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (auto id : inputs) {
      if (id >= nodes_.size()) fail(ErrorCode::State, "op input does not precede its output on the tape");
      n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return push(std::move(n));
}

template <typename Real>
const Tensor<Real>& Tape<Real>::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.value;
}

template <typename Real>
Tensor<Real>& Tape<Real>::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad = Tensor<Real>(value(id).shape(), Real(0));
  return n.grad;
}

template <typename Real>
bool Tape<Real>::has_grad(std::size_t id) const {
  return !nodes_.at(id).grad.empty();
}

template <typename Real>
void Tape<Real>::backward(const Var<Real>& loss) {
  if (!loss.valid() || &loss.tape() != this) fail(ErrorCode::State, "backward() on a value without a live tape");
  if (!grad_enabled_) fail(ErrorCode::State, "backward() on a tape recorded without gradients");
  if (value(loss.id()).size() != 1)
    fail(ErrorCode::Dimension, "backward() needs a scalar loss, got " + shape_string(value(loss.id()).shape()));
  grad(loss.id()).fill(Real(1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto& pg = n.param->grad;
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
  clear();
}

template <typename Real>
void Tape<Real>::clear() {
  nodes_.clear();
  ++generation_;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace cgnmt
