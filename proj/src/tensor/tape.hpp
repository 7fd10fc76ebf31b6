// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"

namespace cgnmt {

/// A named learnable tensor with its accumulated gradient.
template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;  // same shape as value; zeroed by the optimizer

  void zero_grad() { grad.fill(Real(0)); }
};

/// Insertion-ordered collection of parameters. Iteration order is stable and
/// is the order used by checkpoints.
template <typename Real>
class ParameterSet {
 public:
  Parameter<Real>& add(const std::string& name, Tensor<Real> value);
  Parameter<Real>& get(const std::string& name);
  const Parameter<Real>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const noexcept { return params_.size(); }
  Parameter<Real>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<Real>& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  std::size_t total_values() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter<Real>>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename Real>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; invalid once the tape
/// is cleared.
template <typename Real>
class Var {
 public:
  Var() = default;

  Tape<Real>& tape() const;
  std::size_t id() const noexcept { return id_; }
  bool valid() const;

  const Tensor<Real>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape<Real>;
  Var(Tape<Real>* tape, std::size_t id, std::uint64_t generation) : tape_(tape), id_(id), generation_(generation) {}

  Tape<Real>* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

/// Reverse-mode differentiation tape.
///
/// Records are appended in evaluation order, so inputs always precede their
/// consumers. backward() walks the records once in reverse, sums gradients over
/// every use of a value, flushes parameter gradients into Parameter::grad and
/// then clears the tape. With grad disabled the tape only stores values.
template <typename Real>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var<Real> constant(Tensor<Real> value);
  /// Trainable binding: gradients are added to p.grad on backward().
  Var<Real> parameter(Parameter<Real>& p);
  /// Read-only binding; the tensor is referenced, not copied.
  Var<Real> constant_ref(const Tensor<Real>& value);

  /// Appends an op result. `fn` runs during backward() when the result needs a gradient.
  Var<Real> record(Tensor<Real> value, std::initializer_list<std::size_t> inputs, BackwardFn fn);
  Var<Real> record(Tensor<Real> value, const std::vector<std::size_t>& inputs, BackwardFn fn);

  const Tensor<Real>& value(std::size_t id) const;
  /// Gradient buffer of a record, allocated (zeroed) on first access.
  Tensor<Real>& grad(std::size_t id);
  bool has_grad(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  void backward(const Var<Real>& loss);
  void clear();

  std::size_t size() const noexcept { return nodes_.size(); }
  std::uint64_t generation() const noexcept { return generation_; }

 private:
  struct Node {
    Tensor<Real> value;
    const Tensor<Real>* external = nullptr;
    Tensor<Real> grad;
    bool requires_grad = false;
    Parameter<Real>* param = nullptr;
    BackwardFn backward;
  };

  Var<Real> push(Node node);

  std::deque<Node> nodes_;  // stable references across push
  std::uint64_t generation_ = 1;
  bool grad_enabled_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class Var<float>;
extern template class Var<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace cgnmt
