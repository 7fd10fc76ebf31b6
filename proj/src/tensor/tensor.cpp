// SPDX-License-Identifier: Apache-2.0
#include "tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "tensor/errors.hpp"

namespace cgnmt {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, Real fill) : shape_(std::move(shape)) {
  for (auto d : shape_)
    if (d == 0) fail(ErrorCode::Dimension, "tensor dimensions must be positive, got " + shape_string(shape_));
  data_.assign(shape_size(shape_), fill);
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_)
    if (d == 0) fail(ErrorCode::Dimension, "tensor dimensions must be positive, got " + shape_string(shape_));
  if (shape_size(shape_) != data_.size())
    fail(ErrorCode::Dimension, "shape " + shape_string(shape_) + " does not hold " + std::to_string(data_.size()) + " values");
}

template <typename Real>
Tensor<Real> Tensor<Real>::vector(std::initializer_list<Real> values) {
  return Tensor(Shape{values.size()}, std::vector<Real>(values));
}

template <typename Real>
Tensor<Real> Tensor<Real>::matrix(std::initializer_list<std::initializer_list<Real>> rows) {
  if (rows.size() == 0) fail(ErrorCode::Dimension, "empty matrix literal");
  const std::size_t cols = rows.begin()->size();
  std::vector<Real> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) fail(ErrorCode::Dimension, "ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(Shape{rows.size(), cols}, std::move(data));
}

template <typename Real>
std::size_t Tensor<Real>::rows() const noexcept {
  if (shape_.size() < 2) return 1;
  return shape_[0];
}

template <typename Real>
std::size_t Tensor<Real>::cols() const noexcept {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  return data_.size() / shape_[0];
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (data_.size() != 1) fail(ErrorCode::Dimension, "item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

template <typename Real>
void Tensor<Real>::fill(Real v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

template <typename Real>
Real max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape())
    fail(ErrorCode::Dimension, "max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template class Tensor<float>;
template class Tensor<double>;
template float max_abs_diff(const Tensor<float>&, const Tensor<float>&);
template double max_abs_diff(const Tensor<double>&, const Tensor<double>&);

}  // namespace cgnmt
