// SPDX-License-Identifier: Apache-2.0
#include "tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tensor/errors.hpp"

namespace cgnmt {
namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using MatMap = Eigen::Map<RowMat<Real>>;
template <typename Real>
using ConstMatMap = Eigen::Map<const RowMat<Real>>;

template <typename Real>
MatMap<Real> as_mat(Tensor<Real>& t, std::size_t rows, std::size_t cols) {
  return MatMap<Real>(t.data(), Eigen::Index(rows), Eigen::Index(cols));
}
template <typename Real>
ConstMatMap<Real> as_mat(const Tensor<Real>& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap<Real>(t.data(), Eigen::Index(rows), Eigen::Index(cols));
}
template <typename Real>
MatMap<Real> as_mat(Tensor<Real>& t) {
  return as_mat(t, t.rows(), t.cols());
}
template <typename Real>
ConstMatMap<Real> as_mat(const Tensor<Real>& t) {
  return as_mat(t, t.rows(), t.cols());
}

template <typename Real>
Tape<Real>& same_tape(const Var<Real>& a, const Var<Real>& b) {
  auto& t = a.tape();
  if (&b.tape() != &t) fail(ErrorCode::State, "operands live on different tapes");
  return t;
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank)
    fail(ErrorCode::Dimension, std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(s));
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) fail(ErrorCode::Dimension, std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

template <typename Real>
void accumulate(Tensor<Real>& dst, const Tensor<Real>& src) {
  Real* d = dst.data();
  const Real* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  auto& t = same_tape(a, b);
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
    fail(ErrorCode::Dimension, "matmul: cannot multiply " + shape_string(A.shape()) + " by " + shape_string(B.shape()));
  Tensor<Real> out({A.dim(0), B.dim(1)});
  as_mat(out).noalias() = as_mat(A) * as_mat(B);
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) as_mat(t.grad(ia)).noalias() += as_mat(g) * as_mat(t.value(ib)).transpose();
    if (t.needs_grad(ib)) as_mat(t.grad(ib)).noalias() += as_mat(t.value(ia)).transpose() * as_mat(g);
  });
}

template <typename Real>
Var<Real> matmul_nt(const Var<Real>& a, const Var<Real>& b) {
  auto& t = same_tape(a, b);
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(1))
    fail(ErrorCode::Dimension,
         "matmul_nt: cannot multiply " + shape_string(A.shape()) + " by transpose of " + shape_string(B.shape()));
  Tensor<Real> out({A.dim(0), B.dim(0)});
  as_mat(out).noalias() = as_mat(A) * as_mat(B).transpose();
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) as_mat(t.grad(ia)).noalias() += as_mat(g) * as_mat(t.value(ib));
    if (t.needs_grad(ib)) as_mat(t.grad(ib)).noalias() += as_mat(g).transpose() * as_mat(t.value(ia));
  });
}

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  auto& t = same_tape(a, b);
  require_same(a.shape(), b.shape(), "add");
  Tensor<Real> out = a.value();
  accumulate(out, b.value());
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) accumulate(t.grad(ia), g);
    if (t.needs_grad(ib)) accumulate(t.grad(ib), g);
  });
}

template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  auto& t = same_tape(a, b);
  require_same(a.shape(), b.shape(), "sub");
  Tensor<Real> out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) accumulate(t.grad(ia), g);
    if (t.needs_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  auto& t = same_tape(a, b);
  require_same(a.shape(), b.shape(), "mul");
  Tensor<Real> out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad(ia);
      const auto& B = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad(ib);
      const auto& A = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

template <typename Real>
Var<Real> add_bias(const Var<Real>& a, const Var<Real>& b) {
  auto& t = same_tape(a, b);
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.size() != A.dim(1))
    fail(ErrorCode::Dimension, "add_bias: cannot broadcast " + shape_string(B.shape()) + " over " + shape_string(A.shape()));
  Tensor<Real> out = A;
  const std::size_t n = A.dim(1);
  for (std::size_t r = 0; r < A.dim(0); ++r) {
    Real* row = out.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) row[c] += B[c];
  }
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib, n](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) accumulate(t.grad(ia), g);
    if (t.needs_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t r = 0; r < g.size() / n; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
    }
  });
}

template <typename Real>
Var<Real> scale(const Var<Real>& a, Real factor) {
  auto& t = a.tape();
  Tensor<Real> out = a.value();
  for (auto& v : out.values()) v *= factor;
  const auto ia = a.id();
  return t.record(std::move(out), {ia}, [ia, factor](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

template <typename Real>
Var<Real> one_minus(const Var<Real>& a) {
  auto& t = a.tape();
  Tensor<Real> out = a.value();
  for (auto& v : out.values()) v = Real(1) - v;
  const auto ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

template <typename Real>
Var<Real> sum(const Var<Real>& a) {
  auto& t = a.tape();
  Real s = 0;
  for (auto v : a.value().values()) s += v;
  const auto ia = a.id();
  return t.record(Tensor<Real>::scalar(s), {ia}, [ia](Tape<Real>& t, std::size_t self) {
    const Real g = t.grad(self)[0];
    for (auto& v : t.grad(ia).values()) v += g;
  });
}

template <typename Real>
Var<Real> pointwise(Activation fn, const Var<Real>& x) {
  auto& t = x.tape();
  Tensor<Real> out = x.value();
  switch (fn) {
    case Activation::Tanh:
      for (auto& v : out.values()) v = std::tanh(v);
      break;
    case Activation::Sigmoid:
      for (auto& v : out.values()) v = Real(1) / (Real(1) + std::exp(-v));
      break;
    case Activation::Relu:
      for (auto& v : out.values()) v = v > Real(0) ? v : Real(0);
      break;
  }
  const auto ix = x.id();
  return t.record(std::move(out), {ix}, [ix, fn](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& gx = t.grad(ix);
    switch (fn) {
      case Activation::Tanh:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (Real(1) - y[i] * y[i]);
        break;
      case Activation::Sigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (Real(1) - y[i]);
        break;
      case Activation::Relu:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (y[i] > Real(0)) gx[i] += g[i];
        break;
    }
  });
}

template <typename Real>
Var<Real> concat_cols(const std::vector<Var<Real>>& parts) {
  if (parts.empty()) fail(ErrorCode::Dimension, "concat_cols: no inputs");
  auto& t = parts[0].tape();
  const std::size_t rows = parts[0].value().rank() == 2 ? parts[0].value().dim(0) : 1;
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    if (&p.tape() != &t) fail(ErrorCode::State, "concat_cols: operands on different tapes");
    const std::size_t r = v.rank() == 2 ? v.dim(0) : 1;
    if (v.rank() > 2 || r != rows)
      fail(ErrorCode::Dimension, "concat_cols: incompatible " + shape_string(v.shape()) + " with " + std::to_string(rows) + " rows");
    widths.push_back(v.cols());
    ids.push_back(p.id());
    total += v.cols();
  }
  const bool as_vector = parts[0].value().rank() == 1;
  Tensor<Real> out(as_vector ? Shape{total} : Shape{rows, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + off);
    off += widths[k];
  }
  return t.record(std::move(out), ids, [ids, widths, rows, total](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) {
        auto& gk = t.grad(ids[k]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) gk[r * widths[k] + c] += g[r * total + off + c];
      }
      off += widths[k];
    }
  });
}

template <typename Real>
Var<Real> slice_cols(const Var<Real>& a, std::size_t begin, std::size_t count) {
  auto& t = a.tape();
  const auto& A = a.value();
  require_rank(A.shape(), 2, "slice_cols");
  const std::size_t rows = A.dim(0), cols = A.dim(1);
  if (count == 0 || begin + count > cols)
    fail(ErrorCode::Dimension, "slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                                   ") outside " + shape_string(A.shape()));
  Tensor<Real> out({rows, count});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(A.data() + r * cols + begin, count, out.data() + r * count);
  const auto ia = a.id();
  return t.record(std::move(out), {ia}, [ia, rows, cols, begin, count](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) ga[r * cols + begin + c] += g[r * count + c];
  });
}

template <typename Real>
Var<Real> concat_rows(const std::vector<Var<Real>>& parts) {
  if (parts.empty()) fail(ErrorCode::Dimension, "concat_rows: no inputs");
  auto& t = parts[0].tape();
  const std::size_t cols = parts[0].value().cols();
  std::vector<std::size_t> ids, sizes;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    if (&p.tape() != &t) fail(ErrorCode::State, "concat_rows: operands on different tapes");
    if (v.rank() > 2 || v.cols() != cols)
      fail(ErrorCode::Dimension, "concat_rows: incompatible " + shape_string(v.shape()) + " with " + std::to_string(cols) + " columns");
    rows += v.rows();
    ids.push_back(p.id());
    sizes.push_back(v.size());
  }
  Tensor<Real> out({rows, cols});
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + off);
    off += p.value().size();
  }
  return t.record(std::move(out), ids, [ids, sizes](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) {
        auto& gk = t.grad(ids[k]);
        for (std::size_t i = 0; i < sizes[k]; ++i) gk[i] += g[off + i];
      }
      off += sizes[k];
    }
  });
}

template <typename Real>
Var<Real> reshape(const Var<Real>& a, Shape shape) {
  auto& t = a.tape();
  Tensor<Real> out = a.value().reshaped(std::move(shape));
  const auto ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape<Real>& t, std::size_t self) { accumulate(t.grad(ia), t.grad(self)); });
}

template <typename Real>
Var<Real> gather_rows(const Var<Real>& table, const std::vector<int>& ids) {
  auto& t = table.tape();
  const auto& T = table.value();
  require_rank(T.shape(), 2, "gather_rows");
  const std::size_t rows = T.dim(0), cols = T.dim(1);
  if (ids.empty()) fail(ErrorCode::Dimension, "gather_rows: no ids");
  Tensor<Real> out({ids.size(), cols});
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || std::size_t(ids[k]) >= rows)
      fail(ErrorCode::Index, "gather_rows: id " + std::to_string(ids[k]) + " outside table of " + std::to_string(rows) + " rows");
    std::copy_n(T.data() + std::size_t(ids[k]) * cols, cols, out.data() + k * cols);
  }
  const auto it = table.id();
  return t.record(std::move(out), {it}, [it, ids, cols](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gt = t.grad(it);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Real* dst = gt.data() + std::size_t(ids[k]) * cols;
      const Real* src = g.data() + k * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

template <typename Real>
Var<Real> blend_rows(const std::vector<std::uint8_t>& mask, const Var<Real>& fresh, const Var<Real>& old) {
  auto& t = same_tape(fresh, old);
  require_same(fresh.shape(), old.shape(), "blend_rows");
  const auto& F = fresh.value();
  const auto& O = old.value();
  const std::size_t rows = F.rows(), cols = F.cols();
  if (mask.size() != rows)
    fail(ErrorCode::Dimension, "blend_rows: mask of " + std::to_string(mask.size()) + " rows for " + shape_string(F.shape()));
  Tensor<Real> out = O;
  for (std::size_t r = 0; r < rows; ++r)
    if (mask[r]) std::copy_n(F.data() + r * cols, cols, out.data() + r * cols);
  const auto i_f = fresh.id(), i_o = old.id();
  return t.record(std::move(out), {i_f, i_o}, [i_f, i_o, mask, cols](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t r = 0; r < mask.size(); ++r) {
      const std::size_t target = mask[r] ? i_f : i_o;
      if (!t.needs_grad(target)) continue;
      auto& gt = t.grad(target);
      for (std::size_t c = 0; c < cols; ++c) gt[r * cols + c] += g[r * cols + c];
    }
  });
}

template <typename Real>
Var<Real> pin_rows(const Var<Real>& a, const std::vector<int>& rows, Real value) {
  auto& t = a.tape();
  const auto& A = a.value();
  const std::size_t n = A.rows(), cols = A.cols();
  std::vector<std::uint8_t> pinned(n, 0);
  for (int r : rows) {
    if (r < 0 || std::size_t(r) >= n)
      fail(ErrorCode::Index, "pin_rows: row " + std::to_string(r) + " outside " + shape_string(A.shape()));
    pinned[std::size_t(r)] = 1;
  }
  Tensor<Real> out = A;
  for (std::size_t r = 0; r < n; ++r)
    if (pinned[r]) std::fill_n(out.data() + r * cols, cols, value);
  const auto ia = a.id();
  return t.record(std::move(out), {ia}, [ia, pinned, cols](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < pinned.size(); ++r)
      if (!pinned[r])
        for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r * cols + c];
  });
}

template <typename Real>
Var<Real> stack_time(const std::vector<Var<Real>>& steps) {
  if (steps.empty()) fail(ErrorCode::Dimension, "stack_time: no steps");
  auto& t = steps[0].tape();
  const auto& first = steps[0].value();
  require_rank(first.shape(), 2, "stack_time");
  const std::size_t B = first.dim(0), H = first.dim(1), T = steps.size();
  std::vector<std::size_t> ids;
  Tensor<Real> out({B, T, H});
  for (std::size_t s = 0; s < T; ++s) {
    const auto& v = steps[s].value();
    require_same(v.shape(), first.shape(), "stack_time");
    ids.push_back(steps[s].id());
    for (std::size_t b = 0; b < B; ++b) std::copy_n(v.data() + b * H, H, out.data() + (b * T + s) * H);
  }
  return t.record(std::move(out), ids, [ids, B, T, H](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t s = 0; s < T; ++s) {
      if (!t.needs_grad(ids[s])) continue;
      auto& gs = t.grad(ids[s]);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h) gs[b * H + h] += g[(b * T + s) * H + h];
    }
  });
}

template <typename Real>
Var<Real> conv1d(const Var<Real>& input, const Var<Real>& kernel) {
  auto& t = same_tape(input, kernel);
  const auto& X = input.value();
  const auto& K = kernel.value();
  require_rank(K.shape(), 3, "conv1d kernel");
  const bool batched = X.rank() == 3;
  if (X.rank() != 2 && !batched) fail(ErrorCode::Dimension, "conv1d: input must be [T x C] or [N x T x C], got " + shape_string(X.shape()));
  const std::size_t N = batched ? X.dim(0) : 1;
  const std::size_t T = batched ? X.dim(1) : X.dim(0);
  const std::size_t C = batched ? X.dim(2) : X.dim(1);
  const std::size_t k = K.dim(0), O = K.dim(2);
  if (K.dim(1) != C)
    fail(ErrorCode::Dimension, "conv1d: kernel " + shape_string(K.shape()) + " does not match input " + shape_string(X.shape()));
  if (T < k)
    fail(ErrorCode::Dimension, "conv1d: sequence too short, length " + std::to_string(T) + " < kernel width " + std::to_string(k));
  const std::size_t Tp = T - k + 1;
  Tensor<Real> out(batched ? Shape{N, Tp, O} : Shape{Tp, O});
  using Strided = Eigen::Map<const RowMat<Real>, 0, Eigen::OuterStride<>>;
  const auto Km = as_mat(K, k * C, O);
  // Window p of item n is the contiguous block X[n, p:p+k, :], so the im2col
  // matrix is a strided view of the input.
  for (std::size_t n = 0; n < N; ++n) {
    Strided win(X.data() + n * T * C, Eigen::Index(Tp), Eigen::Index(k * C), Eigen::OuterStride<>(Eigen::Index(C)));
    as_mat(out, N * Tp, O).middleRows(Eigen::Index(n * Tp), Eigen::Index(Tp)).noalias() = win * Km;
  }
  const auto ix = input.id(), ik = kernel.id();
  return t.record(std::move(out), {ix, ik}, [ix, ik, N, T, C, k, O, Tp](Tape<Real>& t, std::size_t self) {
    using Strided = Eigen::Map<const RowMat<Real>, 0, Eigen::OuterStride<>>;
    const auto& g = t.grad(self);
    const auto& X = t.value(ix);
    const auto& K = t.value(ik);
    const auto G = as_mat(g, N * Tp, O);
    if (t.needs_grad(ik)) {
      auto gk = as_mat(t.grad(ik), k * C, O);
      for (std::size_t n = 0; n < N; ++n) {
        Strided win(X.data() + n * T * C, Eigen::Index(Tp), Eigen::Index(k * C), Eigen::OuterStride<>(Eigen::Index(C)));
        gk.noalias() += win.transpose() * G.middleRows(Eigen::Index(n * Tp), Eigen::Index(Tp));
      }
    }
    if (t.needs_grad(ix)) {
      RowMat<Real> gwin = G * as_mat(K, k * C, O).transpose();
      auto& gx = t.grad(ix);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < Tp; ++p) {
          Real* dst = gx.data() + (n * T + p) * C;
          const Real* src = gwin.data() + (n * Tp + p) * k * C;
          for (std::size_t j = 0; j < k * C; ++j) dst[j] += src[j];
        }
    }
  });
}

template <typename Real>
Var<Real> max_over_time(const Var<Real>& input) {
  require_rank(input.value().shape(), 2, "max_over_time");
  const std::size_t T = input.value().dim(0), C = input.value().dim(1);
  auto batched = reshape(input, Shape{1, T, C});
  return reshape(max_over_time(batched, std::vector<std::size_t>{T}), Shape{C});
}

template <typename Real>
Var<Real> max_over_time(const Var<Real>& input, const std::vector<std::size_t>& lengths) {
  auto& t = input.tape();
  const auto& X = input.value();
  require_rank(X.shape(), 3, "max_over_time");
  const std::size_t N = X.dim(0), T = X.dim(1), C = X.dim(2);
  if (lengths.size() != N)
    fail(ErrorCode::Dimension, "max_over_time: " + std::to_string(lengths.size()) + " lengths for " + shape_string(X.shape()));
  Tensor<Real> out({N, C});
  std::vector<std::uint32_t> argmax(N * C);
  for (std::size_t n = 0; n < N; ++n) {
    if (lengths[n] == 0 || lengths[n] > T)
      fail(ErrorCode::Dimension, "max_over_time: empty or overlong time axis (" + std::to_string(lengths[n]) + " of " + std::to_string(T) + ")");
    for (std::size_t c = 0; c < C; ++c) {
      std::uint32_t best = 0;
      Real bv = X[(n * T) * C + c];
      for (std::size_t p = 1; p < lengths[n]; ++p) {
        const Real v = X[(n * T + p) * C + c];
        if (v > bv) {
          bv = v;
          best = std::uint32_t(p);
        }
      }
      out[n * C + c] = bv;
      argmax[n * C + c] = best;
    }
  }
  const auto ix = input.id();
  return t.record(std::move(out), {ix}, [ix, argmax, T, C](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
      const std::size_t n = i / C, c = i % C;
      gx[(n * T + argmax[i]) * C + c] += g[i];
    }
  });
}

template <typename Real>
Var<Real> batched_dot(const Var<Real>& memory, const Var<Real>& query) {
  auto& t = same_tape(memory, query);
  const auto& M = memory.value();
  const auto& Q = query.value();
  require_rank(M.shape(), 3, "batched_dot memory");
  require_rank(Q.shape(), 2, "batched_dot query");
  const std::size_t B = M.dim(0), I = M.dim(1), H = M.dim(2);
  if (Q.dim(0) != B || Q.dim(1) != H)
    fail(ErrorCode::Dimension, "batched_dot: query " + shape_string(Q.shape()) + " vs memory " + shape_string(M.shape()));
  Tensor<Real> out({B, I});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < I; ++i) {
      const Real* m = M.data() + (b * I + i) * H;
      const Real* q = Q.data() + b * H;
      Real s = 0;
      for (std::size_t h = 0; h < H; ++h) s += m[h] * q[h];
      out[b * I + i] = s;
    }
  const auto im = memory.id(), iq = query.id();
  return t.record(std::move(out), {im, iq}, [im, iq, B, I, H](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& M = t.value(im);
    const auto& Q = t.value(iq);
    if (t.needs_grad(im)) {
      auto& gm = t.grad(im);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < I; ++i)
          for (std::size_t h = 0; h < H; ++h) gm[(b * I + i) * H + h] += g[b * I + i] * Q[b * H + h];
    }
    if (t.needs_grad(iq)) {
      auto& gq = t.grad(iq);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < I; ++i)
          for (std::size_t h = 0; h < H; ++h) gq[b * H + h] += g[b * I + i] * M[(b * I + i) * H + h];
    }
  });
}

template <typename Real>
Var<Real> masked_softmax(const Var<Real>& scores, const std::vector<std::size_t>& lengths) {
  auto& t = scores.tape();
  const auto& S = scores.value();
  require_rank(S.shape(), 2, "masked_softmax");
  const std::size_t B = S.dim(0), I = S.dim(1);
  if (lengths.size() != B)
    fail(ErrorCode::Dimension, "masked_softmax: " + std::to_string(lengths.size()) + " lengths for " + shape_string(S.shape()));
  Tensor<Real> out({B, I});
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t L = lengths[b];
    if (L == 0 || L > I) fail(ErrorCode::Dimension, "masked_softmax: invalid length " + std::to_string(L));
    const Real* s = S.data() + b * I;
    Real* o = out.data() + b * I;
    const Real mx = *std::max_element(s, s + L);
    Real z = 0;
    for (std::size_t i = 0; i < L; ++i) z += (o[i] = std::exp(s[i] - mx));
    for (std::size_t i = 0; i < L; ++i) o[i] /= z;
  }
  const auto is = scores.id();
  return t.record(std::move(out), {is}, [is, lengths, I](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& gs = t.grad(is);
    for (std::size_t b = 0; b < lengths.size(); ++b) {
      Real dot = 0;
      for (std::size_t i = 0; i < lengths[b]; ++i) dot += g[b * I + i] * y[b * I + i];
      for (std::size_t i = 0; i < lengths[b]; ++i) gs[b * I + i] += y[b * I + i] * (g[b * I + i] - dot);
    }
  });
}

template <typename Real>
Var<Real> weighted_sum(const Var<Real>& memory, const Var<Real>& weights) {
  auto& t = same_tape(memory, weights);
  const auto& M = memory.value();
  const auto& W = weights.value();
  require_rank(M.shape(), 3, "weighted_sum memory");
  require_rank(W.shape(), 2, "weighted_sum weights");
  const std::size_t B = M.dim(0), I = M.dim(1), H = M.dim(2);
  if (W.dim(0) != B || W.dim(1) != I)
    fail(ErrorCode::Dimension, "weighted_sum: weights " + shape_string(W.shape()) + " vs memory " + shape_string(M.shape()));
  Tensor<Real> out({B, H});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < I; ++i) {
      const Real w = W[b * I + i];
      if (w == Real(0)) continue;
      const Real* m = M.data() + (b * I + i) * H;
      Real* o = out.data() + b * H;
      for (std::size_t h = 0; h < H; ++h) o[h] += w * m[h];
    }
  const auto im = memory.id(), iw = weights.id();
  return t.record(std::move(out), {im, iw}, [im, iw, B, I, H](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& M = t.value(im);
    const auto& W = t.value(iw);
    if (t.needs_grad(iw)) {
      auto& gw = t.grad(iw);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < I; ++i) {
          Real s = 0;
          for (std::size_t h = 0; h < H; ++h) s += g[b * H + h] * M[(b * I + i) * H + h];
          gw[b * I + i] += s;
        }
    }
    if (t.needs_grad(im)) {
      auto& gm = t.grad(im);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < I; ++i)
          for (std::size_t h = 0; h < H; ++h) gm[(b * I + i) * H + h] += W[b * I + i] * g[b * H + h];
    }
  });
}

template <typename Real>
Var<Real> softmax_xent(const Var<Real>& logits, int target) {
  const auto& L = logits.value();
  if (L.rank() > 2 || L.rows() != 1) fail(ErrorCode::Dimension, "softmax_xent: expected [V] or [1 x V], got " + shape_string(L.shape()));
  if (target < 0 || std::size_t(target) >= L.size())
    fail(ErrorCode::Index, "softmax_xent: target " + std::to_string(target) + " outside vocabulary of " + std::to_string(L.size()));
  auto as_row = L.rank() == 2 ? logits : reshape(logits, Shape{1, L.size()});
  return softmax_xent_rows(as_row, std::vector<int>{target});
}

template <typename Real>
Var<Real> softmax_xent_rows(const Var<Real>& logits, const std::vector<int>& targets) {
  auto& t = logits.tape();
  const auto& L = logits.value();
  require_rank(L.shape(), 2, "softmax_xent_rows");
  const std::size_t N = L.dim(0), V = L.dim(1);
  if (targets.size() != N)
    fail(ErrorCode::Dimension, "softmax_xent_rows: " + std::to_string(targets.size()) + " targets for " + shape_string(L.shape()));
  Tensor<Real> probs({N, V});
  Real loss = 0;
  for (std::size_t r = 0; r < N; ++r) {
    if (targets[r] < 0) continue;
    if (std::size_t(targets[r]) >= V)
      fail(ErrorCode::Index, "softmax_xent_rows: target " + std::to_string(targets[r]) + " outside vocabulary of " + std::to_string(V));
    const Real* l = L.data() + r * V;
    Real* p = probs.data() + r * V;
    const Real mx = *std::max_element(l, l + V);
    Real z = 0;
    for (std::size_t v = 0; v < V; ++v) z += (p[v] = std::exp(l[v] - mx));
    for (std::size_t v = 0; v < V; ++v) p[v] /= z;
    loss += -(l[targets[r]] - mx - std::log(z));
  }
  const auto il = logits.id();
  return t.record(Tensor<Real>::scalar(loss), {il}, [il, targets, V, probs = std::move(probs)](Tape<Real>& t, std::size_t self) {
    const Real g = t.grad(self)[0];
    auto& gl = t.grad(il);
    for (std::size_t r = 0; r < targets.size(); ++r) {
      if (targets[r] < 0) continue;
      for (std::size_t v = 0; v < V; ++v) gl[r * V + v] += g * probs[r * V + v];
      gl[r * V + std::size_t(targets[r])] -= g;
    }
  });
}

template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& logits) {
  Tensor<Real> out = logits;
  const std::size_t R = logits.rows(), V = logits.cols();
  for (std::size_t r = 0; r < R; ++r) {
    Real* o = out.data() + r * V;
    const Real mx = *std::max_element(o, o + V);
    Real z = 0;
    for (std::size_t v = 0; v < V; ++v) z += std::exp(o[v] - mx);
    const Real lz = mx + std::log(z);
    for (std::size_t v = 0; v < V; ++v) o[v] -= lz;
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& logits) {
  Tensor<Real> out = logits;
  const std::size_t R = logits.rows(), V = logits.cols();
  for (std::size_t r = 0; r < R; ++r) {
    Real* o = out.data() + r * V;
    const Real mx = *std::max_element(o, o + V);
    Real z = 0;
    for (std::size_t v = 0; v < V; ++v) z += (o[v] = std::exp(o[v] - mx));
    for (std::size_t v = 0; v < V; ++v) o[v] /= z;
  }
  return out;
}

#define CGNMT_INSTANTIATE_OPS(R)                                                                    \
  template Var<R> matmul(const Var<R>&, const Var<R>&);                                             \
  template Var<R> matmul_nt(const Var<R>&, const Var<R>&);                                          \
  template Var<R> add(const Var<R>&, const Var<R>&);                                                \
  template Var<R> sub(const Var<R>&, const Var<R>&);                                                \
  template Var<R> mul(const Var<R>&, const Var<R>&);                                                \
  template Var<R> add_bias(const Var<R>&, const Var<R>&);                                           \
  template Var<R> scale(const Var<R>&, R);                                                          \
  template Var<R> one_minus(const Var<R>&);                                                         \
  template Var<R> sum(const Var<R>&);                                                               \
  template Var<R> pointwise(Activation, const Var<R>&);                                             \
  template Var<R> concat_cols(const std::vector<Var<R>>&);                                          \
  template Var<R> slice_cols(const Var<R>&, std::size_t, std::size_t);                              \
  template Var<R> concat_rows(const std::vector<Var<R>>&);                                          \
  template Var<R> reshape(const Var<R>&, Shape);                                                    \
  template Var<R> gather_rows(const Var<R>&, const std::vector<int>&);                              \
  template Var<R> blend_rows(const std::vector<std::uint8_t>&, const Var<R>&, const Var<R>&);       \
  template Var<R> pin_rows(const Var<R>&, const std::vector<int>&, R);                              \
  template Var<R> stack_time(const std::vector<Var<R>>&);                                           \
  template Var<R> conv1d(const Var<R>&, const Var<R>&);                                             \
  template Var<R> max_over_time(const Var<R>&);                                                     \
  template Var<R> max_over_time(const Var<R>&, const std::vector<std::size_t>&);                    \
  template Var<R> batched_dot(const Var<R>&, const Var<R>&);                                        \
  template Var<R> masked_softmax(const Var<R>&, const std::vector<std::size_t>&);                   \
  template Var<R> weighted_sum(const Var<R>&, const Var<R>&);                                       \
  template Var<R> softmax_xent(const Var<R>&, int);                                                 \
  template Var<R> softmax_xent_rows(const Var<R>&, const std::vector<int>&);                        \
  template Tensor<R> softmax(const Tensor<R>&);                                                     \
  template Tensor<R> log_softmax(const Tensor<R>&);

CGNMT_INSTANTIATE_OPS(float)
CGNMT_INSTANTIATE_OPS(double)

}  // namespace cgnmt
