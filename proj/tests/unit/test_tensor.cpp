// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "tensor/archive.hpp"
#include "tensor/errors.hpp"
#include "tensor/lstm.hpp"
#include "tensor/ops.hpp"
#include "tensor/random.hpp"
#include "tensor/sgd.hpp"

using namespace cgnmt;
using cgnmt::testing::gradcheck;

namespace {

using T = Tensor<double>;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode(0);
}

}  // namespace

TEST_CASE("matmul examples") {
  Tape<double> tape;
  auto id = tape.constant(T::matrix({{1, 0}, {0, 1}}));
  auto m = tape.constant(T::matrix({{1, 2}, {3, 4}}));
  CHECK(matmul(id, m).value() == T::matrix({{1, 2}, {3, 4}}));
  auto r = matmul(tape.constant(T::matrix({{1, 2}})), tape.constant(T::matrix({{3}, {4}})));
  CHECK(r.value().item() == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape<double> tape;
  auto a = tape.constant(T({2, 3}));
  auto b = tape.constant(T({2, 2}));
  try {
    matmul(a, b);
    FAIL("expected a dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Dimension);
    CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
    CHECK(std::string(e.what()).find("[2x2]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(1);
  ParameterSet<double> ps;
  auto& a = ps.add("a", random_uniform<double>({3, 4}, rng));
  auto& b = ps.add("b", random_uniform<double>({4, 2}, rng));
  auto w = random_uniform<double>({3, 2}, rng);
  auto report = gradcheck(ps, [&](Tape<double>& t) { return sum(mul(matmul(t.parameter(a), t.parameter(b)), t.constant(w))); }, 2);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("conv1d examples") {
  Tape<double> tape;
  auto ones = tape.constant(T({4, 1}, 1.0));
  auto k = tape.constant(T({2, 1, 1}, 1.0));
  CHECK(conv1d(ones, k).value() == T({3, 1}, std::vector<double>{2, 2, 2}));
  auto x = tape.constant(T({4, 1}, std::vector<double>{1, 2, 3, 4}));
  auto diff = tape.constant(T({2, 1, 1}, std::vector<double>{1, -1}));
  CHECK(conv1d(x, diff).value() == T({3, 1}, std::vector<double>{-1, -1, -1}));
  CHECK(code_of([&] { conv1d(tape.constant(T({2, 1})), tape.constant(T({3, 1, 1}))); }) == ErrorCode::Dimension);
}

TEST_CASE("conv1d gradient matches finite differences") {
  Rng rng(3);
  ParameterSet<double> ps;
  auto& x = ps.add("x", random_uniform<double>({7, 3}, rng));
  auto& k = ps.add("k", random_uniform<double>({3, 3, 2}, rng));
  auto w = random_uniform<double>({5, 2}, rng);
  auto report = gradcheck(ps, [&](Tape<double>& t) { return sum(mul(conv1d(t.parameter(x), t.parameter(k)), t.constant(w))); }, 4);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("batched conv1d equals per-item conv1d") {
  Rng rng(5);
  auto X = random_uniform<double>({3, 6, 4}, rng);
  auto K = random_uniform<double>({4, 4, 5}, rng);
  Tape<double> tape(false);
  auto out = conv1d(tape.constant(X), tape.constant(K)).value();
  for (std::size_t n = 0; n < 3; ++n) {
    T item({6, 4}, std::vector<double>(X.data() + n * 24, X.data() + (n + 1) * 24));
    auto single = conv1d(tape.constant(item), tape.constant(K)).value();
    for (std::size_t i = 0; i < single.size(); ++i) CHECK(out[n * single.size() + i] == doctest::Approx(single[i]).epsilon(1e-14));
  }
}

TEST_CASE("max_over_time examples and tie rule") {
  Tape<double> tape;
  CHECK(max_over_time(tape.constant(T::matrix({{1, 5}, {3, 2}}))).value() == T::vector({3, 5}));

  ParameterSet<double> ps;
  auto& c = ps.add("c", T({3, 2}, 7.0));
  Tape<double> t2;
  t2.backward(sum(max_over_time(t2.parameter(c))));
  CHECK(c.grad == T::matrix({{1, 1}, {0, 0}, {0, 0}}));

  CHECK(code_of([&] { max_over_time(tape.constant(T({1, 3, 2})), {0}); }) == ErrorCode::Dimension);
}

TEST_CASE("max_over_time matches a column scan") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto X = random_uniform<double>({6, 4}, rng);
    Tape<double> tape(false);
    auto got = max_over_time(tape.constant(X)).value();
    for (std::size_t c = 0; c < 4; ++c) {
      double best = X.at(0, c);
      for (std::size_t r = 1; r < 6; ++r) best = std::max(best, X.at(r, c));
      CHECK(got[c] == best);
    }
  }
}

TEST_CASE("pointwise values") {
  Tape<double> tape;
  auto z = tape.constant(T::vector({0}));
  CHECK(vsigmoid(z).value()[0] == 0.5);
  CHECK(vtanh(z).value()[0] == 0.0);
  CHECK(vrelu(tape.constant(T::vector({-1}))).value()[0] == 0.0);
}

TEST_CASE("softmax_xent examples") {
  Tape<double> tape;
  CHECK(softmax_xent(tape.constant(T::vector({0, 0})), 0).value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  auto big = softmax_xent(tape.constant(T::vector({1000, 0})), 0).value().item();
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(0.0));
  CHECK(code_of([&] { softmax_xent(tape.constant(T::vector({0, 0})), 2); }) == ErrorCode::Index);
  CHECK(code_of([&] { softmax_xent(tape.constant(T::vector({0, 0})), -1); }) == ErrorCode::Index);
}

TEST_CASE("softmax sums to one for arbitrary finite logits") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto logits = random_uniform<double>({1, 17}, rng, -700.0, 700.0);
    auto p = softmax(logits);
    double s = 0;
    for (auto v : p.values()) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

// 100 random instances of every differentiable primitive.
TEST_CASE("primitive gradients on random instances") {
  Rng rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  double worst = 0;
  std::string worst_op;
  auto track = [&](const char* op, double err) {
    if (err > worst) {
      worst = err;
      worst_op = op;
    }
  };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    const auto seed = std::uint64_t(trial);
    {
      ParameterSet<double> ps;
      auto& a = ps.add("a", random_uniform<double>({m, k}, rng));
      auto& b = ps.add("b", random_uniform<double>({k, n}, rng));
      auto w = random_uniform<double>({m, n}, rng);
      track("matmul", gradcheck(ps, [&](Tape<double>& t) { return sum(mul(matmul(t.parameter(a), t.parameter(b)), t.constant(w))); }, seed).max_rel_error);
    }
    {
      ParameterSet<double> ps;
      auto& a = ps.add("a", random_uniform<double>({m, k}, rng));
      auto& b = ps.add("b", random_uniform<double>({n, k}, rng));
      auto w = random_uniform<double>({m, n}, rng);
      track("matmul_nt", gradcheck(ps, [&](Tape<double>& t) { return sum(mul(matmul_nt(t.parameter(a), t.parameter(b)), t.constant(w))); }, seed).max_rel_error);
    }
    for (auto fn : {Activation::Tanh, Activation::Sigmoid, Activation::Relu}) {
      ParameterSet<double> ps;
      auto& x = ps.add("x", random_uniform<double>({m, n}, rng));
      auto w = random_uniform<double>({m, n}, rng);
      track("pointwise", gradcheck(ps, [&](Tape<double>& t) { return sum(mul(pointwise(fn, t.parameter(x)), t.constant(w))); }, seed).max_rel_error);
    }
    {
      const std::size_t T_ = 6 + dim(rng), C = dim(rng), O = dim(rng), kw = 1 + dim(rng);
      ParameterSet<double> ps;
      auto& x = ps.add("x", random_uniform<double>({2, T_, C}, rng));
      auto& kk = ps.add("k", random_uniform<double>({kw, C, O}, rng));
      const std::vector<std::size_t> lens{T_ - kw + 1, std::max<std::size_t>(1, T_ - kw - 1)};
      auto w = random_uniform<double>({2, O}, rng);
      track("conv1d+max", gradcheck(ps, [&](Tape<double>& t) {
              return sum(mul(max_over_time(conv1d(t.parameter(x), t.parameter(kk)), lens), t.constant(w)));
            }, seed).max_rel_error);
    }
    {
      const std::size_t V = 2 + dim(rng);
      ParameterSet<double> ps;
      auto& l = ps.add("l", random_uniform<double>({m, V}, rng, -3.0, 3.0));
      std::vector<int> targets(m);
      for (auto& tg : targets) tg = int(rng() % V);
      targets[0] = -1;
      track("softmax_xent_rows", gradcheck(ps, [&](Tape<double>& t) { return softmax_xent_rows(t.parameter(l), targets); }, seed).max_rel_error);
    }
    {
      const std::size_t I = dim(rng), H = dim(rng);
      ParameterSet<double> ps;
      auto& mem = ps.add("mem", random_uniform<double>({2, I, H}, rng));
      auto& q = ps.add("q", random_uniform<double>({2, H}, rng));
      const std::vector<std::size_t> lens{I, std::max<std::size_t>(1, I / 2)};
      auto w = random_uniform<double>({2, H}, rng);
      track("attention", gradcheck(ps, [&](Tape<double>& t) {
              auto mv = t.parameter(mem);
              auto alpha = masked_softmax(batched_dot(mv, t.parameter(q)), lens);
              return sum(mul(weighted_sum(mv, alpha), t.constant(w)));
            }, seed).max_rel_error);
    }
    {
      ParameterSet<double> ps;
      auto& a = ps.add("a", random_uniform<double>({m, k}, rng));
      auto& b = ps.add("b", random_uniform<double>({m, n}, rng));
      auto& bias = ps.add("bias", random_uniform<double>({k + n}, rng));
      auto& table = ps.add("table", random_uniform<double>({4, k + n}, rng));
      std::vector<int> ids(m);
      for (auto& id : ids) id = int(rng() % 4);
      std::vector<std::uint8_t> mask(m);
      for (auto& v : mask) v = std::uint8_t(rng() % 2);
      auto w = random_uniform<double>({m, k + n}, rng);
      track("structural", gradcheck(ps, [&](Tape<double>& t) {
              auto cat = add_bias(concat_cols<double>({t.parameter(a), t.parameter(b)}), t.parameter(bias));
              auto rows = gather_rows(t.parameter(table), ids);
              auto mixed = blend_rows(mask, cat, one_minus(rows));
              auto stacked = concat_rows<double>({mixed, scale(slice_cols(sub(mixed, rows), 0, k + n), 0.5)});
              return sum(mul(slice_cols(stacked, 0, k + n), concat_rows<double>({t.constant(w), t.constant(w)})));
            }, seed).max_rel_error);
    }
  }
  INFO("worst primitive: " << worst_op);
  CHECK(worst < 1e-4);
}

TEST_CASE("lstm_cell with zero weights and state returns zero") {
  Tape<double> tape;
  LstmWeights<double> w{tape.constant(T({3, 8})), tape.constant(T({2, 8})), tape.constant(T({8}))};
  LstmState<double> s{tape.constant(T({1, 2})), tape.constant(T({1, 2}))};
  auto out = lstm_cell(w, tape.constant(T({1, 3})), s);
  CHECK(out.h.value() == T({1, 2}));
}

TEST_CASE("lstm_cell matches hand-unrolled gate formulas") {
  // 2-unit cell, 1-dim input.
  const double x = 0.5, h0[2] = {0.1, -0.2}, c0[2] = {0.3, 0.4};
  const double wx[8] = {0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.15, -0.3};
  const double wh[2][8] = {{0.2, 0.1, -0.1, 0.3, 0.05, -0.05, 0.25, 0.1}, {-0.3, 0.2, 0.1, -0.2, 0.1, 0.3, -0.1, 0.05}};
  const double b[8] = {0.0, 0.1, 1.0, 1.0, -0.1, 0.2, 0.05, -0.05};
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double pre[8];
  for (int j = 0; j < 8; ++j) pre[j] = x * wx[j] + h0[0] * wh[0][j] + h0[1] * wh[1][j] + b[j];
  double h_expected[2], c_expected[2];
  for (int u = 0; u < 2; ++u) {
    const double i = sig(pre[u]), f = sig(pre[2 + u]), g = std::tanh(pre[4 + u]), o = sig(pre[6 + u]);
    c_expected[u] = f * c0[u] + i * g;
    h_expected[u] = o * std::tanh(c_expected[u]);
  }
  Tape<double> tape;
  LstmWeights<double> w{tape.constant(T({1, 8}, std::vector<double>(wx, wx + 8))),
                        tape.constant(T({2, 8}, std::vector<double>{&wh[0][0], &wh[0][0] + 16})),
                        tape.constant(T({8}, std::vector<double>(b, b + 8)))};
  LstmState<double> s{tape.constant(T({1, 2}, std::vector<double>{h0[0], h0[1]})),
                      tape.constant(T({1, 2}, std::vector<double>{c0[0], c0[1]}))};
  auto out = lstm_cell(w, tape.constant(T({1, 1}, x)), s);
  for (int u = 0; u < 2; ++u) {
    CHECK(out.h.value()[std::size_t(u)] == doctest::Approx(h_expected[u]).epsilon(1e-14));
    CHECK(out.c.value()[std::size_t(u)] == doctest::Approx(c_expected[u]).epsilon(1e-14));
  }
}

TEST_CASE("lstm_cell gradient through three unrolled steps") {
  Rng rng(13);
  ParameterSet<double> ps;
  auto& wx = ps.add("wx", random_uniform<double>({3, 12}, rng, -0.5, 0.5));
  auto& wh = ps.add("wh", random_uniform<double>({3, 12}, rng, -0.5, 0.5));
  auto& b = ps.add("b", random_uniform<double>({12}, rng, -0.5, 0.5));
  auto& x = ps.add("x", random_uniform<double>({3, 2, 3}, rng));
  auto report = gradcheck(ps, [&](Tape<double>& t) {
    LstmWeights<double> w{t.parameter(wx), t.parameter(wh), t.parameter(b)};
    LstmState<double> s{t.constant(T({2, 3})), t.constant(T({2, 3}))};
    auto xs = reshape(t.parameter(x), Shape{6, 3});
    Var<double> total;
    for (std::size_t step = 0; step < 3; ++step) {
      std::vector<int> rows{int(2 * step), int(2 * step + 1)};
      s = lstm_cell(w, gather_rows(xs, rows), s);
    }
    return sum(mul(s.h, s.c));
  }, 14);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("lstm_cell rejects mismatched state") {
  Tape<double> tape;
  LstmWeights<double> w{tape.constant(T({3, 8})), tape.constant(T({2, 8})), tape.constant(T({8}))};
  LstmState<double> s{tape.constant(T({1, 3})), tape.constant(T({1, 3}))};
  CHECK(code_of([&] { lstm_cell(w, tape.constant(T({1, 3})), s); }) == ErrorCode::Dimension);
}

TEST_CASE("backward basics") {
  ParameterSet<double> ps;
  auto& x = ps.add("x", T::vector({1, 2, 3}));
  {
    Tape<double> tape;
    tape.backward(sum(tape.parameter(x)));
    CHECK(x.grad == T::vector({1, 1, 1}));
    CHECK(tape.size() == 0);
  }
  x.zero_grad();
  {
    Tape<double> tape;
    auto v = tape.parameter(x);
    tape.backward(sum(add(v, v)));
    CHECK(x.grad == T::vector({2, 2, 2}));
  }
  CHECK(x.value == T::vector({1, 2, 3}));

  Tape<double> tape;
  auto loss = sum(tape.parameter(x));
  tape.clear();
  CHECK(code_of([&] { tape.backward(loss); }) == ErrorCode::State);
  CHECK(code_of([&] { Var<double> none; tape.backward(none); }) == ErrorCode::State);
}

TEST_CASE("sgd examples") {
  ParameterSet<double> ps;
  auto& p = ps.add("p", T::vector({1}));
  p.grad[0] = 2;
  Sgd<double> sgd(0.5);
  sgd.step(ps);
  CHECK(p.value[0] == 0.0);
  CHECK(p.grad[0] == 0.0);

  sgd.step(ps);
  CHECK(p.value[0] == 0.0);

  ParameterSet<double> q;
  auto& v = q.add("v", T::vector({4}));
  Sgd<double> sgd2(0.1);
  Tape<double> tape;
  auto pv = tape.parameter(v);
  tape.backward(scale(sum(mul(pv, pv)), 0.5));
  sgd2.step(q);
  CHECK(v.value[0] == doctest::Approx(3.6).epsilon(1e-15));

  v.grad = T::vector({1, 2});
  CHECK(code_of([&] { sgd2.step(q); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { sgd2.set_learning_rate(0.2); }) == ErrorCode::Config);
}

TEST_CASE("sgd clipping caps the global norm") {
  ParameterSet<double> ps;
  auto& p = ps.add("p", T::vector({0, 0}));
  p.grad = T::vector({3, 4});
  Sgd<double> sgd(1.0, 1.0);
  CHECK(sgd.step(ps) == doctest::Approx(5.0));
  CHECK(p.value[0] == doctest::Approx(-0.6));
  CHECK(p.value[1] == doctest::Approx(-0.8));
}

TEST_CASE("identical seeds give bitwise identical parameters") {
  auto run = [] {
    Rng rng(42);
    ParameterSet<float> ps;
    auto& w = ps.add("w", random_uniform<float>({4, 3}, rng, -0.1f, 0.1f));
    auto data = random_uniform<float>({8, 4}, rng);
    Sgd<float> sgd(0.5f);
    for (int step = 0; step < 25; ++step) {
      Tape<float> tape;
      auto out = vtanh(matmul(tape.constant(data), tape.parameter(w)));
      tape.backward(softmax_xent_rows(out, {0, 1, 2, 0, 1, 2, 0, 1}));
      sgd.step(ps);
    }
    return encode_archive(to_archive(ps));
  };
  CHECK(run() == run());
}

TEST_CASE("archive round trip is bit exact") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    NamedTensors ts;
    const int count = 1 + int(rng() % 4);
    for (int i = 0; i < count; ++i) {
      Shape s;
      const std::size_t rank = rng() % 4;
      for (std::size_t r = 0; r < rank; ++r) s.push_back(1 + rng() % 4);
      auto t = random_uniform<float>(s, rng, -1e6f, 1e6f);
      ts.emplace_back("t" + std::to_string(i) + "\xc3\xa9", t);
    }
    const auto bytes = encode_archive(ts);
    const auto back = decode_archive(bytes);
    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      CHECK(back[i].first == ts[i].first);
      CHECK(back[i].second == ts[i].second);
    }
    CHECK(encode_archive(back) == bytes);
  }
}

TEST_CASE("archive header layout") {
  NamedTensors ts{{"ab", Tensor<float>({2}, std::vector<float>{1.0f, -2.0f})}};
  const auto bytes = encode_archive(ts);
  CHECK(bytes.substr(0, 6) == "CGNMT1");
  // magic + count + name length + name + rank + one dim + two floats
  CHECK(bytes.size() == 6 + 4 + 4 + 2 + 4 + 8 + 8);
  CHECK(std::uint8_t(bytes[6]) == 1);
  CHECK(std::uint8_t(bytes[bytes.size() - 1]) == 0xC0);  // -2.0f = 0xC0000000, little-endian
  CHECK(code_of([&] { decode_archive("CGNMT0" + bytes.substr(6)); }) == ErrorCode::Format);
  CHECK(code_of([&] { decode_archive(bytes.substr(0, bytes.size() - 1)); }) == ErrorCode::Format);
}
