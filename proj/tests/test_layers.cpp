#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmdrnn/layers.hpp"
#include "grad_check.hpp"

using namespace cmdrnn;
using testsupport::grad_check;
using testsupport::random_tensor;
using testsupport::random_tensor_away_from_zero;

namespace {

// Naive sliding-window oracle, written independently of the tape op.
std::vector<double> conv_oracle(const std::vector<double>& x, const std::vector<double>& k,
                                std::size_t stride) {
  std::vector<double> out;
  for (std::size_t p = 0; p + k.size() <= x.size(); p += stride) {
    double acc = 0.0;
    for (std::size_t t = 0; t < k.size(); ++t) acc += k[t] * x[p + t];
    out.push_back(acc);
  }
  return out;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VanillaCell zero_vanilla(std::size_t in, std::size_t hidden, Activation act) {
  VanillaCell c;
  c.w_in = Tensor(Shape{hidden, in});
  c.w_rec = Tensor(Shape{hidden, hidden});
  c.bias = Tensor(Shape{hidden});
  c.act = act;
  return c;
}

LstmCell zero_lstm(std::size_t in, std::size_t hidden) {
  LstmCell c;
  auto w = [&] { return Tensor(Shape{hidden, in}); };
  auto u = [&] { return Tensor(Shape{hidden, hidden}); };
  auto b = [&] { return Tensor(Shape{hidden}); };
  c.w_i = w(); c.u_i = u(); c.b_i = b();
  c.w_f = w(); c.u_f = u(); c.b_f = b();
  c.w_o = w(); c.u_o = u(); c.b_o = b();
  c.w_g = w(); c.u_g = u(); c.b_g = b();
  return c;
}

GruCell zero_gru(std::size_t in, std::size_t hidden) {
  GruCell c;
  auto w = [&] { return Tensor(Shape{hidden, in}); };
  auto u = [&] { return Tensor(Shape{hidden, hidden}); };
  auto b = [&] { return Tensor(Shape{hidden}); };
  c.w_z = w(); c.u_z = u(); c.b_z = b();
  c.w_r = w(); c.u_r = u(); c.b_r = b();
  c.w_h = w(); c.u_h = u(); c.b_h = b();
  return c;
}

}  // namespace

TEST_CASE("conv1d output length formula") {
  // L=489, kw=11, stride=2 -> 240
  rng::Engine eng(3);
  Conv1dLayer layer = make_conv1d(eng, 4, 1, 11, 2, Activation::linear);
  Tape t;
  Bindings reg;
  Var x = t.leaf(random_tensor(eng, {1, 489}));
  Var y = conv1d(t, x, bind(t, reg, layer));
  CHECK(t.value(y).extent(0) == 4);
  CHECK(t.value(y).extent(1) == 240);
}

TEST_CASE("conv1d worked examples") {
  Tape t;
  Bindings reg;
  SUBCASE("identity kernel") {
    Conv1dLayer layer;
    layer.kernels = Tensor(Shape{1, 1, 1}, {1.0});
    layer.bias = Tensor(Shape{1});
    layer.stride = 1;
    layer.act = Activation::linear;
    Var x = t.leaf(Tensor(Shape{1, 4}, {1, 2, 3, 4}));
    const Tensor& y = t.value(conv1d(t, x, bind(t, reg, layer)));
    for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == static_cast<double>(i + 1));
  }
  SUBCASE("hand convolution") {
    Conv1dLayer layer;
    layer.kernels = Tensor(Shape{1, 1, 2}, {1.0, 1.0});
    layer.bias = Tensor(Shape{1});
    layer.stride = 2;
    layer.act = Activation::linear;
    Var x = t.leaf(Tensor(Shape{1, 4}, {1, 2, 3, 4}));
    const Tensor& y = t.value(conv1d(t, x, bind(t, reg, layer)));
    CHECK(y.size() == 2);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 7.0);
  }
  SUBCASE("input shorter than kernel") {
    Conv1dLayer layer;
    layer.kernels = Tensor(Shape{1, 1, 5}, {1, 1, 1, 1, 1});
    layer.bias = Tensor(Shape{1});
    layer.stride = 1;
    Var x = t.leaf(Tensor(Shape{1, 3}));
    CHECK_THROWS_AS(conv1d(t, x, bind(t, reg, layer)), ShapeError);
  }
}

TEST_CASE("conv1d length property against sliding-window oracle") {
  rng::Engine eng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t kw = 1 + rng::index(eng, 8);
    const std::size_t L = kw + rng::index(eng, 40);
    const std::size_t stride = 1 + rng::index(eng, 4);
    Tensor x = random_tensor(eng, {1, L});
    Tensor k = random_tensor(eng, {1, 1, kw});

    Tape t;
    Var y = t.conv1d(t.leaf(x), t.leaf(k), t.leaf(Tensor(Shape{1})), static_cast<int>(stride));
    const auto oracle = conv_oracle(x.values(), k.values(), stride);
    CHECK(t.value(y).size() == oracle.size());
    CHECK(t.value(y).size() == (L - kw) / stride + 1);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(t.value(y)[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("maxpool1d worked examples") {
  Tape t;
  SUBCASE("constant nonnegative input is preserved") {
    Var x = t.leaf(Tensor::full({1, 6}, 3.5));
    const Tensor& y = t.value(maxpool1d(t, x, 2, 2));
    for (double v : y.values()) CHECK(v == 3.5);
  }
  SUBCASE("hand oracle") {
    Var x = t.leaf(Tensor(Shape{1, 4}, {1, 3, 2, 5}));
    const Tensor& y = t.value(maxpool1d(t, x, 2, 2));
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 5.0);
  }
  SUBCASE("negative constant clamps to zero after relu") {
    Var x = t.leaf(Tensor::full({1, 4}, -2.0));
    for (double v : t.value(maxpool1d(t, x, 2, 2)).values()) CHECK(v == 0.0);
  }
  SUBCASE("window larger than input") {
    Var x = t.leaf(Tensor(Shape{1, 3}));
    CHECK_THROWS_AS(maxpool1d(t, x, 4, 1), ShapeError);
  }
}

TEST_CASE("flatten") {
  Tape t;
  Var x = t.leaf(Tensor::mat({{1, 2}, {3, 4}}));
  const Tensor& f = t.value(flatten(t, x));
  CHECK(f.shape() == Shape{4});
  CHECK(f[1] == 2.0);
  CHECK(f[2] == 3.0);

  Var big = t.leaf(Tensor(Shape{100, 240}));
  CHECK(t.value(flatten(t, big)).size() == 24000);

  // flatten then reshape back is the identity
  Var back = t.reshape(flatten(t, x), {2, 2});
  for (std::size_t i = 0; i < 4; ++i) CHECK(t.value(back)[i] == t.value(x)[i]);
}

TEST_CASE("dense worked examples") {
  Tape t;
  Bindings reg;
  SUBCASE("identity") {
    DenseLayer l;
    l.weight = Tensor::mat({{1, 0}, {0, 1}});
    l.bias = Tensor(Shape{2});
    l.act = Activation::linear;
    Var h = t.leaf(Tensor::vec({2.5, -1.0}));
    const Tensor& y = t.value(dense(t, h, bind(t, reg, l)));
    CHECK(y[0] == 2.5);
    CHECK(y[1] == -1.0);
  }
  SUBCASE("hand oracle") {
    DenseLayer l;
    l.weight = Tensor::mat({{1, 1}});
    l.bias = Tensor(Shape{1}, {1.0});
    l.act = Activation::linear;
    Var h = t.leaf(Tensor::vec({2, 3}));
    CHECK(t.value(dense(t, h, bind(t, reg, l)))[0] == 6.0);
  }
  SUBCASE("zero weights with sigmoid give 0.5") {
    DenseLayer l;
    l.weight = Tensor(Shape{3, 2});
    l.bias = Tensor(Shape{3});
    l.act = Activation::sigmoid;
    Var h = t.leaf(Tensor::vec({9, -9}));
    for (double v : t.value(dense(t, h, bind(t, reg, l))).values()) CHECK(v == 0.5);
  }
}

TEST_CASE("rnn_step") {
  Tape t;
  Bindings reg;
  SUBCASE("all-zero parameters saturate sigmoid at 0.5") {
    VanillaCell c = zero_vanilla(3, 4, Activation::sigmoid);
    Var x = t.leaf(Tensor::vec({1, -2, 3}));
    Var h0 = t.leaf(Tensor(Shape{4}));
    for (double v : t.value(rnn_step(t, x, h0, bind(t, reg, c))).values()) CHECK(v == 0.5);
  }
  SUBCASE("memoryless identity cell") {
    VanillaCell c = zero_vanilla(3, 3, Activation::linear);
    c.w_in = Tensor::mat({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    Var x = t.leaf(Tensor::vec({1, -2, 3}));
    Var h0 = t.leaf(Tensor::vec({5, 5, 5}));
    const Tensor& h1 = t.value(rnn_step(t, x, h0, bind(t, reg, c)));
    CHECK(h1[0] == 1.0);
    CHECK(h1[1] == -2.0);
    CHECK(h1[2] == 3.0);
  }
  SUBCASE("random instance matches an independently coded step") {
    rng::Engine eng(5);
    VanillaCell c = make_vanilla(eng, 3, 2, Activation::sigmoid);
    Tensor x = random_tensor(eng, {3});
    Tensor h0 = random_tensor(eng, {2});
    const Tensor& h1 = t.value(rnn_step(t, t.leaf(x), t.leaf(h0), bind(t, reg, c)));
    for (std::size_t i = 0; i < 2; ++i) {
      double pre = c.bias[i];
      for (std::size_t j = 0; j < 3; ++j) pre += c.w_in.at(i, j) * x[j];
      for (std::size_t j = 0; j < 2; ++j) pre += c.w_rec.at(i, j) * h0[j];
      CHECK(h1[i] == doctest::Approx(sigmoid_ref(pre)).epsilon(1e-14));
    }
  }
}

TEST_CASE("lstm_step closed forms and oracle") {
  Tape t;
  Bindings reg;
  SUBCASE("all-zero parameters, zero cell state") {
    LstmCell c = zero_lstm(2, 3);
    Var x = t.leaf(Tensor::vec({1, 2}));
    LstmState s{t.leaf(Tensor(Shape{3})), t.leaf(Tensor(Shape{3}))};
    LstmState out = lstm_step(t, x, s, bind(t, reg, c));
    for (double v : t.value(out.c).values()) CHECK(v == 0.0);
    for (double v : t.value(out.h).values()) CHECK(v == 0.0);
  }
  SUBCASE("all-zero parameters, nonzero cell state") {
    LstmCell c = zero_lstm(2, 1);
    const double c0 = 0.8;
    Var x = t.leaf(Tensor::vec({1, 2}));
    LstmState s{t.leaf(Tensor(Shape{1})), t.leaf(Tensor::vec({c0}))};
    LstmState out = lstm_step(t, x, s, bind(t, reg, c));
    CHECK(t.value(out.c)[0] == doctest::Approx(0.5 * c0).epsilon(1e-14));
    CHECK(t.value(out.h)[0] == doctest::Approx(0.5 * std::tanh(0.5 * c0)).epsilon(1e-14));
  }
  SUBCASE("random instance vs independent oracle") {
    rng::Engine eng(9);
    LstmCell c = make_lstm(eng, 2, 2);
    Tensor x = random_tensor(eng, {2});
    Tensor h0 = random_tensor(eng, {2});
    Tensor c0 = random_tensor(eng, {2});
    LstmState out = lstm_step(t, t.leaf(x), LstmState{t.leaf(h0), t.leaf(c0)}, bind(t, reg, c));
    for (std::size_t i = 0; i < 2; ++i) {
      auto pre = [&](const Tensor& w, const Tensor& u, const Tensor& b) {
        double acc = b[i];
        for (std::size_t j = 0; j < 2; ++j) acc += w.at(i, j) * x[j] + u.at(i, j) * h0[j];
        return acc;
      };
      const double ig = sigmoid_ref(pre(c.w_i, c.u_i, c.b_i));
      const double fg = sigmoid_ref(pre(c.w_f, c.u_f, c.b_f));
      const double og = sigmoid_ref(pre(c.w_o, c.u_o, c.b_o));
      const double gg = std::tanh(pre(c.w_g, c.u_g, c.b_g));
      const double c1 = fg * c0[i] + ig * gg;
      CHECK(t.value(out.c)[i] == doctest::Approx(c1).epsilon(1e-13));
      CHECK(t.value(out.h)[i] == doctest::Approx(og * std::tanh(c1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("gru_step closed forms and oracle") {
  Tape t;
  Bindings reg;
  SUBCASE("all-zero parameters halve the previous state") {
    GruCell c = zero_gru(2, 3);
    Var x = t.leaf(Tensor::vec({1, 2}));
    Var h0 = t.leaf(Tensor::vec({0.4, -0.6, 1.0}));
    const Tensor& h1 = t.value(gru_step(t, x, h0, bind(t, reg, c)));
    CHECK(h1[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(h1[1] == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK(h1[2] == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("update gate forced to zero keeps the previous state") {
    GruCell c = zero_gru(2, 2);
    c.b_z = Tensor::full({2}, -40.0);
    Var x = t.leaf(Tensor::vec({1, 2}));
    Var h0 = t.leaf(Tensor::vec({0.7, -0.2}));
    const Tensor& h1 = t.value(gru_step(t, x, h0, bind(t, reg, c)));
    CHECK(h1[0] == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(h1[1] == doctest::Approx(-0.2).epsilon(1e-10));
  }
  SUBCASE("random instance vs independent oracle") {
    rng::Engine eng(21);
    GruCell c = make_gru(eng, 3, 2);
    Tensor x = random_tensor(eng, {3});
    Tensor h0 = random_tensor(eng, {2});
    const Tensor& h1 = t.value(gru_step(t, t.leaf(x), t.leaf(h0), bind(t, reg, c)));

    auto pre = [&](std::size_t i, const Tensor& w, const Tensor& u, const Tensor& hh, const Tensor& b) {
      double acc = b[i];
      for (std::size_t j = 0; j < 3; ++j) acc += w.at(i, j) * x[j];
      for (std::size_t j = 0; j < 2; ++j) acc += u.at(i, j) * hh[j];
      return acc;
    };
    Tensor gated(Shape{2});
    for (std::size_t i = 0; i < 2; ++i) {
      gated[i] = sigmoid_ref(pre(i, c.w_r, c.u_r, h0, c.b_r)) * h0[i];
    }
    for (std::size_t i = 0; i < 2; ++i) {
      const double z = sigmoid_ref(pre(i, c.w_z, c.u_z, h0, c.b_z));
      const double cand = std::tanh(pre(i, c.w_h, c.u_h, gated, c.b_h));
      const double expect = (1.0 - z) * h0[i] + z * cand;
      CHECK(h1[i] == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("unroll") {
  rng::Engine eng(31);
  SUBCASE("one step equals a single cell application") {
    VanillaCell c = make_vanilla(eng, 3, 2, Activation::sigmoid);
    Tensor x = random_tensor(eng, {3});
    Tape t;
    Bindings reg;
    BoundVanilla b = bind(t, reg, c);
    std::vector<Var> frames{t.leaf(x)};
    Var hu = unroll(t, frames, BoundCell{b}, 2);
    Var hs = rnn_step(t, t.leaf(x), t.leaf(Tensor(Shape{2})), b);
    for (std::size_t i = 0; i < 2; ++i) CHECK(t.value(hu)[i] == t.value(hs)[i]);
  }
  SUBCASE("memoryless cell depends only on the last frame") {
    VanillaCell c = make_vanilla(eng, 3, 2, Activation::sigmoid);
    c.w_rec.fill(0.0);
    Tensor last = random_tensor(eng, {3});
    auto run = [&](const Tensor& first) {
      Tape t;
      Bindings reg;
      BoundVanilla b = bind(t, reg, c);
      std::vector<Var> frames{t.leaf(first), t.leaf(last)};
      return t.value(unroll(t, frames, BoundCell{b}, 2));
    };
    Tensor ha = run(random_tensor(eng, {3}));
    Tensor hb = run(random_tensor(eng, {3}));
    for (std::size_t i = 0; i < 2; ++i) CHECK(ha[i] == hb[i]);
  }
  SUBCASE("five steps equal manual iteration exactly") {
    GruCell c = make_gru(eng, 3, 4);
    std::vector<Tensor> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(random_tensor(eng, {3}));

    Tape t;
    Bindings reg;
    BoundGru b = bind(t, reg, c);
    std::vector<Var> frames;
    for (const auto& x : xs) frames.push_back(t.leaf(x));
    Var hu = unroll(t, frames, BoundCell{b}, 4);

    Var h = t.leaf(Tensor(Shape{4}));
    for (const auto& x : xs) h = gru_step(t, t.leaf(x), h, b);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.value(hu)[i] == t.value(h)[i]);
  }
  SUBCASE("empty sequence rejected") {
    Tape t;
    Bindings reg;
    VanillaCell c = make_vanilla(eng, 3, 2, Activation::sigmoid);
    BoundVanilla b = bind(t, reg, c);
    std::vector<Var> frames;
    CHECK_THROWS_AS(unroll(t, frames, BoundCell{b}, 2), ShapeError);
  }
}

TEST_CASE("layer gradient checks") {
  constexpr double kTol = 1e-4;
  rng::Engine eng(77);

  SUBCASE("conv -> pool -> flatten -> dense composite") {
    for (int i = 0; i < 20; ++i) {
      Tensor x = random_tensor(eng, {1, 16});
      Tensor k = random_tensor(eng, {3, 1, 4});
      Tensor kb = random_tensor(eng, {3});
      Tensor w = random_tensor(eng, {2, 3 * 3});
      Tensor wb = random_tensor(eng, {2});
      const double err = grad_check({x, k, kb, w, wb}, [](Tape& t, std::vector<Var>& vs) {
        Var c = t.sigmoid(t.conv1d(vs[0], vs[1], vs[2], 2));
        Var p = t.relu(t.maxpool1d(c, 2, 2));
        Var f = t.reshape(p, Shape{t.value(p).size()});
        Var y = t.add(t.matmul(vs[3], f), vs[4]);
        return t.sum(t.square(y));
      });
      CHECK(err < kTol);
    }
  }
  SUBCASE("vanilla cell") {
    for (int i = 0; i < 20; ++i) {
      Tensor w = random_tensor(eng, {3, 4});
      Tensor u = random_tensor(eng, {3, 3});
      Tensor b = random_tensor(eng, {3});
      Tensor x = random_tensor(eng, {4});
      Tensor h0 = random_tensor(eng, {3});
      const double err = grad_check({w, u, b}, [&](Tape& t, std::vector<Var>& vs) {
        Var pre = t.add(t.add(t.matmul(vs[0], t.leaf(x)), t.matmul(vs[1], t.leaf(h0))), vs[2]);
        return t.sum(t.square(t.sigmoid(pre)));
      });
      CHECK(err < kTol);
    }
  }
  SUBCASE("lstm cell end to end") {
    for (int i = 0; i < 20; ++i) {
      rng::Engine build_eng(1000 + i);
      LstmCell cell = make_lstm(build_eng, 3, 2);
      Tensor x = random_tensor(eng, {3});
      Tensor h0 = random_tensor(eng, {2});
      Tensor c0 = random_tensor(eng, {2});
      std::vector<Tensor> params{cell.w_i, cell.u_i, cell.b_i, cell.w_f, cell.u_f, cell.b_f,
                                 cell.w_o, cell.u_o, cell.b_o, cell.w_g, cell.u_g, cell.b_g};
      const double err = grad_check(params, [&](Tape& t, std::vector<Var>& vs) {
        BoundLstm b{vs[0], vs[1], vs[2], vs[3], vs[4], vs[5], vs[6], vs[7], vs[8], vs[9], vs[10], vs[11]};
        LstmState out = lstm_step(t, t.leaf(x), LstmState{t.leaf(h0), t.leaf(c0)}, b);
        return t.sum(t.square(out.h));
      });
      CHECK(err < kTol);
    }
  }
  SUBCASE("gru cell end to end") {
    for (int i = 0; i < 20; ++i) {
      rng::Engine build_eng(2000 + i);
      GruCell cell = make_gru(build_eng, 3, 2);
      Tensor x = random_tensor(eng, {3});
      Tensor h0 = random_tensor(eng, {2});
      std::vector<Tensor> params{cell.w_z, cell.u_z, cell.b_z, cell.w_r, cell.u_r,
                                 cell.b_r, cell.w_h, cell.u_h, cell.b_h};
      const double err = grad_check(params, [&](Tape& t, std::vector<Var>& vs) {
        BoundGru b{vs[0], vs[1], vs[2], vs[3], vs[4], vs[5], vs[6], vs[7], vs[8]};
        return t.sum(t.square(gru_step(t, t.leaf(x), t.leaf(h0), b)));
      });
      CHECK(err < kTol);
    }
  }
  SUBCASE("unrolled vanilla sequence") {
    for (int i = 0; i < 20; ++i) {
      Tensor w = random_tensor(eng, {2, 3});
      Tensor u = random_tensor(eng, {2, 2});
      Tensor b = random_tensor(eng, {2});
      std::vector<Tensor> frames;
      for (int s = 0; s < 4; ++s) frames.push_back(random_tensor(eng, {3}));
      const double err = grad_check({w, u, b}, [&](Tape& t, std::vector<Var>& vs) {
        BoundVanilla cell{vs[0], vs[1], vs[2], Activation::tanh};
        std::vector<Var> fs;
        for (const auto& f : frames) fs.push_back(t.leaf(f));
        return t.sum(t.square(unroll(t, fs, BoundCell{cell}, 2)));
      });
      CHECK(err < kTol);
    }
  }
}
