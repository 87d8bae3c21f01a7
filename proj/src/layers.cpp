#include "cmdrnn/layers.hpp"

#include <cmath>

namespace cmdrnn {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
  }
  return "linear";
}

Activation activation_from_name(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

Var apply_activation(Tape& t, Var x, Activation act) {
  switch (act) {
    case Activation::linear: return x;
    case Activation::sigmoid: return t.sigmoid(x);
    case Activation::relu: return t.relu(x);
    case Activation::leaky_relu: return t.leaky_relu(x, kLeakySlope);
    case Activation::tanh: return t.tanh(x);
  }
  return x;
}

Tensor glorot_uniform(rng::Engine& eng, Shape shape, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng::uniform(eng, -a, a);
  return t;
}

DenseLayer make_dense(rng::Engine& eng, std::size_t in, std::size_t out, Activation act) {
  DenseLayer l;
  l.weight = glorot_uniform(eng, {out, in}, in, out);
  l.bias = Tensor(Shape{out});
  l.act = act;
  return l;
}

Conv1dLayer make_conv1d(rng::Engine& eng, std::size_t out_ch, std::size_t in_ch, std::size_t kernel_width,
                        int stride, Activation act) {
  Conv1dLayer l;
  l.kernels = glorot_uniform(eng, {out_ch, in_ch, kernel_width}, in_ch * kernel_width, out_ch * kernel_width);
  l.bias = Tensor(Shape{out_ch});
  l.stride = stride;
  l.act = act;
  return l;
}

VanillaCell make_vanilla(rng::Engine& eng, std::size_t in, std::size_t hidden, Activation act) {
  VanillaCell c;
  c.w_in = glorot_uniform(eng, {hidden, in}, in, hidden);
  c.w_rec = glorot_uniform(eng, {hidden, hidden}, hidden, hidden);
  c.bias = Tensor(Shape{hidden});
  c.act = act;
  return c;
}

LstmCell make_lstm(rng::Engine& eng, std::size_t in, std::size_t hidden) {
  auto w = [&] { return glorot_uniform(eng, {hidden, in}, in, hidden); };
  auto u = [&] { return glorot_uniform(eng, {hidden, hidden}, hidden, hidden); };
  LstmCell c;
  c.w_i = w(); c.u_i = u(); c.b_i = Tensor(Shape{hidden});
  c.w_f = w(); c.u_f = u(); c.b_f = Tensor::full({hidden}, 1.0);
  c.w_o = w(); c.u_o = u(); c.b_o = Tensor(Shape{hidden});
  c.w_g = w(); c.u_g = u(); c.b_g = Tensor(Shape{hidden});
  return c;
}

GruCell make_gru(rng::Engine& eng, std::size_t in, std::size_t hidden) {
  auto w = [&] { return glorot_uniform(eng, {hidden, in}, in, hidden); };
  auto u = [&] { return glorot_uniform(eng, {hidden, hidden}, hidden, hidden); };
  GruCell c;
  c.w_z = w(); c.u_z = u(); c.b_z = Tensor(Shape{hidden});
  c.w_r = w(); c.u_r = u(); c.b_r = Tensor(Shape{hidden});
  c.w_h = w(); c.u_h = u(); c.b_h = Tensor(Shape{hidden});
  return c;
}

BoundDense bind(Tape& t, Bindings& reg, DenseLayer& layer) {
  return BoundDense{reg.lease(t, layer.weight), reg.lease(t, layer.bias), layer.act};
}

BoundConv1d bind(Tape& t, Bindings& reg, Conv1dLayer& layer) {
  return BoundConv1d{reg.lease(t, layer.kernels), reg.lease(t, layer.bias), layer.stride, layer.act};
}

BoundVanilla bind(Tape& t, Bindings& reg, VanillaCell& cell) {
  return BoundVanilla{reg.lease(t, cell.w_in), reg.lease(t, cell.w_rec), reg.lease(t, cell.bias), cell.act};
}

BoundLstm bind(Tape& t, Bindings& reg, LstmCell& c) {
  return BoundLstm{reg.lease(t, c.w_i), reg.lease(t, c.u_i), reg.lease(t, c.b_i),
                   reg.lease(t, c.w_f), reg.lease(t, c.u_f), reg.lease(t, c.b_f),
                   reg.lease(t, c.w_o), reg.lease(t, c.u_o), reg.lease(t, c.b_o),
                   reg.lease(t, c.w_g), reg.lease(t, c.u_g), reg.lease(t, c.b_g)};
}

BoundGru bind(Tape& t, Bindings& reg, GruCell& c) {
  return BoundGru{reg.lease(t, c.w_z), reg.lease(t, c.u_z), reg.lease(t, c.b_z),
                  reg.lease(t, c.w_r), reg.lease(t, c.u_r), reg.lease(t, c.b_r),
                  reg.lease(t, c.w_h), reg.lease(t, c.u_h), reg.lease(t, c.b_h)};
}

Var conv1d(Tape& t, Var x, const BoundConv1d& p) {
  return apply_activation(t, t.conv1d(x, p.kernels, p.bias, p.stride), p.act);
}

Var maxpool1d(Tape& t, Var x, int window, int stride, Activation act) {
  return apply_activation(t, t.maxpool1d(x, window, stride), act);
}

Var flatten(Tape& t, Var x) {
  return t.reshape(x, Shape{t.value(x).size()});
}

Var dense(Tape& t, Var h, const BoundDense& p) {
  return apply_activation(t, t.add(t.matmul(p.w, h), p.b), p.act);
}

Var rnn_step(Tape& t, Var x, Var h_prev, const BoundVanilla& p) {
  Var pre = t.add(t.add(t.matmul(p.w_in, x), t.matmul(p.w_rec, h_prev)), p.bias);
  return apply_activation(t, pre, p.act);
}

LstmState lstm_step(Tape& t, Var x, LstmState s, const BoundLstm& p) {
  auto gate = [&](Var w, Var u, Var b) { return t.add(t.add(t.matmul(w, x), t.matmul(u, s.h)), b); };
  Var i = t.sigmoid(gate(p.w_i, p.u_i, p.b_i));
  Var f = t.sigmoid(gate(p.w_f, p.u_f, p.b_f));
  Var o = t.sigmoid(gate(p.w_o, p.u_o, p.b_o));
  Var g = t.tanh(gate(p.w_g, p.u_g, p.b_g));
  Var c = t.add(t.mul(f, s.c), t.mul(i, g));
  Var h = t.mul(o, t.tanh(c));
  return LstmState{h, c};
}

Var gru_step(Tape& t, Var x, Var h_prev, const BoundGru& p) {
  Var z = t.sigmoid(t.add(t.add(t.matmul(p.w_z, x), t.matmul(p.u_z, h_prev)), p.b_z));
  Var r = t.sigmoid(t.add(t.add(t.matmul(p.w_r, x), t.matmul(p.u_r, h_prev)), p.b_r));
  Var cand = t.tanh(t.add(t.add(t.matmul(p.w_h, x), t.matmul(p.u_h, t.mul(r, h_prev))), p.b_h));
  // h = (1 - z) * h_prev + z * cand
  Var keep = t.mul(t.sub(t.leaf(Tensor::scalar(1.0)), z), h_prev);
  return t.add(keep, t.mul(z, cand));
}

Var unroll(Tape& t, std::span<const Var> features, const BoundCell& cell, std::size_t hidden) {
  if (features.empty()) throw ShapeError("unroll requires at least one time step");
  Var h = t.leaf(Tensor(Shape{hidden}));
  if (std::holds_alternative<BoundLstm>(cell)) {
    LstmState s{h, t.leaf(Tensor(Shape{hidden}))};
    for (Var x : features) s = lstm_step(t, x, s, std::get<BoundLstm>(cell));
    return s.h;
  }
  if (std::holds_alternative<BoundGru>(cell)) {
    for (Var x : features) h = gru_step(t, x, h, std::get<BoundGru>(cell));
    return h;
  }
  for (Var x : features) h = rnn_step(t, x, h, std::get<BoundVanilla>(cell));
  return h;
}

}  // namespace cmdrnn
