#pragma once

#include <span>
#include <variant>
#include <vector>

#include "cmdrnn/graph.hpp"
#include "cmdrnn/rng.hpp"

namespace cmdrnn {

enum class Activation { linear, sigmoid, relu, leaky_relu, tanh };

// Negative-side slope for leaky_relu.
inline constexpr double kLeakySlope = 0.01;

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

Var apply_activation(Tape& t, Var x, Activation act);

// ---- parameter structs ---------------------------------------------------

struct DenseLayer {
  Tensor weight;  // (out x in)
  Tensor bias;    // (out)
  Activation act = Activation::linear;
};

struct Conv1dLayer {
  Tensor kernels;  // (out_ch x in_ch x kw)
  Tensor bias;     // (out_ch)
  int stride = 2;
  Activation act = Activation::sigmoid;
};

struct VanillaCell {
  Tensor w_in;   // (hidden x in)
  Tensor w_rec;  // (hidden x hidden)
  Tensor bias;   // (hidden)
  Activation act = Activation::sigmoid;
};

struct LstmCell {
  Tensor w_i, u_i, b_i;  // input gate
  Tensor w_f, u_f, b_f;  // forget gate (bias initialized to 1)
  Tensor w_o, u_o, b_o;  // output gate
  Tensor w_g, u_g, b_g;  // candidate
};

struct GruCell {
  Tensor w_z, u_z, b_z;  // update gate
  Tensor w_r, u_r, b_r;  // reset gate
  Tensor w_h, u_h, b_h;  // candidate
};

// Glorot-uniform weights, zero biases (LSTM forget bias 1).
DenseLayer make_dense(rng::Engine& eng, std::size_t in, std::size_t out, Activation act);
Conv1dLayer make_conv1d(rng::Engine& eng, std::size_t out_ch, std::size_t in_ch, std::size_t kernel_width,
                        int stride, Activation act);
VanillaCell make_vanilla(rng::Engine& eng, std::size_t in, std::size_t hidden, Activation act);
LstmCell make_lstm(rng::Engine& eng, std::size_t in, std::size_t hidden);
GruCell make_gru(rng::Engine& eng, std::size_t in, std::size_t hidden);

Tensor glorot_uniform(rng::Engine& eng, Shape shape, std::size_t fan_in, std::size_t fan_out);

// ---- tape bindings ---------------------------------------------------------

// Records which tape leaf carries which parameter so the optimizer can pair
// each parameter tensor with its gradient after backward().
struct Bindings {
  std::vector<std::pair<Tensor*, Var>> items;

  Var lease(Tape& t, Tensor& param) {
    Var v = t.leaf(param);
    items.emplace_back(&param, v);
    return v;
  }
};

struct BoundDense {
  Var w, b;
  Activation act;
};
struct BoundConv1d {
  Var kernels, bias;
  int stride;
  Activation act;
};
struct BoundVanilla {
  Var w_in, w_rec, bias;
  Activation act;
};
struct BoundLstm {
  Var w_i, u_i, b_i, w_f, u_f, b_f, w_o, u_o, b_o, w_g, u_g, b_g;
};
struct BoundGru {
  Var w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h;
};

BoundDense bind(Tape& t, Bindings& reg, DenseLayer& layer);
BoundConv1d bind(Tape& t, Bindings& reg, Conv1dLayer& layer);
BoundVanilla bind(Tape& t, Bindings& reg, VanillaCell& cell);
BoundLstm bind(Tape& t, Bindings& reg, LstmCell& cell);
BoundGru bind(Tape& t, Bindings& reg, GruCell& cell);

// ---- forward ops --------------------------------------------------------

// x: (in_ch x L) -> activation(conv + bias): (out_ch x L_out).
Var conv1d(Tape& t, Var x, const BoundConv1d& p);

// Windowed maxima then activation (relu in the Table-1 stack).
Var maxpool1d(Tape& t, Var x, int window, int stride, Activation act = Activation::relu);

// (C x L) -> (C*L) row-major.
Var flatten(Tape& t, Var x);

// act(W h + b).
Var dense(Tape& t, Var h, const BoundDense& p);

// Elman step: act(W_in x + W_rec h_prev + b).
Var rnn_step(Tape& t, Var x, Var h_prev, const BoundVanilla& p);

struct LstmState {
  Var h, c;
};
LstmState lstm_step(Tape& t, Var x, LstmState state, const BoundLstm& p);

Var gru_step(Tape& t, Var x, Var h_prev, const BoundGru& p);

using BoundCell = std::variant<BoundVanilla, BoundLstm, BoundGru>;

// Iterates the cell over the feature sequence from a zero initial state and
// returns the final hidden state.
Var unroll(Tape& t, std::span<const Var> features, const BoundCell& cell, std::size_t hidden);

}  // namespace cmdrnn
