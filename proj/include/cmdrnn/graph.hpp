#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cmdrnn/tensor.hpp"

namespace cmdrnn {

// Reverse-mode tape. Nodes are appended in forward order, so creation order
// is a valid topological order for the backward sweep. A tape is confined to
// one thread and rebuilt per training step; it is neither copyable nor
// movable because backward closures capture `this`.
//
// Every op validates shapes up front and checks its result for NaN/Inf,
// throwing NumericError naming the op.
class Tape {
 public:
  struct Var {
    std::uint32_t id = 0xffffffffu;
    bool valid() const { return id != 0xffffffffu; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);

  // Elementwise binary; shapes must match exactly, except that either side
  // may be a scalar (size 1).
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  // Folded-constant variants.
  Var scale(Var a, double c);
  Var add_const(Var a, double c);

  Var exp(Var a);
  Var log(Var a);   // domain: input > 0
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var square(Var a);
  Var sqrt(Var a);  // domain: input > 0

  // (m x k)*(k x n) -> (m x n), or (m x k)*(k) -> (m).
  Var matmul(Var a, Var b);

  // Full reductions produce rank-0 scalars; axis reductions apply to rank-2
  // tensors and drop the reduced axis. max routes its gradient to the first
  // maximal element.
  Var sum(Var a);
  Var sum(Var a, int axis);
  Var mean(Var a);
  Var mean(Var a, int axis);
  Var max(Var a);
  Var max(Var a, int axis);

  // x: (in_ch x L), kernels: (out_ch x in_ch x kw), bias: (out_ch).
  // Valid cross-correlation, L_out = (L - kw)/stride + 1.
  Var conv1d(Var x, Var kernels, Var bias, int stride);
  // x: (ch x L) -> (ch x L_out), windowed maxima per channel.
  Var maxpool1d(Var x, int window, int stride);

  Var reshape(Var a, Shape shape);
  // Contiguous rank-1 slice.
  Var slice(Var a, std::size_t offset, std::size_t len);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
  // scalar-shaped. Gradients of all nodes up to loss are populated.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;
    std::function<void()> back;  // accumulates into input grads
  };

  Var push(const char* op, Tensor value, std::function<void()> back);
  Var unary(const char* op, Var a, double (*fwd)(double), double (*dfx)(double x, double y));
  Tensor& grad_of(std::uint32_t id) { return nodes_[id].grad; }
  const Tensor& value_of(std::uint32_t id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace cmdrnn
