#include "cmdrnn/graph.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace cmdrnn {

namespace {

void ensure_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by op '") + op + "'");
  }
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " requires a rank-2 tensor, got shape " + shape_str(t.shape()));
  }
}

}  // namespace

Tape::Var Tape::push(const char* op, Tensor value, std::function<void()> back) {
  ensure_finite(value, op);
  nodes_.push_back(Node{op, std::move(value), Tensor{}, std::move(back)});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Var Tape::leaf(Tensor value) { return push("leaf", std::move(value), nullptr); }

// ---- elementwise binary -----------------------------------------------

namespace {
enum class Bin { add, sub, mul };
}

static Tensor binary_forward(const Tensor& a, const Tensor& b, Bin kind, const char* op) {
  auto f = [kind](double x, double y) {
    switch (kind) {
      case Bin::add: return x + y;
      case Bin::sub: return x - y;
      default: return x * y;
    }
  };
  if (a.same_shape(b)) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  if (a.size() == 1) {
    Tensor out(b.shape());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = f(a[0], b[i]);
    return out;
  }
  if (b.size() == 1) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[0]);
    return out;
  }
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Accumulates `contrib[i] * weight_i` into da, summing when da is scalar.
static void accum_side(Tensor& da, const Tensor& g, const std::function<double(std::size_t)>& w) {
  if (da.size() == 1 && g.size() > 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * w(i);
    da[0] += s;
  } else {
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * w(i);
  }
}

Tape::Var Tape::add(Var a, Var b) {
  Tensor out = binary_forward(value(a), value(b), Bin::add, "add");
  std::uint32_t ai = a.id, bi = b.id;
  auto self = this;
  Var v = push("add", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, bi, oi]() {
    const Tensor& g = self->nodes_[oi].grad;
    accum_side(self->nodes_[ai].grad, g, [](std::size_t) { return 1.0; });
    accum_side(self->nodes_[bi].grad, g, [](std::size_t) { return 1.0; });
  };
  return v;
}

Tape::Var Tape::sub(Var a, Var b) {
  Tensor out = binary_forward(value(a), value(b), Bin::sub, "sub");
  std::uint32_t ai = a.id, bi = b.id;
  auto self = this;
  Var v = push("sub", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, bi, oi]() {
    const Tensor& g = self->nodes_[oi].grad;
    accum_side(self->nodes_[ai].grad, g, [](std::size_t) { return 1.0; });
    accum_side(self->nodes_[bi].grad, g, [](std::size_t) { return -1.0; });
  };
  return v;
}

Tape::Var Tape::mul(Var a, Var b) {
  Tensor out = binary_forward(value(a), value(b), Bin::mul, "mul");
  std::uint32_t ai = a.id, bi = b.id;
  auto self = this;
  Var v = push("mul", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, bi, oi]() {
    const Tensor& g = self->nodes_[oi].grad;
    const Tensor& av = self->nodes_[ai].value;
    const Tensor& bv = self->nodes_[bi].value;
    accum_side(self->nodes_[ai].grad, g, [&bv](std::size_t i) { return bv.size() == 1 ? bv[0] : bv[i]; });
    accum_side(self->nodes_[bi].grad, g, [&av](std::size_t i) { return av.size() == 1 ? av[0] : av[i]; });
  };
  return v;
}

Tape::Var Tape::scale(Var a, double c) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("scale", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, c]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += c * g[i];
  };
  return v;
}

Tape::Var Tape::add_const(Var a, double c) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("add_const", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
  };
  return v;
}

// ---- elementwise unary --------------------------------------------------

// dfx receives (x, y) where y = fwd(x); returns dy/dx.
Tape::Var Tape::unary(const char* op, Var a, double (*fwd)(double), double (*dfx)(double, double)) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push(op, std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, dfx]() {
    const Tensor& g = self->nodes_[oi].grad;
    const Tensor& x = self->nodes_[ai].value;
    const Tensor& y = self->nodes_[oi].value;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * dfx(x[i], y[i]);
  };
  return v;
}

Tape::Var Tape::exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tape::Var Tape::log(Var a) {
  for (double v : value(a).values()) {
    if (v <= 0.0) throw DomainError("log of non-positive input");
  }
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tape::Var Tape::tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tape::Var Tape::sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tape::Var Tape::relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tape::Var Tape::leaky_relu(Var a, double slope) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : slope * av[i];
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("leaky_relu", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, slope]() {
    const Tensor& g = self->nodes_[oi].grad;
    const Tensor& x = self->nodes_[ai].value;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
  };
  return v;
}

Tape::Var Tape::square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tape::Var Tape::sqrt(Var a) {
  for (double v : value(a).values()) {
    if (v <= 0.0) throw DomainError("sqrt of non-positive input");
  }
  return unary("sqrt", a, [](double x) { return std::sqrt(x); },
               [](double, double y) { return 0.5 / y; });
}

// ---- matmul --------------------------------------------------------------

Tape::Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_rank2(A, "matmul lhs");
  const bool vec_rhs = B.rank() == 1;
  if (!vec_rhs) require_rank2(B, "matmul rhs");
  const std::size_t m = A.extent(0), k = A.extent(1);
  const std::size_t bk = vec_rhs ? B.extent(0) : B.extent(0);
  const std::size_t n = vec_rhs ? 1 : B.extent(1);
  if (k != bk) {
    throw ShapeError("matmul: inner extents disagree, " + shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  }
  Tensor out(vec_rhs ? Shape{m} : Shape{m, n});
  if (n == 1) {
    // row-dot fast path; this is the hot loop of every dense/recurrent layer
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A.data() + i * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * B[kk];
      out[i] = acc;
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = A[i * k + kk];
        const double* brow = B.data() + kk * n;
        double* orow = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
      }
    }
  }
  std::uint32_t ai = a.id, bi = b.id;
  auto self = this;
  Var v = push("matmul", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, bi, oi, m, k, n]() {
    const Tensor& A = self->nodes_[ai].value;
    const Tensor& B = self->nodes_[bi].value;
    const Tensor& G = self->nodes_[oi].grad;
    Tensor& dA = self->nodes_[ai].grad;
    Tensor& dB = self->nodes_[bi].grad;
    // dA += G * B^T, dB += A^T * G  (vector rhs handled as n = 1)
    if (n == 1) {
      for (std::size_t i = 0; i < m; ++i) {
        const double g = G[i];
        if (g == 0.0) continue;
        double* darow = dA.data() + i * k;
        const double* arow = A.data() + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
          darow[kk] += g * B[kk];
          dB[kk] += g * arow[kk];
        }
      }
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        double s = 0.0;
        const double* grow = G.data() + i * n;
        const double* brow = B.data() + kk * n;
        for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
        dA[i * k + kk] += s;
      }
    }
    for (std::size_t kk = 0; kk < k; ++kk) {
      for (std::size_t i = 0; i < m; ++i) {
        const double aik = A[i * k + kk];
        if (aik == 0.0) continue;
        const double* grow = G.data() + i * n;
        double* drow = dB.data() + kk * n;
        for (std::size_t j = 0; j < n; ++j) drow[j] += aik * grow[j];
      }
    }
  };
  return v;
}

// ---- reductions ------------------------------------------------------

Tape::Var Tape::sum(Var a) {
  const Tensor& av = value(a);
  double s = 0.0;
  for (double x : av.values()) s += x;
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("sum", Tensor::scalar(s), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi]() {
    const double g = self->nodes_[oi].grad[0];
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g;
  };
  return v;
}

Tape::Var Tape::mean(Var a) {
  Var s = sum(a);
  return scale(s, 1.0 / static_cast<double>(value(a).size()));
}

namespace {

void check_axis(const Tensor& t, int axis, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " with axis requires rank-2, got shape " + shape_str(t.shape()));
  }
  if (axis != 0 && axis != 1) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank 2");
  }
}

}  // namespace

Tape::Var Tape::sum(Var a, int axis) {
  const Tensor& av = value(a);
  check_axis(av, axis, "sum");
  const std::size_t r = av.extent(0), c = av.extent(1);
  Tensor out(axis == 0 ? Shape{c} : Shape{r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out[axis == 0 ? j : i] += av.at(i, j);
    }
  }
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("sum_axis", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, r, c, axis]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        da[i * c + j] += g[axis == 0 ? j : i];
      }
    }
  };
  return v;
}

Tape::Var Tape::mean(Var a, int axis) {
  const Tensor& av = value(a);
  check_axis(av, axis, "mean");
  const double denom = static_cast<double>(axis == 0 ? av.extent(0) : av.extent(1));
  return scale(sum(a, axis), 1.0 / denom);
}

Tape::Var Tape::max(Var a) {
  const Tensor& av = value(a);
  if (av.size() == 0) throw ShapeError("max of empty tensor");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < av.size(); ++i) {
    if (av[i] > av[arg]) arg = i;  // strict: ties keep the lowest index
  }
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("max", Tensor::scalar(av[arg]), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, arg]() {
    self->nodes_[ai].grad[arg] += self->nodes_[oi].grad[0];
  };
  return v;
}

Tape::Var Tape::max(Var a, int axis) {
  const Tensor& av = value(a);
  check_axis(av, axis, "max");
  const std::size_t r = av.extent(0), c = av.extent(1);
  const std::size_t slices = axis == 0 ? c : r;
  const std::size_t len = axis == 0 ? r : c;
  Tensor out(Shape{slices});
  std::vector<std::size_t> args(slices, 0);
  for (std::size_t s = 0; s < slices; ++s) {
    auto idx = [&](std::size_t t) { return axis == 0 ? t * c + s : s * c + t; };
    std::size_t arg = 0;
    for (std::size_t t = 1; t < len; ++t) {
      if (av[idx(t)] > av[idx(arg)]) arg = t;
    }
    args[s] = idx(arg);
    out[s] = av[args[s]];
  }
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("max_axis", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, args]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t s = 0; s < args.size(); ++s) da[args[s]] += g[s];
  };
  return v;
}

// ---- conv / pool -----------------------------------------------------

Tape::Var Tape::conv1d(Var x, Var kernels, Var bias, int stride) {
  const Tensor& X = value(x);
  const Tensor& K = value(kernels);
  const Tensor& B = value(bias);
  require_rank2(X, "conv1d input");
  if (K.rank() != 3) throw ShapeError("conv1d kernels must be rank-3, got " + shape_str(K.shape()));
  if (stride < 1) throw ShapeError("conv1d stride must be >= 1");
  const std::size_t in_ch = X.extent(0), L = X.extent(1);
  const std::size_t out_ch = K.extent(0), kw = K.extent(2);
  if (K.extent(1) != in_ch) {
    throw ShapeError("conv1d: kernel input channels " + shape_str(K.shape()) + " do not match input " +
                     shape_str(X.shape()));
  }
  if (B.rank() != 1 || B.extent(0) != out_ch) {
    throw ShapeError("conv1d: bias shape " + shape_str(B.shape()) + " does not match out channels");
  }
  if (L < kw) {
    throw ShapeError("conv1d: input length " + std::to_string(L) + " shorter than kernel width " +
                     std::to_string(kw));
  }
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t L_out = (L - kw) / s + 1;
  Tensor out(Shape{out_ch, L_out});
  for (std::size_t o = 0; o < out_ch; ++o) {
    for (std::size_t p = 0; p < L_out; ++p) {
      double acc = B[o];
      for (std::size_t c = 0; c < in_ch; ++c) {
        const double* xrow = X.data() + c * L + p * s;
        const double* krow = K.data() + (o * in_ch + c) * kw;
        for (std::size_t t = 0; t < kw; ++t) acc += krow[t] * xrow[t];
      }
      out.at(o, p) = acc;
    }
  }
  std::uint32_t xi = x.id, ki = kernels.id, bi = bias.id;
  auto self = this;
  Var v = push("conv1d", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, xi, ki, bi, oi, in_ch, L, out_ch, kw, s, L_out]() {
    const Tensor& X = self->nodes_[xi].value;
    const Tensor& K = self->nodes_[ki].value;
    const Tensor& G = self->nodes_[oi].grad;
    Tensor& dX = self->nodes_[xi].grad;
    Tensor& dK = self->nodes_[ki].grad;
    Tensor& dB = self->nodes_[bi].grad;
    for (std::size_t o = 0; o < out_ch; ++o) {
      for (std::size_t p = 0; p < L_out; ++p) {
        const double g = G[o * L_out + p];
        if (g == 0.0) continue;
        dB[o] += g;
        for (std::size_t c = 0; c < in_ch; ++c) {
          const double* xrow = X.data() + c * L + p * s;
          const double* krow = K.data() + (o * in_ch + c) * kw;
          double* dxrow = dX.data() + c * L + p * s;
          double* dkrow = dK.data() + (o * in_ch + c) * kw;
          for (std::size_t t = 0; t < kw; ++t) {
            dxrow[t] += g * krow[t];
            dkrow[t] += g * xrow[t];
          }
        }
      }
    }
  };
  return v;
}

Tape::Var Tape::maxpool1d(Var x, int window, int stride) {
  const Tensor& X = value(x);
  require_rank2(X, "maxpool1d input");
  if (window < 1 || stride < 1) throw ShapeError("maxpool1d window and stride must be >= 1");
  const std::size_t ch = X.extent(0), L = X.extent(1);
  const std::size_t w = static_cast<std::size_t>(window), s = static_cast<std::size_t>(stride);
  if (w > L) {
    throw ShapeError("maxpool1d: window " + std::to_string(w) + " exceeds input length " + std::to_string(L));
  }
  const std::size_t L_out = (L - w) / s + 1;
  Tensor out(Shape{ch, L_out});
  std::vector<std::size_t> args(ch * L_out);
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t p = 0; p < L_out; ++p) {
      std::size_t base = c * L + p * s;
      std::size_t arg = base;
      for (std::size_t t = 1; t < w; ++t) {
        if (X[base + t] > X[arg]) arg = base + t;
      }
      out.at(c, p) = X[arg];
      args[c * L_out + p] = arg;
    }
  }
  std::uint32_t xi = x.id;
  auto self = this;
  Var v = push("maxpool1d", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, xi, oi, args]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& dx = self->nodes_[xi].grad;
    for (std::size_t i = 0; i < args.size(); ++i) dx[args[i]] += g[i];
  };
  return v;
}

Tape::Var Tape::reshape(Var a, Shape shape) {
  Tensor out = value(a).reshaped(std::move(shape));
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("reshape", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
  };
  return v;
}

Tape::Var Tape::slice(Var a, std::size_t offset, std::size_t len) {
  const Tensor& av = value(a);
  if (av.rank() != 1) throw ShapeError("slice requires a rank-1 tensor, got " + shape_str(av.shape()));
  if (offset + len > av.size()) {
    throw ShapeError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + len) +
                     ") out of range for length " + std::to_string(av.size()));
  }
  Tensor out(Shape{len});
  for (std::size_t i = 0; i < len; ++i) out[i] = av[offset + i];
  std::uint32_t ai = a.id;
  auto self = this;
  Var v = push("slice", std::move(out), nullptr);
  std::uint32_t oi = v.id;
  nodes_[oi].back = [self, ai, oi, offset, len]() {
    const Tensor& g = self->nodes_[oi].grad;
    Tensor& da = self->nodes_[ai].grad;
    for (std::size_t i = 0; i < len; ++i) da[offset + i] += g[i];
  };
  return v;
}

// ---- backward ----------------------------------------------------------

void Tape::backward(Var loss) {
  if (!loss.valid() || loss.id >= nodes_.size()) throw ShapeError("backward: invalid loss node");
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_str(nodes_[loss.id].value.shape()));
  }
  for (auto& n : nodes_) {
    n.grad = Tensor(n.value.shape());
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad.all_finite()) {
      throw NumericError(std::string("non-finite gradient at op '") + n.op + "'");
    }
    if (n.back) n.back();
  }
}

}  // namespace cmdrnn
