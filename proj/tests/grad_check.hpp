#pragma once

// Test support: central-difference gradient checking against the tape.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cmdrnn/graph.hpp"
#include "cmdrnn/rng.hpp"

namespace testsupport {

// build must construct a scalar loss from leased parameter vars on the given
// tape, deterministically. Returns the worst relative error between analytic
// gradients and central differences over the checked coordinates.
// sample_coords == 0 checks every coordinate.
template <typename Build>
double grad_check(std::vector<cmdrnn::Tensor> params, Build build, double eps = 1e-5,
                  std::size_t sample_coords = 0, std::uint64_t sample_seed = 12345) {
  using namespace cmdrnn;

  auto eval = [&](const std::vector<Tensor>& ps) {
    Tape t;
    std::vector<Var> vs;
    vs.reserve(ps.size());
    for (const auto& p : ps) vs.push_back(t.leaf(p));
    return t.value(build(t, vs)).item();
  };

  Tape t;
  std::vector<Var> vs;
  vs.reserve(params.size());
  for (const auto& p : params) vs.push_back(t.leaf(p));
  Var loss = build(t, vs);
  t.backward(loss);

  rng::Engine eng(sample_seed);
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor analytic = t.grad(vs[pi]);
    std::vector<std::size_t> coords;
    if (sample_coords == 0 || sample_coords >= params[pi].size()) {
      coords.resize(params[pi].size());
      std::iota(coords.begin(), coords.end(), std::size_t{0});
    } else {
      for (std::size_t i = 0; i < sample_coords; ++i) {
        coords.push_back(rng::index(eng, params[pi].size()));
      }
    }
    for (std::size_t c : coords) {
      const double orig = params[pi][c];
      params[pi][c] = orig + eps;
      const double up = eval(params);
      params[pi][c] = orig - eps;
      const double dn = eval(params);
      params[pi][c] = orig;
      const double fd = (up - dn) / (2.0 * eps);
      const double rel = std::fabs(analytic[c] - fd) /
                         std::max({std::fabs(analytic[c]), std::fabs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// Uniform tensor with entries in [lo, hi].
inline cmdrnn::Tensor random_tensor(cmdrnn::rng::Engine& eng, cmdrnn::Shape shape, double lo = -1.0,
                                    double hi = 1.0) {
  cmdrnn::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = cmdrnn::rng::uniform(eng, lo, hi);
  return t;
}

// Uniform but bounded away from zero; for kinked ops (relu, max pooling)
// where finite differences straddling the kink are meaningless.
inline cmdrnn::Tensor random_tensor_away_from_zero(cmdrnn::rng::Engine& eng, cmdrnn::Shape shape,
                                                   double margin = 0.05) {
  cmdrnn::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v;
    do {
      v = cmdrnn::rng::uniform(eng, -1.0, 1.0);
    } while (std::fabs(v) < margin);
    t[i] = v;
  }
  return t;
}

}  // namespace testsupport
