#pragma once

#include "cmdrnn/graph.hpp"
#include "cmdrnn/rng.hpp"

namespace cmdrnn {

// Bivariate diagonal Gaussian mixture over 2D targets. The raw network
// output vector packs, per the 5K layout: K weight logits, then 2K means,
// then 2K log-scales.
struct MixtureParams {
  Tensor pi;     // (K), simplex
  Tensor mu;     // (K x 2)
  Tensor sigma;  // (K x 2), positive
  std::size_t mixtures() const { return pi.size(); }
};

// raw: rank-1, length 5K. Weights via softmax, scales via exp.
MixtureParams split_theta(const Tensor& raw);

// -log sum_k pi_k N(y0; mu_k0, sigma_k0^2) N(y1; mu_k1, sigma_k1^2),
// evaluated in the log domain with log-sum-exp.
double nll(const MixtureParams& p, const Tensor& y);

// Draws component ~ Categorical(pi) then per-dimension Gaussians. The chosen
// component index is reported through `component` when non-null.
Tensor sample(const MixtureParams& p, rng::Engine& eng, std::size_t* component = nullptr);

// Mean of the heaviest component; ties go to the lowest index.
Tensor predict_mle(const MixtureParams& p);

// sum_k pi_k mu_k.
Tensor mixture_mean(const MixtureParams& p);

// Differentiable NLL built on the tape from the raw 5K output vector; the
// training-time counterpart of split_theta + nll.
Var mdn_nll(Tape& t, Var raw, const Tensor& y);

}  // namespace cmdrnn
