#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cmdrnn/tensor.hpp"

namespace cmdrnn {

struct RmsPropConfig {
  double lr = 1e-3;
  double rho = 0.9;
  double eps = 1e-8;
};

// v <- rho v + (1 - rho) g^2;  theta <- theta - lr g / (sqrt(v) + eps).
// Accumulators are keyed by position in the update list, which must stay
// stable across steps.
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig cfg) : cfg_(cfg) {}

  void step(std::span<const std::pair<Tensor*, const Tensor*>> updates);

  const std::vector<Tensor>& accumulators() const { return accum_; }

 private:
  RmsPropConfig cfg_;
  std::vector<Tensor> accum_;
};

double global_grad_norm(std::span<const Tensor> grads);

// Rescales in place so the global norm is at most `threshold`; returns the
// factor applied (1 when no clipping happened). Rescale only, never a
// direction change.
double clip_global_norm(std::vector<Tensor>& grads, double threshold);

}  // namespace cmdrnn
