#include "cmdrnn/optim.hpp"

#include <cmath>

namespace cmdrnn {

void RmsProp::step(std::span<const std::pair<Tensor*, const Tensor*>> updates) {
  if (accum_.empty()) {
    accum_.reserve(updates.size());
    for (const auto& [param, grad] : updates) accum_.emplace_back(param->shape());
  }
  if (accum_.size() != updates.size()) {
    throw ShapeError("optimizer state holds " + std::to_string(accum_.size()) + " slots, got " +
                     std::to_string(updates.size()) + " updates");
  }
  for (std::size_t i = 0; i < updates.size(); ++i) {
    Tensor& param = *updates[i].first;
    const Tensor& grad = *updates[i].second;
    Tensor& v = accum_[i];
    if (!param.same_shape(grad) || !param.same_shape(v)) {
      throw ShapeError("optimizer shape mismatch for slot " + std::to_string(i) + ": param " +
                       shape_str(param.shape()) + " vs grad " + shape_str(grad.shape()));
    }
    if (!grad.all_finite()) {
      throw NumericError("non-finite gradient in optimizer slot " + std::to_string(i));
    }
    for (std::size_t j = 0; j < param.size(); ++j) {
      const double g = grad[j];
      v[j] = cfg_.rho * v[j] + (1.0 - cfg_.rho) * g * g;
      param[j] -= cfg_.lr * g / (std::sqrt(v[j]) + cfg_.eps);
    }
  }
}

double global_grad_norm(std::span<const Tensor> grads) {
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (double x : g.values()) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_global_norm(std::vector<Tensor>& grads, double threshold) {
  if (threshold <= 0.0) throw ConfigError("clip threshold must be positive");
  const double norm = global_grad_norm(grads);
  if (norm <= threshold || norm == 0.0) return 1.0;
  const double factor = threshold / norm;
  for (Tensor& g : grads) {
    for (double& x : g.values()) x *= factor;
  }
  return factor;
}

}  // namespace cmdrnn
