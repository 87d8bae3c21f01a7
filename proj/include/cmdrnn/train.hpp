#pragma once

#include <optional>
#include <vector>

#include "cmdrnn/data.hpp"
#include "cmdrnn/model.hpp"
#include "cmdrnn/optim.hpp"

namespace cmdrnn {

enum class LossKind { mse, mdn_nll };

LossKind default_loss(const ModelSpec& spec);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double rho = 0.9;
  double eps = 1e-8;
  double clip = 5.0;
  std::optional<LossKind> loss;  // defaults to the variant's natural loss

  void validate() const;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-sample training loss
};

// Mean of squared differences.
Var mse_loss(Tape& t, Var pred, const Tensor& target);

// Mini-batched RMSProp training per the model's loss. Estimates target
// standardization statistics from the given samples, stores them on the
// model, and trains in standardized target space. Deterministic for a fixed
// (model seed, cfg.seed) pair. Aborts with NumericError naming epoch and
// batch when the loss or a gradient goes non-finite.
TrainResult train(Model& model, const std::vector<WindowedSample>& samples, const TrainConfig& cfg);

// sqrt(mean squared Euclidean error) over the samples, predictions in
// original coordinate units. sample mode draws from `sample_seed`.
double evaluate_rmse(Model& model, const std::vector<WindowedSample>& samples, PredictMode mode,
                     std::uint64_t sample_seed = 0);

// Mean per-sample loss (NLL for mixture heads, MSE otherwise) in
// standardized target space; the quantity the optimizer minimizes.
double evaluate_loss(Model& model, const std::vector<WindowedSample>& samples);

}  // namespace cmdrnn
