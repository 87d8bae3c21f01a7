#pragma once

#include <functional>
#include <optional>
#include <string>

#include "cmdrnn/layers.hpp"
#include "cmdrnn/mdn.hpp"

namespace cmdrnn {

// The six model variants compared in the experiments.
enum class Variant { rnn, cnn_rnn, rnn_mdn, cmdrnn_vanilla, cmdrnn_lstm, cmdrnn_gru };
enum class CellKind { vanilla, lstm, gru };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelSpec {
  Variant variant = Variant::cmdrnn_gru;
  std::size_t input_dim = 489;

  std::size_t conv_filters = 100;
  std::size_t conv_kernel = 11;
  int conv_stride = 2;
  int pool_window = 2;
  int pool_stride = 2;

  std::size_t hidden = 200;   // recurrent state size
  std::size_t memory = 5;     // unrolled steps per prediction
  std::size_t mixtures = 30;  // K
  std::size_t mdn_hidden = 200;

  bool has_cnn() const;
  bool has_mdn() const;
  CellKind cell_kind() const;

  // Length of the raw head output: 5K for mixture heads, 2 otherwise.
  std::size_t output_dim() const;
  // Per-step feature size entering the recurrent cell.
  std::size_t feature_dim() const;
  std::size_t conv_out_len() const;
  std::size_t pool_out_len() const;

  void validate() const;  // throws ConfigError
};

// Target standardization statistics, estimated from the training split and
// persisted with the model.
struct TargetStats {
  double mean[2] = {0.0, 0.0};
  double stdev[2] = {1.0, 1.0};

  Tensor standardize(const Tensor& y) const;
  Tensor destandardize(const Tensor& y_std) const;
  MixtureParams destandardize(const MixtureParams& p) const;
};

enum class PredictMode { mle, mixture_mean, sample };
const char* predict_mode_name(PredictMode m);
PredictMode predict_mode_from_name(const std::string& name);

class Model {
 public:
  // Fresh parameters drawn from the seed.
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  TargetStats& target_stats() { return stats_; }
  const TargetStats& target_stats() const { return stats_; }

  struct Bound {
    std::optional<BoundConv1d> conv;
    BoundCell cell;
    std::optional<BoundDense> mdn_hidden;
    BoundDense head;
  };

  // Leases every parameter onto the tape once; reuse the result across the
  // samples of a batch so gradients accumulate.
  Bound bind_params(Tape& t, Bindings& reg);

  // window: (memory x input_dim) normalized inputs -> raw head output
  // (standardized coordinate units).
  Var forward_bound(Tape& t, const Bound& b, const Tensor& window) const;
  Var forward(Tape& t, Bindings& reg, const Tensor& window);

  // Raw head output as a plain tensor (fresh tape inside).
  Tensor predict_raw(const Tensor& window);
  // Mixture in original coordinate units; mixture heads only.
  MixtureParams predict_mixture(const Tensor& window);
  // Point prediction in original coordinate units. `eng` is only consumed
  // in sample mode.
  Tensor predict_point(const Tensor& window, PredictMode mode, rng::Engine* eng = nullptr);

  std::size_t parameter_count() const;
  // Stable visitation order; used by the optimizer tests and checkpoints.
  void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);

 private:
  ModelSpec spec_;
  TargetStats stats_;
  std::optional<Conv1dLayer> conv_;
  std::variant<VanillaCell, LstmCell, GruCell> cell_;
  std::optional<DenseLayer> mdn_hidden_;
  DenseLayer head_;

  friend Model checkpoint_restore(const ModelSpec&, const TargetStats&);
};

// Blank model shell used by checkpoint loading; parameters are filled by
// for_each_param.
Model checkpoint_restore(const ModelSpec& spec, const TargetStats& stats);

}  // namespace cmdrnn
