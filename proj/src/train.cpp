#include "cmdrnn/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace cmdrnn {

LossKind default_loss(const ModelSpec& spec) {
  return spec.has_mdn() ? LossKind::mdn_nll : LossKind::mse;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (clip <= 0.0) throw ConfigError("gradient clip threshold must be positive");
  if (lr < 0.0) throw ConfigError("learning rate must be nonnegative");
}

Var mse_loss(Tape& t, Var pred, const Tensor& target) {
  return t.mean(t.square(t.sub(pred, t.leaf(target))));
}

namespace {

TargetStats estimate_stats(const std::vector<WindowedSample>& samples) {
  TargetStats st;
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    st.mean[0] += s.target[0];
    st.mean[1] += s.target[1];
  }
  st.mean[0] /= n;
  st.mean[1] /= n;
  double var[2] = {0.0, 0.0};
  for (const auto& s : samples) {
    var[0] += (s.target[0] - st.mean[0]) * (s.target[0] - st.mean[0]);
    var[1] += (s.target[1] - st.mean[1]) * (s.target[1] - st.mean[1]);
  }
  for (int d = 0; d < 2; ++d) {
    st.stdev[d] = std::sqrt(var[d] / n);
    if (st.stdev[d] == 0.0) st.stdev[d] = 1.0;  // constant target, leave units alone
  }
  return st;
}

Var sample_loss(Tape& t, const Model::Bound& bound, Model& model, const WindowedSample& s,
                const TargetStats& stats, LossKind kind) {
  Var raw = model.forward_bound(t, bound, s.inputs);
  const Tensor y = stats.standardize(s.target);
  if (kind == LossKind::mdn_nll) return mdn_nll(t, raw, y);
  return mse_loss(t, raw, y);
}

}  // namespace

TrainResult train(Model& model, const std::vector<WindowedSample>& samples, const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw ConfigError("training dataset is empty");
  const LossKind kind = cfg.loss.value_or(default_loss(model.spec()));
  if (kind == LossKind::mdn_nll && !model.spec().has_mdn()) {
    throw ConfigError("mdn-nll loss requires a mixture head variant");
  }

  model.target_stats() = estimate_stats(samples);
  RmsProp opt(RmsPropConfig{cfg.lr, cfg.rho, cfg.eps});
  rng::Engine order_eng(cfg.seed);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.epoch_loss.reserve(cfg.epochs);

  // Reported per-sample losses are summed in index order so the trace does
  // not depend on the shuffle (an lr=0 run yields a bit-constant trace).
  std::vector<double> per_sample(samples.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng::shuffle(order, order_eng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const std::size_t batch_id = start / cfg.batch;
      try {
        Tape tape;
        Bindings reg;
        Model::Bound bound = model.bind_params(tape, reg);
        std::vector<Var> losses;
        losses.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          losses.push_back(sample_loss(tape, bound, model, samples[order[i]], model.target_stats(), kind));
          per_sample[order[i]] = tape.value(losses.back()).item();
        }
        Var total = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i) total = tape.add(total, losses[i]);
        Var batch_loss = tape.scale(total, 1.0 / static_cast<double>(end - start));
        tape.backward(batch_loss);

        std::vector<Tensor> grads;
        grads.reserve(reg.items.size());
        for (const auto& [param, var] : reg.items) grads.push_back(tape.grad(var));
        clip_global_norm(grads, cfg.clip);

        std::vector<std::pair<Tensor*, const Tensor*>> updates;
        updates.reserve(grads.size());
        for (std::size_t i = 0; i < grads.size(); ++i) {
          updates.emplace_back(reg.items[i].first, &grads[i]);
        }
        opt.step(updates);
      } catch (const NumericError& e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_id) + ": " + e.what());
      }
    }
    double epoch_sum = 0.0;
    for (double v : per_sample) epoch_sum += v;
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(samples.size()));
  }
  return result;
}

double evaluate_rmse(Model& model, const std::vector<WindowedSample>& samples, PredictMode mode,
                     std::uint64_t sample_seed) {
  if (samples.empty()) throw ConfigError("evaluation dataset is empty");
  rng::Engine eng(sample_seed);
  double sq = 0.0;
  for (const auto& s : samples) {
    const Tensor pred = model.predict_point(s.inputs, mode, &eng);
    const double dx = pred[0] - s.target[0];
    const double dy = pred[1] - s.target[1];
    sq += dx * dx + dy * dy;
  }
  return std::sqrt(sq / static_cast<double>(samples.size()));
}

double evaluate_loss(Model& model, const std::vector<WindowedSample>& samples) {
  if (samples.empty()) throw ConfigError("evaluation dataset is empty");
  const LossKind kind = default_loss(model.spec());
  double sum = 0.0;
  for (const auto& s : samples) {
    const Tensor raw = model.predict_raw(s.inputs);
    const Tensor y = model.target_stats().standardize(s.target);
    if (kind == LossKind::mdn_nll) {
      sum += nll(split_theta(raw), y);
    } else {
      const double d0 = raw[0] - y[0], d1 = raw[1] - y[1];
      sum += 0.5 * (d0 * d0 + d1 * d1);
    }
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace cmdrnn
