#include "cmdrnn/model.hpp"

#include <cmath>

namespace cmdrnn {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::rnn: return "rnn";
    case Variant::cnn_rnn: return "cnn_rnn";
    case Variant::rnn_mdn: return "rnn_mdn";
    case Variant::cmdrnn_vanilla: return "cmdrnn_vanilla";
    case Variant::cmdrnn_lstm: return "cmdrnn_lstm";
    case Variant::cmdrnn_gru: return "cmdrnn_gru";
  }
  return "rnn";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::rnn, Variant::cnn_rnn, Variant::rnn_mdn, Variant::cmdrnn_vanilla,
                    Variant::cmdrnn_lstm, Variant::cmdrnn_gru}) {
    if (name == variant_name(v)) return v;
  }
  throw ConfigError("unknown variant '" + name + "'");
}

const char* predict_mode_name(PredictMode m) {
  switch (m) {
    case PredictMode::mle: return "mle";
    case PredictMode::mixture_mean: return "mixture-mean";
    case PredictMode::sample: return "sample";
  }
  return "mle";
}

PredictMode predict_mode_from_name(const std::string& name) {
  if (name == "mle") return PredictMode::mle;
  if (name == "mixture-mean") return PredictMode::mixture_mean;
  if (name == "sample") return PredictMode::sample;
  throw ConfigError("unknown prediction mode '" + name + "'");
}

bool ModelSpec::has_cnn() const {
  return variant == Variant::cnn_rnn || variant == Variant::cmdrnn_vanilla ||
         variant == Variant::cmdrnn_lstm || variant == Variant::cmdrnn_gru;
}

bool ModelSpec::has_mdn() const {
  return variant == Variant::rnn_mdn || variant == Variant::cmdrnn_vanilla ||
         variant == Variant::cmdrnn_lstm || variant == Variant::cmdrnn_gru;
}

CellKind ModelSpec::cell_kind() const {
  switch (variant) {
    case Variant::cmdrnn_lstm: return CellKind::lstm;
    case Variant::cmdrnn_gru: return CellKind::gru;
    default: return CellKind::vanilla;
  }
}

std::size_t ModelSpec::output_dim() const { return has_mdn() ? 5 * mixtures : 2; }

std::size_t ModelSpec::conv_out_len() const {
  return (input_dim - conv_kernel) / static_cast<std::size_t>(conv_stride) + 1;
}

std::size_t ModelSpec::pool_out_len() const {
  return (conv_out_len() - static_cast<std::size_t>(pool_window)) / static_cast<std::size_t>(pool_stride) + 1;
}

std::size_t ModelSpec::feature_dim() const {
  return has_cnn() ? conv_filters * pool_out_len() : input_dim;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (hidden == 0 || memory == 0) throw ConfigError("hidden size and memory length must be positive");
  if (has_mdn() && mixtures == 0) throw ConfigError("mixture count must be positive");
  if (has_mdn() && mdn_hidden == 0) throw ConfigError("mdn_hidden must be positive");
  if (has_cnn()) {
    if (conv_filters == 0 || conv_kernel == 0) throw ConfigError("conv filters and kernel must be positive");
    if (conv_stride < 1 || pool_stride < 1 || pool_window < 1) {
      throw ConfigError("conv/pool strides and window must be >= 1");
    }
    if (input_dim < conv_kernel) {
      throw ConfigError("input_dim " + std::to_string(input_dim) + " shorter than conv kernel " +
                        std::to_string(conv_kernel));
    }
    if (conv_out_len() < static_cast<std::size_t>(pool_window)) {
      throw ConfigError("conv output shorter than pool window");
    }
  }
}

Tensor TargetStats::standardize(const Tensor& y) const {
  return Tensor::vec({(y[0] - mean[0]) / stdev[0], (y[1] - mean[1]) / stdev[1]});
}

Tensor TargetStats::destandardize(const Tensor& y_std) const {
  return Tensor::vec({y_std[0] * stdev[0] + mean[0], y_std[1] * stdev[1] + mean[1]});
}

MixtureParams TargetStats::destandardize(const MixtureParams& p) const {
  MixtureParams out = p;
  for (std::size_t i = 0; i < p.mixtures(); ++i) {
    for (std::size_t d = 0; d < 2; ++d) {
      out.mu.at(i, d) = p.mu.at(i, d) * stdev[d] + mean[d];
      out.sigma.at(i, d) = p.sigma.at(i, d) * stdev[d];
    }
  }
  return out;
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  rng::Engine eng(seed);
  if (spec.has_cnn()) {
    m.conv_ = make_conv1d(eng, spec.conv_filters, 1, spec.conv_kernel, spec.conv_stride, Activation::sigmoid);
  }
  const std::size_t feat = spec.feature_dim();
  switch (spec.cell_kind()) {
    case CellKind::vanilla:
      m.cell_ = make_vanilla(eng, feat, spec.hidden, Activation::sigmoid);
      break;
    case CellKind::lstm:
      m.cell_ = make_lstm(eng, feat, spec.hidden);
      break;
    case CellKind::gru:
      m.cell_ = make_gru(eng, feat, spec.hidden);
      break;
  }
  if (spec.has_mdn()) {
    m.mdn_hidden_ = make_dense(eng, spec.hidden, spec.mdn_hidden, Activation::leaky_relu);
    m.head_ = make_dense(eng, spec.mdn_hidden, spec.output_dim(), Activation::linear);
  } else {
    m.head_ = make_dense(eng, spec.hidden, 2, Activation::linear);
  }
  return m;
}

Model checkpoint_restore(const ModelSpec& spec, const TargetStats& stats) {
  Model m = Model::build(spec, 0);
  m.stats_ = stats;
  return m;
}

Model::Bound Model::bind_params(Tape& t, Bindings& reg) {
  Bound b;
  if (conv_) b.conv = bind(t, reg, *conv_);
  std::visit([&](auto& cell) { b.cell = bind(t, reg, cell); }, cell_);
  if (mdn_hidden_) b.mdn_hidden = bind(t, reg, *mdn_hidden_);
  b.head = bind(t, reg, head_);
  return b;
}

Var Model::forward_bound(Tape& t, const Bound& b, const Tensor& window) const {
  if (window.rank() != 2 || window.extent(0) != spec_.memory || window.extent(1) != spec_.input_dim) {
    throw ShapeError("window shape " + shape_str(window.shape()) + " does not match (memory x input_dim) = (" +
                     std::to_string(spec_.memory) + "x" + std::to_string(spec_.input_dim) + ")");
  }
  std::vector<Var> features;
  features.reserve(spec_.memory);
  for (std::size_t step = 0; step < spec_.memory; ++step) {
    Tensor frame(Shape{spec_.input_dim});
    for (std::size_t j = 0; j < spec_.input_dim; ++j) frame[j] = window.at(step, j);
    Var x = t.leaf(std::move(frame));
    if (b.conv) {
      Var img = t.reshape(x, Shape{1, spec_.input_dim});
      Var c = conv1d(t, img, *b.conv);
      Var p = maxpool1d(t, c, spec_.pool_window, spec_.pool_stride, Activation::relu);
      x = flatten(t, p);
    }
    features.push_back(x);
  }
  Var h = unroll(t, features, b.cell, spec_.hidden);
  if (b.mdn_hidden) h = dense(t, h, *b.mdn_hidden);
  return dense(t, h, b.head);
}

Var Model::forward(Tape& t, Bindings& reg, const Tensor& window) {
  Bound b = bind_params(t, reg);
  return forward_bound(t, b, window);
}

Tensor Model::predict_raw(const Tensor& window) {
  Tape t;
  Bindings reg;
  return t.value(forward(t, reg, window));
}

MixtureParams Model::predict_mixture(const Tensor& window) {
  if (!spec_.has_mdn()) throw ConfigError("variant has no mixture head");
  return stats_.destandardize(split_theta(predict_raw(window)));
}

Tensor Model::predict_point(const Tensor& window, PredictMode mode, rng::Engine* eng) {
  const Tensor raw = predict_raw(window);
  if (!spec_.has_mdn()) return stats_.destandardize(raw);
  const MixtureParams p = stats_.destandardize(split_theta(raw));
  switch (mode) {
    case PredictMode::mle: return predict_mle(p);
    case PredictMode::mixture_mean: return mixture_mean(p);
    case PredictMode::sample:
      if (!eng) throw ConfigError("sample mode requires a random engine");
      return sample(p, *eng);
  }
  return predict_mle(p);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  const_cast<Model*>(this)->for_each_param([&n](const std::string&, Tensor& t) { n += t.size(); });
  return n;
}

void Model::for_each_param(const std::function<void(const std::string&, Tensor&)>& fn) {
  if (conv_) {
    fn("conv.kernels", conv_->kernels);
    fn("conv.bias", conv_->bias);
  }
  if (auto* c = std::get_if<VanillaCell>(&cell_)) {
    fn("cell.w_in", c->w_in);
    fn("cell.w_rec", c->w_rec);
    fn("cell.bias", c->bias);
  } else if (auto* l = std::get_if<LstmCell>(&cell_)) {
    fn("cell.w_i", l->w_i); fn("cell.u_i", l->u_i); fn("cell.b_i", l->b_i);
    fn("cell.w_f", l->w_f); fn("cell.u_f", l->u_f); fn("cell.b_f", l->b_f);
    fn("cell.w_o", l->w_o); fn("cell.u_o", l->u_o); fn("cell.b_o", l->b_o);
    fn("cell.w_g", l->w_g); fn("cell.u_g", l->u_g); fn("cell.b_g", l->b_g);
  } else if (auto* g = std::get_if<GruCell>(&cell_)) {
    fn("cell.w_z", g->w_z); fn("cell.u_z", g->u_z); fn("cell.b_z", g->b_z);
    fn("cell.w_r", g->w_r); fn("cell.u_r", g->u_r); fn("cell.b_r", g->b_r);
    fn("cell.w_h", g->w_h); fn("cell.u_h", g->u_h); fn("cell.b_h", g->b_h);
  }
  if (mdn_hidden_) {
    fn("mdn_hidden.weight", mdn_hidden_->weight);
    fn("mdn_hidden.bias", mdn_hidden_->bias);
  }
  fn("head.weight", head_.weight);
  fn("head.bias", head_.bias);
}

}  // namespace cmdrnn
