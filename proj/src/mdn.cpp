#include "cmdrnn/mdn.hpp"

#include <cmath>

namespace cmdrnn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::size_t mixture_count(const Tensor& raw) {
  if (raw.rank() != 1 || raw.size() == 0 || raw.size() % 5 != 0) {
    throw ShapeError("mixture parameter vector must be rank-1 with length divisible by 5, got " +
                     shape_str(raw.shape()));
  }
  return raw.size() / 5;
}

void check_params(const MixtureParams& p, const char* op) {
  for (double s : p.sigma.values()) {
    if (s <= 0.0) throw DomainError(std::string(op) + ": mixture scale must be positive");
  }
  for (double w : p.pi.values()) {
    if (w <= 0.0) throw DomainError(std::string(op) + ": mixture weight must be positive");
  }
}

void check_target(const Tensor& y) {
  if (y.size() != 2) throw ShapeError("target must have 2 coordinates, got " + shape_str(y.shape()));
}

}  // namespace

MixtureParams split_theta(const Tensor& raw) {
  const std::size_t k = mixture_count(raw);
  MixtureParams p;
  p.pi = Tensor(Shape{k});
  p.mu = Tensor(Shape{k, 2});
  p.sigma = Tensor(Shape{k, 2});

  double m = raw[0];
  for (std::size_t i = 1; i < k; ++i) m = std::max(m, raw[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p.pi[i] = std::exp(raw[i] - m);
    z += p.pi[i];
  }
  for (std::size_t i = 0; i < k; ++i) p.pi[i] /= z;

  for (std::size_t i = 0; i < 2 * k; ++i) p.mu[i] = raw[k + i];
  for (std::size_t i = 0; i < 2 * k; ++i) p.sigma[i] = std::exp(raw[3 * k + i]);
  return p;
}

double nll(const MixtureParams& p, const Tensor& y) {
  check_params(p, "nll");
  check_target(y);
  const std::size_t k = p.mixtures();
  std::vector<double> lp(k);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = std::log(p.pi[i]) - kLog2Pi;
    for (std::size_t d = 0; d < 2; ++d) {
      const double s = p.sigma.at(i, d);
      const double z = (y[d] - p.mu.at(i, d)) / s;
      acc += -0.5 * z * z - std::log(s);
    }
    lp[i] = acc;
  }
  double m = lp[0];
  for (std::size_t i = 1; i < k; ++i) m = std::max(m, lp[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::exp(lp[i] - m);
  return -(m + std::log(s));
}

Tensor sample(const MixtureParams& p, rng::Engine& eng, std::size_t* component) {
  check_params(p, "sample");
  const std::size_t k = rng::categorical(eng, std::span<const double>(p.pi.values()));
  if (component) *component = k;
  Tensor y(Shape{2});
  for (std::size_t d = 0; d < 2; ++d) {
    y[d] = rng::normal(eng, p.mu.at(k, d), p.sigma.at(k, d));
  }
  return y;
}

Tensor predict_mle(const MixtureParams& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.mixtures(); ++i) {
    if (p.pi[i] > p.pi[best]) best = i;
  }
  return Tensor::vec({p.mu.at(best, 0), p.mu.at(best, 1)});
}

Tensor mixture_mean(const MixtureParams& p) {
  Tensor y(Shape{2});
  for (std::size_t i = 0; i < p.mixtures(); ++i) {
    y[0] += p.pi[i] * p.mu.at(i, 0);
    y[1] += p.pi[i] * p.mu.at(i, 1);
  }
  return y;
}

// log-sum-exp over a rank-1 vector; exact gradient, max term included.
static Var logsumexp(Tape& t, Var x) {
  Var m = t.max(x);
  Var shifted = t.sub(x, m);
  return t.add(m, t.log(t.sum(t.exp(shifted))));
}

Var mdn_nll(Tape& t, Var raw, const Tensor& y) {
  const std::size_t k = mixture_count(t.value(raw));
  check_target(y);

  Var logits = t.slice(raw, 0, k);
  Var log_pi = t.sub(logits, logsumexp(t, logits));                  // (K)
  Var mu = t.reshape(t.slice(raw, k, 2 * k), Shape{k, 2});           // (K x 2)
  Var log_sigma = t.reshape(t.slice(raw, 3 * k, 2 * k), Shape{k, 2});

  // z = (mu - y) * exp(-log_sigma), broadcast y by replication.
  Tensor y_rep(Shape{k, 2});
  for (std::size_t i = 0; i < k; ++i) {
    y_rep.at(i, 0) = y[0];
    y_rep.at(i, 1) = y[1];
  }
  Var diff = t.sub(mu, t.leaf(y_rep));
  Var z = t.mul(diff, t.exp(t.scale(log_sigma, -1.0)));
  Var quad = t.scale(t.sum(t.square(z), 1), -0.5);  // (K)
  Var log_norm = t.scale(t.sum(log_sigma, 1), -1.0);

  Var lp = t.add_const(t.add(t.add(log_pi, quad), log_norm), -kLog2Pi);
  return t.scale(logsumexp(t, lp), -1.0);
}

}  // namespace cmdrnn
