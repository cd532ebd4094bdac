// SPDX-License-Identifier: Apache-2.0

#include "gridmend/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gridmend {

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("an MLP needs at least two layer widths");
  size_t n = 0;
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0) throw std::invalid_argument("layer widths must be positive");
    n += static_cast<size_t>(widths_[l] + 1) * static_cast<size_t>(widths_[l + 1]);
  }
  params_.assign(n, 0.0);
}

void Mlp::init(std::mt19937_64& rng, double final_gain) {
  size_t off = 0;
  const size_t layers = widths_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    const double gain = l + 1 == layers ? final_gain : 1.0;
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int k = 0; k < in * out; ++k) params_[off++] = gain * u(rng);
    for (int k = 0; k < out; ++k) params_[off++] = 0.0;
  }
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache* cache) const {
  if (static_cast<int>(x.size()) != input_width()) {
    throw std::invalid_argument("MLP input has width " + std::to_string(x.size()) + ", expected " +
                                std::to_string(input_width()));
  }
  std::vector<double> a(x.begin(), x.end());
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(a);
  }
  size_t off = 0;
  const size_t layers = widths_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const double* w = &params_[off];
    const double* b = w + static_cast<size_t>(in) * out;
    std::vector<double> z(static_cast<size_t>(out));
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* wr = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += wr[i] * a[i];
      z[o] = l + 1 < layers ? std::max(0.0, s) : s;
    }
    off += static_cast<size_t>(in + 1) * out;
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

std::vector<double> Mlp::backprop(const Cache& cache, std::span<const double> dout,
                                  std::vector<double>* grad) const {
  const size_t layers = widths_.size() - 1;
  if (cache.acts.size() != layers + 1) throw std::invalid_argument("stale MLP cache");
  if (grad && grad->size() != params_.size()) grad->assign(params_.size(), 0.0);
  std::vector<double> delta(dout.begin(), dout.end());
  size_t off = params_.size();
  for (size_t l = layers; l-- > 0;) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    off -= static_cast<size_t>(in + 1) * out;
    const double* w = &params_[off];
    const auto& a_in = cache.acts[l];
    if (l + 1 < layers) {
      const auto& a_out = cache.acts[l + 1];
      for (int o = 0; o < out; ++o) {
        if (a_out[o] <= 0.0) delta[o] = 0.0;
      }
    }
    if (grad) {
      double* gw = grad->data() + off;
      double* gb = gw + static_cast<size_t>(in) * out;
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* gr = gw + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) gr[i] += d * a_in[i];
        gb[o] += d;
      }
    }
    std::vector<double> prev(static_cast<size_t>(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* wr = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += wr[i] * d;
    }
    delta = std::move(prev);
  }
  return delta;
}

void Mlp::backward(const Cache& cache, std::span<const double> dout, std::vector<double>& grad) const {
  backprop(cache, dout, &grad);
}

std::vector<double> Mlp::backward_input(const Cache& cache, std::span<const double> dout) const {
  return backprop(cache, dout, nullptr);
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
  if (grad.size() != params.size()) throw std::invalid_argument("gradient size mismatch");
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    t = 0;
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t k = 0; k < params.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
    params[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> masked_softmax(std::span<const double> logits, std::span<const char> mask) {
  if (!mask.empty() && mask.size() != logits.size()) throw std::invalid_argument("mask width mismatch");
  auto on = [&](size_t k) { return mask.empty() || mask[k] != 0; };
  double top = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < logits.size(); ++k) {
    if (on(k)) top = std::max(top, logits[k]);
  }
  if (!std::isfinite(top)) throw std::invalid_argument("softmax mask removes every entry");
  std::vector<double> p(logits.size(), 0.0);
  double sum = 0.0;
  for (size_t k = 0; k < logits.size(); ++k) {
    if (!on(k)) continue;
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::vector<double> categorical_log_prob_grad(std::span<const double> probs, int a) {
  std::vector<double> g(probs.size());
  for (size_t k = 0; k < probs.size(); ++k) g[k] = -probs[k];
  g.at(static_cast<size_t>(a)) += 1.0;
  return g;
}

double categorical_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> categorical_entropy_grad(std::span<const double> probs) {
  const double h = categorical_entropy(probs);
  std::vector<double> g(probs.size(), 0.0);
  for (size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0.0) g[k] = -probs[k] * (std::log(probs[k]) + h);
  }
  return g;
}

int sample_categorical(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int last = -1;
  for (size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    acc += probs[k];
    last = static_cast<int>(k);
    if (u < acc) return last;
  }
  return last;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

Gaussian gaussian_head(std::span<const double> raw) {
  if (raw.size() % 2 != 0) throw std::invalid_argument("Gaussian head needs an even width");
  const size_t d = raw.size() / 2;
  Gaussian g;
  for (size_t k = 0; k < d; ++k) {
    g.mean.push_back(std::tanh(raw[k]));
    g.stddev.push_back(softplus(raw[d + k]));
  }
  return g;
}

double gaussian_log_prob(const Gaussian& g, std::span<const double> a) {
  double lp = 0.0;
  for (size_t k = 0; k < g.mean.size(); ++k) {
    const double z = (a[k] - g.mean[k]) / g.stddev[k];
    lp += -0.5 * z * z - std::log(g.stddev[k]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

std::vector<double> gaussian_log_prob_grad(std::span<const double> raw, std::span<const double> a) {
  const Gaussian g = gaussian_head(raw);
  const size_t d = g.mean.size();
  std::vector<double> out(raw.size());
  for (size_t k = 0; k < d; ++k) {
    const double s = g.stddev[k];
    const double diff = a[k] - g.mean[k];
    const double dmu = diff / (s * s);
    const double dsigma = diff * diff / (s * s * s) - 1.0 / s;
    out[k] = dmu * (1.0 - g.mean[k] * g.mean[k]);
    out[d + k] = dsigma * sigmoid(raw[d + k]);
  }
  return out;
}

double gaussian_entropy(const Gaussian& g) {
  double h = 0.0;
  for (double s : g.stddev) h += std::log(s) + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  return h;
}

std::vector<double> gaussian_entropy_grad(std::span<const double> raw) {
  const size_t d = raw.size() / 2;
  std::vector<double> out(raw.size(), 0.0);
  for (size_t k = 0; k < d; ++k) out[d + k] = sigmoid(raw[d + k]) / softplus(raw[d + k]);
  return out;
}

}  // namespace gridmend
