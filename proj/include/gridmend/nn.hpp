// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_NN_HPP_
#define GRIDMEND_NN_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gridmend {

/// Fully connected network with ReLU hidden layers and a linear output.
/// Parameters live in one flat vector: per layer, W (out x in, row-major)
/// followed by b.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> widths);

  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero; the output
  /// layer's weights are multiplied by `final_gain`.
  void init(std::mt19937_64& rng, double final_gain = 1.0);

  bool empty() const { return widths_.empty(); }
  const std::vector<int>& widths() const { return widths_; }
  int input_width() const { return widths_.empty() ? 0 : widths_.front(); }
  int output_width() const { return widths_.empty() ? 0 : widths_.back(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Activations of every layer; acts[0] is the input.
  struct Cache {
    std::vector<std::vector<double>> acts;
  };

  std::vector<double> forward(std::span<const double> x, Cache* cache = nullptr) const;
  /// Accumulates dLoss/dparams into `grad` given dLoss/doutput.
  void backward(const Cache& cache, std::span<const double> dout, std::vector<double>& grad) const;
  /// dLoss/dinput, for gradient checks.
  std::vector<double> backward_input(const Cache& cache, std::span<const double> dout) const;

 private:
  std::vector<double> backprop(const Cache& cache, std::span<const double> dout,
                               std::vector<double>* grad) const;

  std::vector<int> widths_;
  std::vector<double> params_;
};

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m, v;
  std::int64_t t = 0;

  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
};

double softplus(double x);
double sigmoid(double x);

/// Softmax over entries with mask != 0 (all entries when the mask is empty);
/// masked entries get probability 0.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const char> mask = {});

/// d log p[a] / d logits for a masked softmax.
std::vector<double> categorical_log_prob_grad(std::span<const double> probs, int a);

double categorical_entropy(std::span<const double> probs);
/// d entropy / d logits.
std::vector<double> categorical_entropy_grad(std::span<const double> probs);

int sample_categorical(std::span<const double> probs, std::mt19937_64& rng);
int argmax(std::span<const double> v);

/// Diagonal Gaussian read from a raw head of width 2d: the first d entries
/// pass through tanh (mean), the last d through softplus (stddev).
struct Gaussian {
  std::vector<double> mean;
  std::vector<double> stddev;
};

Gaussian gaussian_head(std::span<const double> raw);
double gaussian_log_prob(const Gaussian& g, std::span<const double> a);
/// d log N(a; mu, sigma) / d raw.
std::vector<double> gaussian_log_prob_grad(std::span<const double> raw, std::span<const double> a);
double gaussian_entropy(const Gaussian& g);
std::vector<double> gaussian_entropy_grad(std::span<const double> raw);

}  // namespace gridmend

#endif  // GRIDMEND_NN_HPP_
