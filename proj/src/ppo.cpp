// SPDX-License-Identifier: Apache-2.0

#include "gridmend/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridmend {

Advantages gae(std::span<const double> rewards, std::span<const double> values, double gamma,
               double lambda) {
  if (rewards.size() != values.size()) throw std::invalid_argument("rewards and values differ in length");
  const size_t n = rewards.size();
  Advantages out;
  out.advantage.assign(n, 0.0);
  out.reward_to_go.assign(n, 0.0);
  double adv = 0.0;
  double ret = 0.0;
  for (size_t t = n; t-- > 0;) {
    const double next_v = t + 1 < n ? values[t + 1] : 0.0;
    const double delta = rewards[t] + gamma * next_v - values[t];
    adv = delta + gamma * lambda * adv;
    ret = rewards[t] + gamma * ret;
    out.advantage[t] = adv;
    out.reward_to_go[t] = ret;
  }
  return out;
}

ClipTerm clipped_surrogate(double logp_new, double logp_old, double advantage, double eps) {
  const double ratio = std::exp(logp_new - logp_old);
  const double plain = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage;
  if (plain <= clipped) return {plain, plain, false};
  return {clipped, 0.0, true};
}

double ppo_clip_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                     std::span<const double> advantages, double eps) {
  if (logp_new.size() != logp_old.size() || logp_new.size() != advantages.size()) {
    throw std::invalid_argument("PPO batch arrays differ in length");
  }
  if (logp_new.empty()) return 0.0;
  double s = 0.0;
  for (size_t k = 0; k < logp_new.size(); ++k) {
    s += clipped_surrogate(logp_new[k], logp_old[k], advantages[k], eps).value;
  }
  return -s / static_cast<double>(logp_new.size());
}

}  // namespace gridmend
