// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_PPO_HPP_
#define GRIDMEND_PPO_HPP_

#include <span>
#include <vector>

namespace gridmend {

struct Advantages {
  std::vector<double> advantage;      // Â_t
  std::vector<double> reward_to_go;   // R̂_t = Σ γ^(h-t) r_h
};

/// δ_t = r_t + γ V_{t+1} - V_t with V after the last step taken as zero.
/// Â_t = Σ_z (γλ)^(z-t) δ_z; λ = 1 gives the plain discounted δ-sum.
Advantages gae(std::span<const double> rewards, std::span<const double> values, double gamma,
               double lambda = 1.0);

/// min(ζÂ, clip(ζ, 1-ε, 1+ε)Â) and its derivative with respect to the new
/// log-probability. The unclipped arm wins ties.
struct ClipTerm {
  double value = 0.0;
  double dlogp = 0.0;
  bool clipped = false;
};

ClipTerm clipped_surrogate(double logp_new, double logp_old, double advantage, double eps);

/// Negative mean clipped surrogate over a batch (the quantity minimized).
double ppo_clip_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                     std::span<const double> advantages, double eps);

}  // namespace gridmend

#endif  // GRIDMEND_PPO_HPP_
