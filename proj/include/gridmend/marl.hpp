// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_MARL_HPP_
#define GRIDMEND_MARL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "gridmend/env.hpp"
#include "gridmend/nn.hpp"

namespace gridmend {

enum class Algorithm { kH2mappo, kIppo, kMappo };
std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kH2mappo;
  int episodes = 300;
  int batch_steps = 24;  // J; an update runs once this many steps of finished episodes are buffered
  double gamma = 0.99;
  double clip = 0.2;
  double gae_lambda = 1.0;  // 1 reproduces the plain discounted δ-sum
  double lr_hl = 1e-4;
  double lr_route = 1e-4;
  double lr_schedule = 1e-4;  // continuous MPS head and the RC repair head
  double lr_actor = 1e-4;     // single actor of the baselines
  double lr_critic = 1e-3;
  double entropy_coef = 0.0;
  bool normalize_advantages = false;
  std::vector<int> hidden = {128, 64};
  double actor_final_gain = 0.01;
  std::uint64_t seed = 1;
};

struct NetSlot {
  Mlp net;
  Adam adam;
};

enum class Head { kHl, kRoute, kSchedule, kRepair, kActor, kCritic };
inline constexpr std::array<Head, 6> kAllHeads = {Head::kHl,     Head::kRoute, Head::kSchedule,
                                                  Head::kRepair, Head::kActor, Head::kCritic};
std::string to_string(Head h);

/// Networks of one agent. H2MAPPO fills hl/route/critic plus schedule (MEG,
/// MESS) or repair (RC); the baselines fill actor/critic. Unused slots are
/// empty.
struct AgentModel {
  UnitKind kind = UnitKind::kMeg;
  NetSlot hl, route, schedule, repair, actor, critic;

  NetSlot& slot(Head h);
  const NetSlot& slot(Head h) const;
};

struct Policies {
  Algorithm algorithm = Algorithm::kH2mappo;
  int obs_width = 0;
  std::vector<AgentModel> agents;

  static Policies create(Algorithm algorithm, const std::vector<AgentInfo>& agents, int obs_width,
                         const TrainConfig& cfg, std::mt19937_64& rng);
  int critic_width() const;
};

/// One agent's choice for one step plus what learning needs from it.
struct Decision {
  bool acted = false;  // false while travelling: nothing sampled
  AgentAction action;
  int hl = 1;                  // 0 transport, 1 power
  int route = 0;
  std::array<char, 4> route_mask{};
  std::vector<double> sample;  // raw Gaussian draw (before clipping)
  int repair = 0;
  double logp_hl = 0.0, logp_route = 0.0, logp_schedule = 0.0, logp_repair = 0.0, logp_actor = 0.0;
  bool uses_route = false, uses_schedule = false, uses_repair = false, uses_actor = false;
};

/// Samples every agent's action (rng != nullptr) or takes the mode of each
/// head (rng == nullptr). `committed_hl` carries each agent's HL action
/// through transit steps and is updated in place.
std::vector<Decision> decide(const Policies& pol, const Environment& env,
                             const std::vector<std::vector<double>>& obs,
                             std::vector<int>& committed_hl, std::mt19937_64* rng);

/// Continuous baseline output to an environment action: the first entry
/// picks one of four routing segments (segment 0 means stay and act on the
/// power side), the second sets the magnitude or, for a crew, repair when
/// positive.
AgentAction baseline_action(UnitKind kind, double route_u, double power_u);

struct Transition {
  std::vector<double> obs;
  std::vector<double> critic_in;
  Decision decision;
  double reward = 0.0;
};

/// True when head `h` produced part of decision `d` and so learns from it.
bool acts_on(Head h, const Decision& d);

/// Loss of one head on one batch and, when `grad` is given, its gradient
/// with respect to that head's parameters. No parameters change.
double head_loss(const AgentModel& m, Head h, const std::vector<Transition>& batch,
                 const std::vector<double>& advantages, const std::vector<double>& returns,
                 const TrainConfig& cfg, std::vector<double>* grad = nullptr);

/// head_loss followed by one Adam step. A head with no acting transitions
/// is left untouched and reports 0.
double update_head(AgentModel& m, Head h, const std::vector<Transition>& batch,
                   const std::vector<double>& advantages, const std::vector<double>& returns,
                   const TrainConfig& cfg);

struct EpisodeMetrics {
  int episode = 0;
  std::uint64_t seed = 0;
  int day = 0;
  double reward = 0.0;  // Σ λ_t
  double hl_loss = 0.0, route_loss = 0.0, schedule_loss = 0.0, repair_loss = 0.0;
  double actor_loss = 0.0, critic_loss = 0.0;
  double wall_ms = 0.0;
};

/// Writes everything except wall time, so reruns compare byte for byte.
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const EpisodeMetrics& m);

struct TrainResult {
  Policies policies;
  std::vector<EpisodeMetrics> metrics;
};

using EpisodeCallback = std::function<void(const EpisodeMetrics&)>;

TrainResult train(Environment& env, const TrainConfig& cfg, const EpisodeCallback& on_episode = {});

struct EvalOptions {
  std::vector<int> days;  // indices into the environment's profile set
  std::uint64_t seed = 1;
  int workers = 1;
  bool trace = false;
};

struct EvalDay {
  int day = 0;     // index into the profile set
  int day_id = 0;  // the profile set's own day label
  std::uint64_t outage_seed = 0;
  int damaged_lines = 0;
  double lambda_sum = 0.0;
  double mean_step_ms = 0.0;
  double max_decide_ms = 0.0;
  std::string trace;  // CSV rows when EvalOptions::trace is set
};

/// Greedy rollouts, one per day, each with its own outage draw.
std::vector<EvalDay> evaluate(const Policies& pol, const EnvConfig& env_cfg, const EvalOptions& opt);
void write_eval_header(std::ostream& os);
void write_eval_row(std::ostream& os, const EvalDay& d);

void write_checkpoint(std::ostream& os, const Policies& pol);
Policies read_checkpoint(std::istream& is, const std::string& source = "<checkpoint>");
void save_checkpoint(const std::filesystem::path& path, const Policies& pol);
Policies load_checkpoint(const std::filesystem::path& path);

}  // namespace gridmend

#endif  // GRIDMEND_MARL_HPP_
