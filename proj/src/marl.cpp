// SPDX-License-Identifier: Apache-2.0

#include "gridmend/marl.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "gridmend/error.hpp"
#include "gridmend/ppo.hpp"

namespace gridmend {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kH2mappo: return "h2mappo";
    case Algorithm::kIppo: return "ippo";
    case Algorithm::kMappo: return "mappo";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "h2mappo") return Algorithm::kH2mappo;
  if (s == "ippo") return Algorithm::kIppo;
  if (s == "mappo") return Algorithm::kMappo;
  throw ConfigError("unknown algorithm '" + s + "' (expected h2mappo, ippo or mappo)");
}

std::string to_string(Head h) {
  switch (h) {
    case Head::kHl: return "hl";
    case Head::kRoute: return "route";
    case Head::kSchedule: return "schedule";
    case Head::kRepair: return "repair";
    case Head::kActor: return "actor";
    case Head::kCritic: return "critic";
  }
  return "?";
}

NetSlot& AgentModel::slot(Head h) {
  return const_cast<NetSlot&>(static_cast<const AgentModel&>(*this).slot(h));
}

const NetSlot& AgentModel::slot(Head h) const {
  switch (h) {
    case Head::kHl: return hl;
    case Head::kRoute: return route;
    case Head::kSchedule: return schedule;
    case Head::kRepair: return repair;
    case Head::kActor: return actor;
    case Head::kCritic: return critic;
  }
  throw std::logic_error("bad head");
}

namespace {

std::vector<int> layer_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

NetSlot make_slot(int in, const std::vector<int>& hidden, int out, double gain, std::mt19937_64& rng) {
  NetSlot s{Mlp(layer_widths(in, hidden, out)), {}};
  s.net.init(rng, gain);
  return s;
}

constexpr int kTransport = 0;
constexpr int kPower = 1;

double head_lr(Head h, const TrainConfig& cfg) {
  switch (h) {
    case Head::kHl: return cfg.lr_hl;
    case Head::kRoute: return cfg.lr_route;
    case Head::kSchedule:
    case Head::kRepair: return cfg.lr_schedule;
    case Head::kActor: return cfg.lr_actor;
    case Head::kCritic: return cfg.lr_critic;
  }
  return 0.0;
}

}  // namespace

int Policies::critic_width() const {
  switch (algorithm) {
    case Algorithm::kH2mappo: return obs_width + 2;
    case Algorithm::kIppo: return obs_width;
    case Algorithm::kMappo: return obs_width * static_cast<int>(agents.size());
  }
  return 0;
}

Policies Policies::create(Algorithm algorithm, const std::vector<AgentInfo>& agents, int obs_width,
                          const TrainConfig& cfg, std::mt19937_64& rng) {
  Policies p;
  p.algorithm = algorithm;
  p.obs_width = obs_width;
  p.agents.resize(agents.size());
  const int cw = p.critic_width();
  const double g = cfg.actor_final_gain;
  for (size_t i = 0; i < agents.size(); ++i) {
    AgentModel& m = p.agents[i];
    m.kind = agents[i].kind;
    if (algorithm == Algorithm::kH2mappo) {
      m.hl = make_slot(obs_width, cfg.hidden, 2, g, rng);
      m.route = make_slot(obs_width, cfg.hidden, kRouteArity, g, rng);
      if (m.kind == UnitKind::kRc) m.repair = make_slot(obs_width, cfg.hidden, 2, g, rng);
      else m.schedule = make_slot(obs_width, cfg.hidden, 2, g, rng);
    } else {
      m.actor = make_slot(obs_width, cfg.hidden, 4, g, rng);
    }
    m.critic = make_slot(cw, cfg.hidden, 1, 1.0, rng);
  }
  return p;
}

AgentAction baseline_action(UnitKind kind, double route_u, double power_u) {
  route_u = std::clamp(route_u, -1.0, 1.0);
  power_u = std::clamp(power_u, -1.0, 1.0);
  AgentAction a;
  const int seg = std::min(kRouteArity - 1, static_cast<int>((route_u + 1.0) / 2.0 * kRouteArity));
  if (seg == 0) {
    a.hl = HlAction::kPower;
  } else {
    a.hl = HlAction::kTransport;
    a.route = seg;
  }
  switch (kind) {
    case UnitKind::kMeg: a.magnitude = (power_u + 1.0) / 2.0; break;
    case UnitKind::kMess: a.magnitude = power_u; break;
    case UnitKind::kRc: a.repair = power_u > 0.0 ? 1 : 0; break;
  }
  return a;
}

namespace {

int pick(const std::vector<double>& probs, std::mt19937_64* rng) {
  return rng ? sample_categorical(probs, *rng) : argmax(probs);
}

std::vector<double> draw(const Gaussian& g, std::mt19937_64* rng) {
  std::vector<double> a = g.mean;
  if (rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (size_t k = 0; k < a.size(); ++k) a[k] += g.stddev[k] * n(*rng);
  }
  return a;
}

}  // namespace

std::vector<Decision> decide(const Policies& pol, const Environment& env,
                             const std::vector<std::vector<double>>& obs,
                             std::vector<int>& committed_hl, std::mt19937_64* rng) {
  const int n = env.agent_count();
  if (static_cast<int>(pol.agents.size()) != n || static_cast<int>(obs.size()) != n) {
    throw std::invalid_argument("policy set does not match the environment's agents");
  }
  committed_hl.resize(static_cast<size_t>(n), kPower);
  std::vector<Decision> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Decision& d = out[static_cast<size_t>(i)];
    const AgentModel& m = pol.agents[static_cast<size_t>(i)];
    const auto& o = obs[static_cast<size_t>(i)];
    int& committed = committed_hl[static_cast<size_t>(i)];
    if (env.in_transit(i)) {
      d.hl = committed;
      d.action.hl = committed == kPower ? HlAction::kPower : HlAction::kTransport;
      continue;
    }
    d.acted = true;
    if (pol.algorithm == Algorithm::kH2mappo) {
      const auto hp = masked_softmax(m.hl.net.forward(o));
      d.hl = pick(hp, rng);
      d.logp_hl = std::log(hp[static_cast<size_t>(d.hl)]);
      committed = d.hl;
      if (d.hl == kTransport) {
        const MoveSet ms = env.moves(i);
        for (int k = 0; k < kRouteArity; ++k) d.route_mask[static_cast<size_t>(k)] = ms.valid[static_cast<size_t>(k)];
        const auto rp = masked_softmax(m.route.net.forward(o), d.route_mask);
        d.route = pick(rp, rng);
        d.logp_route = std::log(rp[static_cast<size_t>(d.route)]);
        d.uses_route = true;
        d.action.hl = HlAction::kTransport;
        d.action.route = d.route;
      } else if (m.kind == UnitKind::kRc) {
        const auto rp = masked_softmax(m.repair.net.forward(o));
        d.repair = pick(rp, rng);
        d.logp_repair = std::log(rp[static_cast<size_t>(d.repair)]);
        d.uses_repair = true;
        d.action.hl = HlAction::kPower;
        d.action.repair = d.repair;
      } else {
        const Gaussian g = gaussian_head(m.schedule.net.forward(o));
        d.sample = draw(g, rng);
        d.logp_schedule = gaussian_log_prob(g, d.sample);
        d.uses_schedule = true;
        const double u = std::clamp(d.sample[0], -1.0, 1.0);
        d.action.hl = HlAction::kPower;
        d.action.magnitude = m.kind == UnitKind::kMeg ? (u + 1.0) / 2.0 : u;
      }
    } else {
      const Gaussian g = gaussian_head(m.actor.net.forward(o));
      d.sample = draw(g, rng);
      d.logp_actor = gaussian_log_prob(g, d.sample);
      d.uses_actor = true;
      d.action = baseline_action(m.kind, d.sample[0], d.sample[1]);
      d.hl = d.action.hl == HlAction::kPower ? kPower : kTransport;
      d.route = d.action.route;
      d.repair = d.action.repair;
      committed = d.hl;
    }
  }
  return out;
}

bool acts_on(Head h, const Decision& d) {
  switch (h) {
    case Head::kHl: return d.acted;
    case Head::kRoute: return d.uses_route;
    case Head::kSchedule: return d.uses_schedule;
    case Head::kRepair: return d.uses_repair;
    case Head::kActor: return d.uses_actor;
    case Head::kCritic: return true;
  }
  return false;
}

double head_loss(const AgentModel& m, Head h, const std::vector<Transition>& batch,
                 const std::vector<double>& advantages, const std::vector<double>& returns,
                 const TrainConfig& cfg, std::vector<double>* grad_out) {
  const NetSlot& s = m.slot(h);
  if (grad_out) grad_out->assign(s.net.params().size(), 0.0);
  if (s.net.empty()) return 0.0;
  std::vector<size_t> idx;
  for (size_t t = 0; t < batch.size(); ++t) {
    if (acts_on(h, batch[t].decision)) idx.push_back(t);
  }
  if (idx.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  std::vector<double> scratch;
  std::vector<double>& grad = grad_out ? *grad_out : scratch;
  grad.assign(s.net.params().size(), 0.0);
  double loss = 0.0;
  Mlp::Cache cache;
  for (size_t t : idx) {
    const Transition& tr = batch[t];
    const Decision& d = tr.decision;
    if (h == Head::kCritic) {
      const double v = s.net.forward(tr.critic_in, &cache)[0];
      const double err = v - returns[t];
      loss += err * err * inv_n;
      const double dv = 2.0 * err * inv_n;
      s.net.backward(cache, std::span<const double>(&dv, 1), grad);
      continue;
    }
    const auto out = s.net.forward(tr.obs, &cache);
    double logp = 0.0;
    double old = 0.0;
    double entropy = 0.0;
    std::vector<double> dlogp_dout;
    std::vector<double> dent_dout;
    if (h == Head::kSchedule || h == Head::kActor) {
      const Gaussian g = gaussian_head(out);
      logp = gaussian_log_prob(g, d.sample);
      old = h == Head::kSchedule ? d.logp_schedule : d.logp_actor;
      dlogp_dout = gaussian_log_prob_grad(out, d.sample);
      if (cfg.entropy_coef != 0.0) {
        entropy = gaussian_entropy(g);
        dent_dout = gaussian_entropy_grad(out);
      }
    } else {
      std::span<const char> mask;
      if (h == Head::kRoute) mask = d.route_mask;
      const auto probs = masked_softmax(out, mask);
      const int a = h == Head::kHl ? d.hl : h == Head::kRoute ? d.route : d.repair;
      logp = std::log(probs[static_cast<size_t>(a)]);
      old = h == Head::kHl ? d.logp_hl : h == Head::kRoute ? d.logp_route : d.logp_repair;
      dlogp_dout = categorical_log_prob_grad(probs, a);
      if (cfg.entropy_coef != 0.0) {
        entropy = categorical_entropy(probs);
        dent_dout = categorical_entropy_grad(probs);
      }
    }
    const ClipTerm c = clipped_surrogate(logp, old, advantages[t], cfg.clip);
    loss -= (c.value + cfg.entropy_coef * entropy) * inv_n;
    std::vector<double> dout(out.size());
    for (size_t k = 0; k < out.size(); ++k) {
      dout[k] = -c.dlogp * dlogp_dout[k] * inv_n;
      if (!dent_dout.empty()) dout[k] -= cfg.entropy_coef * dent_dout[k] * inv_n;
    }
    s.net.backward(cache, dout, grad);
  }
  if (!std::isfinite(loss)) {
    throw TrainingError(fmt::format("non-finite {} loss ({}) over {} transitions", to_string(h), loss,
                                    idx.size()));
  }
  return loss;
}

double update_head(AgentModel& m, Head h, const std::vector<Transition>& batch,
                   const std::vector<double>& advantages, const std::vector<double>& returns,
                   const TrainConfig& cfg) {
  NetSlot& s = m.slot(h);
  if (s.net.empty()) return 0.0;
  std::vector<double> grad;
  const double loss = head_loss(m, h, batch, advantages, returns, cfg, &grad);
  const bool any = std::any_of(batch.begin(), batch.end(),
                               [&](const Transition& tr) { return acts_on(h, tr.decision); });
  if (any) s.adam.step(s.net.params(), grad, head_lr(h, cfg));
  return loss;
}

void write_metrics_header(std::ostream& os) {
  os << "episode,seed,day,reward,hl_loss,route_loss,schedule_loss,repair_loss,actor_loss,critic_loss\n";
}

void write_metrics_row(std::ostream& os, const EpisodeMetrics& m) {
  os << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", m.episode,
                    m.seed, m.day, m.reward, m.hl_loss, m.route_loss, m.schedule_loss, m.repair_loss,
                    m.actor_loss, m.critic_loss);
}

namespace {

std::vector<double> critic_input(const Policies& pol, int agent,
                                 const std::vector<std::vector<double>>& obs, int hl, double xi) {
  const auto& o = obs[static_cast<size_t>(agent)];
  switch (pol.algorithm) {
    case Algorithm::kH2mappo: {
      std::vector<double> c = o;
      c.push_back(hl == kPower ? 1.0 : 0.0);
      c.push_back(hl == kPower ? xi : 0.0);
      return c;
    }
    case Algorithm::kIppo: return o;
    case Algorithm::kMappo: {
      std::vector<double> c;
      for (const auto& x : obs) c.insert(c.end(), x.begin(), x.end());
      return c;
    }
  }
  return o;
}

struct Losses {
  double hl = 0, route = 0, schedule = 0, repair = 0, actor = 0, critic = 0;
};

// One pass over buffered episodes. `episodes[i]` holds each agent's
// transitions for episode i.
Losses run_update(Policies& pol, const std::vector<std::vector<std::vector<Transition>>>& episodes,
                  const TrainConfig& cfg) {
  Losses total;
  std::array<int, 6> counts{};
  const size_t n = pol.agents.size();
  for (size_t i = 0; i < n; ++i) {
    AgentModel& m = pol.agents[i];
    std::vector<Transition> batch;
    std::vector<double> adv, ret;
    for (const auto& ep : episodes) {
      const auto& tr = ep[i];
      std::vector<double> rewards, values;
      for (const auto& t : tr) {
        rewards.push_back(t.reward);
        values.push_back(m.critic.net.forward(t.critic_in)[0]);
      }
      const Advantages a = gae(rewards, values, cfg.gamma, cfg.gae_lambda);
      adv.insert(adv.end(), a.advantage.begin(), a.advantage.end());
      ret.insert(ret.end(), a.reward_to_go.begin(), a.reward_to_go.end());
      batch.insert(batch.end(), tr.begin(), tr.end());
    }
    if (cfg.normalize_advantages && adv.size() > 1) {
      const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
      double var = 0.0;
      for (double a : adv) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / static_cast<double>(adv.size()));
      for (double& a : adv) a = (a - mean) / (sd + 1e-8);
    }
    for (size_t k = 0; k < kAllHeads.size(); ++k) {
      const Head h = kAllHeads[k];
      if (m.slot(h).net.empty()) continue;
      const double l = update_head(m, h, batch, adv, ret, cfg);
      ++counts[k];
      switch (h) {
        case Head::kHl: total.hl += l; break;
        case Head::kRoute: total.route += l; break;
        case Head::kSchedule: total.schedule += l; break;
        case Head::kRepair: total.repair += l; break;
        case Head::kActor: total.actor += l; break;
        case Head::kCritic: total.critic += l; break;
      }
    }
  }
  auto avg = [&](double& v, int c) { v = c > 0 ? v / c : 0.0; };
  avg(total.hl, counts[0]);
  avg(total.route, counts[1]);
  avg(total.schedule, counts[2]);
  avg(total.repair, counts[3]);
  avg(total.actor, counts[4]);
  avg(total.critic, counts[5]);
  return total;
}

}  // namespace

TrainResult train(Environment& env, const TrainConfig& cfg, const EpisodeCallback& on_episode) {
  if (cfg.episodes < 0) throw ConfigError("episode count must be non-negative");
  if (cfg.batch_steps < 1) throw ConfigError("batch_steps must be at least 1");
  std::mt19937_64 rng(cfg.seed);
  TrainResult res;
  res.policies = Policies::create(cfg.algorithm, env.agents(), env.observation_width(), cfg, rng);
  Policies& pol = res.policies;
  const int n = env.agent_count();

  std::vector<std::vector<std::vector<Transition>>> buffered;
  int buffered_steps = 0;
  for (int e = 0; e < cfg.episodes; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    EpisodeMetrics met;
    met.episode = e;
    met.seed = rng();
    auto obs = env.reset(met.seed);
    met.day = env.day();
    std::vector<int> committed(static_cast<size_t>(n), kPower);
    std::vector<std::vector<Transition>> ep(static_cast<size_t>(n));
    while (!env.done()) {
      auto ds = decide(pol, env, obs, committed, &rng);
      std::vector<AgentAction> actions;
      for (const auto& d : ds) actions.push_back(d.action);
      StepResult r = env.step(actions);
      met.reward += r.reward;
      for (int i = 0; i < n; ++i) {
        const auto& d = ds[static_cast<size_t>(i)];
        Transition t;
        t.obs = obs[static_cast<size_t>(i)];
        t.critic_in = critic_input(pol, i, obs, d.hl, r.xi[static_cast<size_t>(i)]);
        t.decision = d;
        t.reward = r.reward;
        ep[static_cast<size_t>(i)].push_back(std::move(t));
      }
      obs = std::move(r.observations);
    }
    buffered_steps += static_cast<int>(ep.empty() ? 0 : ep[0].size());
    buffered.push_back(std::move(ep));
    if (buffered_steps >= cfg.batch_steps) {
      Losses l;
      try {
        l = run_update(pol, buffered, cfg);
      } catch (const TrainingError& err) {
        throw TrainingError(fmt::format("episode {} (seed {}, day {}): {}", e, met.seed, met.day, err.what()));
      }
      met.hl_loss = l.hl;
      met.route_loss = l.route;
      met.schedule_loss = l.schedule;
      met.repair_loss = l.repair;
      met.actor_loss = l.actor;
      met.critic_loss = l.critic;
      buffered.clear();
      buffered_steps = 0;
    }
    met.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (on_episode) on_episode(met);
    res.metrics.push_back(met);
  }
  return res;
}

namespace {

std::uint64_t outage_seed_for(std::uint64_t seed, int day) {
  // splitmix64 of (seed, day)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(day) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EvalDay run_day(const Policies& pol, Environment& env, int day, const EvalOptions& opt) {
  using Clock = std::chrono::steady_clock;
  EvalDay out;
  out.day = day;
  out.day_id = env.config().profiles.days() > 0 ? env.config().profiles.day_ids().at(static_cast<size_t>(day)) : day;
  out.outage_seed = outage_seed_for(opt.seed, day);
  const auto& cfg = env.config();
  const OutageScenario outage = sample_outage(cfg.net, cfg.outage, out.outage_seed);
  out.damaged_lines = static_cast<int>(outage.damaged.size());
  auto obs = env.reset(out.outage_seed, day, outage);
  std::vector<int> committed;
  std::ostringstream trace;
  int steps = 0;
  double total_ms = 0.0;
  while (!env.done()) {
    const auto t0 = Clock::now();
    const auto ds = decide(pol, env, obs, committed, nullptr);
    const auto t1 = Clock::now();
    std::vector<AgentAction> actions;
    for (const auto& d : ds) actions.push_back(d.action);
    StepResult r = env.step(actions);
    const auto t2 = Clock::now();
    out.max_decide_ms = std::max(out.max_decide_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
    total_ms += std::chrono::duration<double, std::milli>(t2 - t0).count();
    out.lambda_sum += r.reward;
    if (opt.trace) env.write_trace(trace, r, actions);
    obs = std::move(r.observations);
    ++steps;
  }
  out.mean_step_ms = steps ? total_ms / steps : 0.0;
  out.trace = trace.str();
  return out;
}

}  // namespace

std::vector<EvalDay> evaluate(const Policies& pol, const EnvConfig& env_cfg, const EvalOptions& opt) {
  std::vector<EvalDay> out(opt.days.size());
  const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(opt.days.size())));
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    try {
      Environment env(env_cfg);
      for (size_t k = next++; k < opt.days.size(); k = next++) out[k] = run_day(pol, env, opt.days[k], opt);
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_eval_header(std::ostream& os) {
  os << "day,day_id,outage_seed,damaged_lines,lambda_sum,mean_step_ms,max_decide_ms\n";
}

void write_eval_row(std::ostream& os, const EvalDay& d) {
  os << fmt::format("{},{},{},{},{:.17g},{:.6f},{:.6f}\n", d.day, d.day_id, d.outage_seed, d.damaged_lines,
                    d.lambda_sum, d.mean_step_ms, d.max_decide_ms);
}

// Checkpoint layout (native little-endian): "GMCK", u32 version,
// u32 algorithm, i32 obs width, u32 agents; per agent u32 kind and, for each
// head slot, u32 layer count, i32 widths, u64 n, n params, Adam m and v
// (u64 n each, may be 0) and i64 step; trailing u64 FNV-1a of all prior bytes.
namespace {

constexpr char kMagic[4] = {'G', 'M', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, size_t end, std::string source)
      : buf_(buf), end_(end), source_(std::move(source)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> get_doubles() {
    const auto n = get<std::uint64_t>();
    if (n > (end_ - pos_) / sizeof(double)) fail("array length runs past the end of the file");
    std::vector<double> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  bool at_end() const { return pos_ == end_; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, what); }

 private:
  void need(size_t n) const {
    if (end_ - pos_ < n) fail("truncated checkpoint");
  }
  const std::string& buf_;
  size_t pos_ = 0;
  size_t end_;
  std::string source_;
};

}  // namespace

void write_checkpoint(std::ostream& os, const Policies& pol) {
  Writer w;
  w.bytes().append(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pol.algorithm));
  w.put<std::int32_t>(pol.obs_width);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pol.agents.size()));
  for (const auto& m : pol.agents) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.kind));
    for (Head h : kAllHeads) {
      const NetSlot& s = m.slot(h);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(s.net.widths().size()));
      for (int x : s.net.widths()) w.put<std::int32_t>(x);
      w.put_doubles(s.net.params());
      w.put_doubles(s.adam.m);
      w.put_doubles(s.adam.v);
      w.put<std::int64_t>(s.adam.t);
    }
  }
  const std::uint64_t sum = fnv1a(w.bytes());
  w.put<std::uint64_t>(sum);
  os.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!os) throw Error("failed to write checkpoint");
}

Policies read_checkpoint(std::istream& is, const std::string& source) {
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 + sizeof(std::uint64_t) || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw ParseError(source, "not a gridmend checkpoint");
  }
  const size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + body, sizeof(stored));
  if (stored != fnv1a(buf.substr(0, body))) throw ParseError(source, "checksum mismatch (file is corrupted)");
  Reader r(buf, body, source);
  r.get<std::uint32_t>();  // magic, already checked
  if (const auto v = r.get<std::uint32_t>(); v != kCheckpointVersion) {
    r.fail(fmt::format("unsupported checkpoint version {}", v));
  }
  Policies pol;
  const auto algo = r.get<std::uint32_t>();
  if (algo > 2) r.fail("unknown algorithm tag");
  pol.algorithm = static_cast<Algorithm>(algo);
  pol.obs_width = r.get<std::int32_t>();
  const auto n = r.get<std::uint32_t>();
  if (n > 1024) r.fail("implausible agent count");
  pol.agents.resize(n);
  for (auto& m : pol.agents) {
    const auto kind = r.get<std::uint32_t>();
    if (kind > 2) r.fail("unknown unit kind");
    m.kind = static_cast<UnitKind>(kind);
    for (Head h : kAllHeads) {
      NetSlot& s = m.slot(h);
      const auto layers = r.get<std::uint32_t>();
      if (layers > 64) r.fail("implausible layer count");
      std::vector<int> widths;
      for (std::uint32_t k = 0; k < layers; ++k) widths.push_back(r.get<std::int32_t>());
      auto params = r.get_doubles();
      if (layers > 0) {
        try {
          s.net = Mlp(widths);
        } catch (const std::invalid_argument& e) {
          r.fail(e.what());
        }
        if (params.size() != s.net.params().size()) r.fail("parameter count does not match layer widths");
        s.net.params() = std::move(params);
      } else if (!params.empty()) {
        r.fail("parameters for an empty network");
      }
      s.adam.m = r.get_doubles();
      s.adam.v = r.get_doubles();
      s.adam.t = r.get<std::int64_t>();
    }
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return pol;
}

void save_checkpoint(const std::filesystem::path& path, const Policies& pol) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(os, pol);
}

Policies load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError(path.string(), "cannot open checkpoint");
  return read_checkpoint(is, path.string());
}

}  // namespace gridmend
