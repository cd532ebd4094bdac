// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gridmend/error.hpp"
#include "gridmend/marl.hpp"
#include "gridmend/nn.hpp"
#include "gridmend/ppo.hpp"
#include "support/fixtures.hpp"
#include "support/grad_check.hpp"

using namespace gridmend;
using namespace gridmend::testing;

namespace {

TrainConfig small(Algorithm a, int episodes = 4) {
  TrainConfig c;
  c.algorithm = a;
  c.episodes = episodes;
  c.hidden = {16, 8};
  c.seed = 5;
  return c;
}

std::vector<double> all_params(const Policies& p) {
  std::vector<double> out;
  for (const auto& m : p.agents) {
    for (Head h : kAllHeads) {
      const auto& v = m.slot(h).net.params();
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("masked softmax") {
  const std::vector<double> flat = {3.0, 3.0, 3.0, 3.0};
  for (double p : masked_softmax(flat)) CHECK(p == doctest::Approx(0.25));

  const auto dom = masked_softmax(std::vector<double>{60.0, 0.0, 0.0, 0.0});
  CHECK(dom[0] == doctest::Approx(1.0));
  CHECK(dom[1] < 1e-20);

  const std::vector<char> mask = {1, 0, 1, 0};
  const auto m = masked_softmax(std::vector<double>{0.0, 9.0, 0.0, 9.0}, mask);
  CHECK(m == std::vector<double>{0.5, 0.0, 0.5, 0.0});

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(4), b(4);
    const double shift = n(rng) * 100.0;
    for (int k = 0; k < 4; ++k) {
      a[k] = n(rng);
      b[k] = a[k] + shift;
    }
    const auto pa = masked_softmax(a), pb = masked_softmax(b);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(pa[k] - pb[k]) < 1e-9);
  }
}

TEST_CASE("Gaussian head") {
  const Gaussian g = gaussian_head(std::vector<double>{0.0, 0.0});
  CHECK(g.mean[0] == 0.0);
  CHECK(g.stddev[0] == doctest::Approx(std::log(2.0)));
  const double peak = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(g.stddev[0]);
  CHECK(gaussian_log_prob(g, std::vector<double>{0.0}) == doctest::Approx(peak));
  CHECK(gaussian_log_prob(g, std::vector<double>{0.3}) < peak);
  // Means stay inside the action box whatever the raw output.
  const Gaussian far = gaussian_head(std::vector<double>{50.0, -50.0});
  CHECK(far.mean[0] <= 1.0);
  CHECK(far.stddev[0] > 0.0);
}

TEST_CASE("sampled magnitudes are clipped into the action box") {
  EnvConfig cfg = toy_env_config();
  cfg.fleet.megs.push_back(MegSpec{});
  cfg.fleet.meg_start.push_back(2);
  Environment env(cfg);
  TrainConfig tc = small(Algorithm::kH2mappo);
  tc.actor_final_gain = 1.0;
  std::mt19937_64 rng(8);
  const Policies pol = Policies::create(tc.algorithm, env.agents(), env.observation_width(), tc, rng);
  for (int ep = 0; ep < 20; ++ep) {
    auto obs = env.reset(rng());
    std::vector<int> committed;
    while (!env.done()) {
      const auto ds = decide(pol, env, obs, committed, &rng);
      std::vector<AgentAction> acts;
      for (size_t i = 0; i < ds.size(); ++i) {
        const auto kind = env.agents()[i].kind;
        const double mag = ds[i].action.magnitude;
        if (kind == UnitKind::kMeg) {
          CHECK(mag >= 0.0);
          CHECK(mag <= 1.0);
        } else if (kind == UnitKind::kMess) {
          CHECK(mag >= -1.0);
          CHECK(mag <= 1.0);
        }
        if (ds[i].action.hl == HlAction::kTransport && ds[i].acted) {
          CHECK(env.moves(static_cast<int>(i)).valid[static_cast<size_t>(ds[i].action.route)]);
        }
        acts.push_back(ds[i].action);
      }
      obs = env.step(acts).observations;
    }
  }
}

TEST_CASE("advantage estimates") {
  SUBCASE("discounted delta sum") {
    const std::vector<double> r = {1.0, 1.0, 1.0}, v = {0.0, 0.0, 0.0};
    const Advantages a = gae(r, v, 0.5);
    CHECK(a.advantage[0] == doctest::Approx(1.75));
    CHECK(a.advantage[1] == doctest::Approx(1.5));
    CHECK(a.advantage[2] == doctest::Approx(1.0));
    CHECK(a.reward_to_go == a.advantage);
  }
  SUBCASE("undiscounted deltas telescope") {
    const std::vector<double> r = {1.0, 2.0, 3.0}, v = {0.5, 1.0, 2.0};
    const Advantages a = gae(r, v, 1.0);
    CHECK(a.advantage[0] == doctest::Approx(5.5));
    CHECK(a.advantage[1] == doctest::Approx(4.0));
    CHECK(a.advantage[2] == doctest::Approx(1.0));
    CHECK(a.reward_to_go[0] == doctest::Approx(6.0));
  }
  SUBCASE("random rewards telescope") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> r(24), v(24);
    for (int t = 0; t < 24; ++t) {
      r[t] = u(rng);
      v[t] = u(rng);
    }
    const Advantages a = gae(r, v, 1.0);
    for (int t = 0; t < 24; ++t) {
      double tail = 0.0;
      for (int z = t; z < 24; ++z) tail += r[z];
      CHECK(a.advantage[t] == doctest::Approx(tail - v[t]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(gae(std::vector<double>{1.0}, std::vector<double>{}, 0.9), std::invalid_argument);
}

TEST_CASE("clipped surrogate") {
  SUBCASE("unit ratio returns the advantage") {
    const ClipTerm c = clipped_surrogate(-0.7, -0.7, 2.5, 0.2);
    CHECK(c.value == doctest::Approx(2.5));
    CHECK_FALSE(c.clipped);
    CHECK(c.dlogp == doctest::Approx(2.5));
  }
  SUBCASE("large ratio with positive advantage is capped") {
    const ClipTerm c = clipped_surrogate(std::log(1.5), 0.0, 1.0, 0.2);
    CHECK(c.value == doctest::Approx(1.2));
    CHECK(c.clipped);
    CHECK(c.dlogp == 0.0);
  }
  SUBCASE("large ratio with negative advantage is not capped") {
    const ClipTerm c = clipped_surrogate(std::log(1.5), 0.0, -1.0, 0.2);
    CHECK(c.value == doctest::Approx(-1.5));
    CHECK_FALSE(c.clipped);
  }
  SUBCASE("ratio inside the band") {
    const ClipTerm c = clipped_surrogate(std::log(1.1), 0.0, -3.0, 0.2);
    CHECK(c.value == doctest::Approx(-3.3));
    CHECK_FALSE(c.clipped);
  }
  SUBCASE("two transitions by hand") {
    // 0.7/0.5 = 1.4 with A = 2: min(2.8, 2.4) = 2.4.
    // 0.3/0.5 = 0.6 with A = -1: min(-0.6, -0.8) = -0.8.
    const std::vector<double> fresh = {std::log(0.7), std::log(0.3)};
    const std::vector<double> old = {std::log(0.5), std::log(0.5)};
    const std::vector<double> adv = {2.0, -1.0};
    CHECK(std::abs(ppo_clip_loss(fresh, old, adv, 0.2) - (-(2.4 - 0.8) / 2.0)) < 1e-10);
  }
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters alone") {
    Adam opt;
    std::vector<double> p = {1.0, -2.0};
    opt.step(p, {0.0, 0.0}, 0.1);
    CHECK(p == std::vector<double>{1.0, -2.0});
  }
  SUBCASE("first step has the learning rate's size") {
    Adam opt;
    std::vector<double> p = {0.0, 0.0};
    opt.step(p, {3.0, -0.02}, 0.01);
    CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-5));
  }
  SUBCASE("quadratic bowl") {
    Adam opt;
    const std::vector<double> c = {1.5, -0.5, 3.0};
    std::vector<double> p = {0.0, 0.0, 0.0};
    for (int it = 0; it < 2000; ++it) {
      std::vector<double> g(3);
      for (int k = 0; k < 3; ++k) g[k] = 2.0 * (p[k] - c[k]);
      opt.step(p, g, 0.01);
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(p[k] - c[k]) < 1e-2);
  }
}

TEST_CASE("analytic gradients match central differences") {
  for (Algorithm a : {Algorithm::kH2mappo, Algorithm::kIppo, Algorithm::kMappo}) {
    for (std::uint64_t seed : {1u, 2u}) {
      for (const HeadCheck& hc : gradient_check(a, seed)) {
        CHECK_MESSAGE(hc.relative_error < 1e-4, to_string(a) << " agent " << hc.agent << " "
                                                              << to_string(hc.head) << " error "
                                                              << hc.relative_error);
        CHECK(hc.skipped * 4 <= hc.params);
      }
    }
  }
}

TEST_CASE("an update touches only its own head") {
  Environment env(toy_env_config());
  TrainConfig tc = small(Algorithm::kH2mappo);
  std::mt19937_64 rng(3);
  Policies pol = Policies::create(tc.algorithm, env.agents(), env.observation_width(), tc, rng);
  std::vector<Transition> batch;
  auto obs = env.reset(1);
  std::vector<int> committed;
  while (!env.done()) {
    const auto ds = decide(pol, env, obs, committed, &rng);
    Transition t;
    t.obs = obs[1];
    t.critic_in.assign(static_cast<size_t>(pol.critic_width()), 0.1);
    t.decision = ds[1];
    batch.push_back(t);
    std::vector<AgentAction> acts;
    for (const auto& d : ds) acts.push_back(d.action);
    obs = env.step(acts).observations;
  }
  std::vector<double> adv(batch.size(), 1.0), ret(batch.size(), 0.5);
  AgentModel& rc = pol.agents[1];
  REQUIRE(rc.kind == UnitKind::kRc);
  CHECK(rc.schedule.net.empty());
  const AgentModel before = rc;
  update_head(rc, Head::kHl, batch, adv, ret, tc);
  CHECK(rc.hl.net.params() != before.hl.net.params());
  CHECK(rc.route.net.params() == before.route.net.params());
  CHECK(rc.repair.net.params() == before.repair.net.params());
  CHECK(rc.critic.net.params() == before.critic.net.params());

  // A head none of the transitions used stays put.
  std::vector<Transition> idle = batch;
  for (auto& t : idle) t.decision.uses_route = false;
  const auto route_before = rc.route.net.params();
  CHECK(update_head(rc, Head::kRoute, idle, adv, ret, tc) == 0.0);
  CHECK(rc.route.net.params() == route_before);
}

TEST_CASE("policy layout") {
  Environment env(toy_env_config());
  const int o = env.observation_width();
  std::mt19937_64 rng(1);
  const TrainConfig tc = small(Algorithm::kH2mappo);
  CHECK(Policies::create(Algorithm::kMappo, env.agents(), o, tc, rng).critic_width() == 2 * o);
  CHECK(Policies::create(Algorithm::kIppo, env.agents(), o, tc, rng).critic_width() == o);
  const Policies h = Policies::create(Algorithm::kH2mappo, env.agents(), o, tc, rng);
  CHECK(h.critic_width() == o + 2);
  CHECK(h.agents[0].hl.net.output_width() == 2);
  CHECK(h.agents[0].route.net.output_width() == kRouteArity);
  CHECK(h.agents[0].schedule.net.output_width() == 2);
  CHECK(h.agents[1].repair.net.output_width() == 2);
  CHECK(h.agents[0].actor.net.empty());
  const Policies b = Policies::create(Algorithm::kIppo, env.agents(), o, tc, rng);
  CHECK(b.agents[0].actor.net.output_width() == 4);
  CHECK(b.agents[0].hl.net.empty());
  CHECK(parse_algorithm("h2mappo") == Algorithm::kH2mappo);
  CHECK_THROWS_AS(parse_algorithm("ddpg"), ConfigError);
}

TEST_CASE("training is deterministic and zero episodes leave the initial weights") {
  TrainConfig tc = small(Algorithm::kH2mappo, 0);
  Environment env(toy_env_config());
  const TrainResult none = train(env, tc);
  CHECK(none.metrics.empty());
  std::mt19937_64 rng(tc.seed);
  const Policies init = Policies::create(tc.algorithm, env.agents(), env.observation_width(), tc, rng);
  CHECK(all_params(none.policies) == all_params(init));

  tc.episodes = 3;
  Environment e1(toy_env_config()), e2(toy_env_config());
  const TrainResult a = train(e1, tc), b = train(e2, tc);
  CHECK(all_params(a.policies) == all_params(b.policies));
  REQUIRE(a.metrics.size() == 3);
  for (size_t k = 0; k < 3; ++k) {
    CHECK(a.metrics[k].reward == b.metrics[k].reward);
    CHECK(a.metrics[k].critic_loss == b.metrics[k].critic_loss);
    CHECK(a.metrics[k].seed == b.metrics[k].seed);
  }
  CHECK(all_params(a.policies) != all_params(init));
  tc.batch_steps = 0;
  CHECK_THROWS_AS(train(e1, tc), ConfigError);
}

TEST_CASE("evaluation extremes and timing") {
  const TrainConfig tc = small(Algorithm::kH2mappo, 0);
  SUBCASE("everything restorable") {
    EnvConfig cfg = toy_env_config();
    cfg.net.generators[0].p_max_kw = 500.0;
    cfg.outage.fragility[2] = 0.0;
    Environment env(cfg);
    const Policies pol = train(env, tc).policies;
    const auto days = evaluate(pol, cfg, {{0}, 1, 1, false});
    CHECK(days[0].lambda_sum == doctest::Approx(24.0).epsilon(1e-9));
    CHECK(days[0].damaged_lines == 0);
    CHECK(days[0].mean_step_ms < 10.0);
  }
  SUBCASE("no supply at all") {
    EnvConfig cfg = toy_env_config();
    cfg.net.generators[0].p_max_kw = 0.0;
    cfg.fleet.messes.clear();
    cfg.fleet.mess_start.clear();
    Environment env(cfg);
    const Policies pol = train(env, tc).policies;
    const auto days = evaluate(pol, cfg, {{0}, 1, 1, true});
    CHECK(days[0].lambda_sum == 0.0);
    CHECK(std::count(days[0].trace.begin(), days[0].trace.end(), '\n') == 24);
  }
  SUBCASE("same seed, same outages, any worker count") {
    const EnvConfig cfg = toy_env_config();
    Environment env(cfg);
    const Policies pol = train(env, tc).policies;
    const auto one = evaluate(pol, cfg, {{0, 0, 0}, 9, 1, false});
    const auto three = evaluate(pol, cfg, {{0, 0, 0}, 9, 3, false});
    for (size_t k = 0; k < one.size(); ++k) {
      CHECK(one[k].lambda_sum == three[k].lambda_sum);
      CHECK(one[k].outage_seed == three[k].outage_seed);
    }
  }
}

TEST_CASE("checkpoints") {
  Environment env(toy_env_config());
  const TrainResult r = train(env, small(Algorithm::kIppo, 2));
  std::ostringstream os;
  write_checkpoint(os, r.policies);
  const std::string bytes = os.str();

  std::istringstream is(bytes);
  const Policies back = read_checkpoint(is);
  CHECK(back.algorithm == Algorithm::kIppo);
  CHECK(back.obs_width == r.policies.obs_width);
  CHECK(all_params(back) == all_params(r.policies));

  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x5a;
  std::istringstream bad(flipped);
  CHECK_THROWS_AS(read_checkpoint(bad), ParseError);
  std::istringstream cut(bytes.substr(0, bytes.size() / 3));
  CHECK_THROWS_AS(read_checkpoint(cut), ParseError);
  std::istringstream junk("hello world");
  CHECK_THROWS_AS(read_checkpoint(junk), ParseError);

  TempDir dir("ckpt");
  save_checkpoint(dir / "p.bin", r.policies);
  CHECK(all_params(load_checkpoint(dir / "p.bin")) == all_params(r.policies));
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), ParseError);
}

TEST_CASE("baseline actions") {
  const AgentAction stay = baseline_action(UnitKind::kMeg, -1.0, -1.0);
  CHECK(stay.hl == HlAction::kPower);
  CHECK(stay.magnitude == 0.0);
  const AgentAction mid = baseline_action(UnitKind::kMess, 0.1, -0.4);
  CHECK(mid.hl == HlAction::kTransport);
  CHECK(mid.route == 2);
  CHECK(mid.magnitude == -0.4);
  CHECK(baseline_action(UnitKind::kMeg, 1.0, 1.0).route == kRouteArity - 1);
  CHECK(baseline_action(UnitKind::kMeg, 9.0, 9.0).magnitude == 1.0);
  CHECK(baseline_action(UnitKind::kRc, -0.9, 0.3).repair == 1);
  CHECK(baseline_action(UnitKind::kRc, -0.9, -0.3).repair == 0);
}
