// SPDX-License-Identifier: Apache-2.0

#include "support/env_fuzz.hpp"

#include <fmt/format.h>

namespace gridmend::testing {

std::vector<AgentAction> random_actions(const Environment& env, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(-1.3, 1.3);
  std::uniform_int_distribution<int> route(-1, kRouteArity);
  std::bernoulli_distribution coin(0.5);
  std::vector<AgentAction> out(static_cast<size_t>(env.agent_count()));
  for (auto& a : out) {
    a.hl = coin(rng) ? HlAction::kTransport : HlAction::kPower;
    a.route = route(rng);
    a.magnitude = mag(rng);
    a.repair = coin(rng) ? 1 : 0;
  }
  return out;
}

FuzzReport fuzz_environment(Environment& env, long steps, std::uint64_t seed) {
  FuzzReport rep;
  std::mt19937_64 rng(seed);
  const int n = env.agent_count();
  auto note = [&](const std::string& s) {
    if (rep.notes.size() < 5) rep.notes.push_back(s);
  };

  while (rep.steps < steps) {
    env.reset(rng());
    ++rep.episodes;
    std::vector<DamagedLine> prev = env.damaged();
    std::vector<int> initial_resources;
    for (int a = 0; a < n; ++a) {
      if (env.agents()[a].kind == UnitKind::kRc) {
        initial_resources.push_back(env.config().fleet.rcs[env.agents()[a].unit].resources);
      }
    }
    // Step index before which each agent may not be connected again.
    std::vector<long> busy_until(static_cast<size_t>(n), -1);
    long t = 0;
    while (!env.done() && rep.steps < steps) {
      const auto actions = random_actions(env, rng);
      const StepResult r = env.step(actions);
      ++rep.steps;
      if (r.status == SolveStatus::kInfeasible) ++rep.infeasible_steps;

      if (!(r.reward >= 0.0 && r.reward <= 1.0)) {
        ++rep.lambda_out_of_range;
        note(fmt::format("lambda {} at step {}", r.reward, rep.steps));
      }
      double xs = 0.0;
      for (double x : r.xi) xs += x;
      rep.max_xi_sum = std::max(rep.max_xi_sum, xs);
      if (xs > 1.0 + 1e-6) {
        ++rep.xi_sum_exceeded;
        note(fmt::format("xi sum {} at step {}", xs, rep.steps));
      }

      for (int a = 0; a < n; ++a) {
        const auto& info = r.agents[static_cast<size_t>(a)];
        const Location loc = env.location(a);
        if (info.connected && (info.departed || !info.acted)) {
          ++rep.occupancy_violations;
          note(fmt::format("agent {} connected while moving at step {}", a, rep.steps));
        }
        if (info.connected && t < busy_until[static_cast<size_t>(a)]) {
          ++rep.occupancy_violations;
          note(fmt::format("agent {} connected during its trip at step {}", a, rep.steps));
        }
        if (info.departed) {
          // Remaining hours after this step's tick, plus this step itself.
          busy_until[static_cast<size_t>(a)] = t + 1 + loc.hours_left;
        }
        if (!info.connected && info.power_kw != 0.0) {
          ++rep.occupancy_violations;
          note(fmt::format("agent {} exchanges power while disconnected", a));
        }
        if (env.agents()[a].kind == UnitKind::kMess) {
          const auto& spec = env.config().fleet.messes[env.agents()[a].unit];
          const double soc = env.soc(env.agents()[a].unit);
          if (soc < spec.soc_min - 1e-9 || soc > spec.soc_max + 1e-9) {
            ++rep.soc_out_of_bounds;
            note(fmt::format("soc {} at step {}", soc, rep.steps));
          }
        }
        if (loc.node < 1 || loc.node > env.config().transport.node_count) {
          ++rep.occupancy_violations;
          note(fmt::format("agent {} at unknown node {}", a, loc.node));
        }
      }

      const auto& now = env.damaged();
      for (size_t k = 0; k < now.size(); ++k) {
        if (prev[k].repaired && !now[k].repaired) {
          ++rep.repair_regressions;
          note(fmt::format("line {} lost its repair", now[k].line));
        }
        if (now[k].progress < prev[k].progress) ++rep.repair_regressions;
      }
      prev = now;

      std::vector<int> spent(initial_resources.size(), 0);
      for (const auto& d : now) {
        if (!d.repaired) continue;
        const auto& who = env.agents()[static_cast<size_t>(d.repaired_by)];
        spent[static_cast<size_t>(who.unit)] += d.repair_resources;
      }
      for (size_t c = 0; c < spent.size(); ++c) {
        if (spent[c] > initial_resources[c] ||
            env.rc_resources(static_cast<int>(c)) != initial_resources[c] - spent[c]) {
          ++rep.resource_violations;
          note(fmt::format("crew {} resources out of balance", c));
        }
      }
      ++t;
    }
  }
  return rep;
}

}  // namespace gridmend::testing
