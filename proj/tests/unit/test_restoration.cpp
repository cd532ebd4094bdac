// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"
#include "gridmend/restoration.hpp"
#include "support/fixtures.hpp"

using namespace gridmend;
using namespace gridmend::testing;
using nlohmann::json;

namespace {

MipOptions exact() {
  MipOptions o;
  o.time_limit_s = 0.0;
  o.node_limit = 1000000;
  return o;
}

PowerNetwork chain3(bool middle_damageable) {
  json line2 = {{"id", 2}, {"from", 2}, {"to", 3}, {"r", 0.01}, {"x", 0.01}, {"s_max_kva", 500}};
  if (middle_damageable) {
    line2["kind"] = "damageable";
    line2["repair_hours"] = 1;
    line2["repair_resources"] = 2;
  }
  const json doc = {
      {"schema_version", 1},
      {"buses", {{{"id", 1}, {"black_start", true}}, {{"id", 2}}, {{"id", 3}}}},
      {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"r", 0.01}, {"x", 0.01}, {"s_max_kva", 500}}, line2}},
      {"generators",
       {{{"id", 1}, {"kind", "dg"}, {"bus", 1}, {"p_max_kw", 300}, {"q_min_kvar", -100}, {"q_max_kvar", 100}}}},
      {"loads",
       {{{"id", 1}, {"bus", 2}, {"p_kw", 40}, {"essential", false}, {"shed_cost", 1.5}},
        {{"id", 2}, {"bus", 3}, {"p_kw", 60}, {"essential", true}, {"shed_cost", 2.5}}}}};
  return parse_network(doc, "chain3");
}

int count_named(const LpProblem& lp, const std::string& prefix) {
  return static_cast<int>(std::count_if(lp.row_names.begin(), lp.row_names.end(), [&](const std::string& n) {
    return n.rfind(prefix, 0) == 0;
  }));
}

DispatchSolution shape(int buses, int lines) {
  DispatchSolution s;
  s.e.assign(static_cast<size_t>(buses), 0);
  s.y.assign(static_cast<size_t>(lines), 0);
  s.black_start.assign(static_cast<size_t>(buses), 0);
  return s;
}

}  // namespace

TEST_CASE("problem construction on two buses") {
  const PowerNetwork net = two_bus(100.0, 80.0, 0.0, 2.5, 500.0);
  const RestorationProblem p = build_problem(net, {});
  CHECK(p.line_y.size() == 1);
  CHECK(p.bus_e.size() == 2);
  CHECK(p.line_f.size() == 1);
  CHECK(std::count_if(p.bus_fs.begin(), p.bus_fs.end(), [](int c) { return c >= 0; }) == 1);
  CHECK(count_named(p.mip.lp, "balp_") == 2);
  CHECK(count_named(p.mip.lp, "balq_") == 2);
  CHECK(count_named(p.mip.lp, "balf_") == 2);
  CHECK(p.mip.integer[p.line_y[0]]);
  CHECK(p.mip.integer[p.bus_e[0]]);
  CHECK_FALSE(p.mip.integer[p.line_p[0]]);
}

TEST_CASE("damaged lines are forced open, switches stay free") {
  json doc = to_json(chain3(true));
  doc["lines"].push_back({{"id", 3}, {"from", 1}, {"to", 3}, {"r", 0.01}, {"x", 0.01}, {"s_max_kva", 500},
                          {"kind", "tie"}});
  const PowerNetwork net = parse_network(doc);
  StepInputs in;
  in.line_usable = {1, 0, 1};
  const RestorationProblem p = build_problem(net, in);
  CHECK(p.mip.lp.col_hi[p.line_y[1]] == 0.0);
  CHECK(p.mip.lp.col_lo[p.line_y[2]] == 0.0);
  CHECK(p.mip.lp.col_hi[p.line_y[2]] == 1.0);
  CHECK(p.mip.integer[p.line_y[2]]);
}

TEST_CASE("two-bus dispatch") {
  SUBCASE("ample line serves the whole load") {
    const DispatchSolution s = solve_restoration(two_bus(100.0, 80.0, 0.0, 2.5, 500.0), {}, exact());
    CHECK(s.status == SolveStatus::kOptimal);
    CHECK(s.load_p_kw[0] == doctest::Approx(80.0));
    CHECK(s.objective == doctest::Approx(200.0));
  }
  SUBCASE("line rating caps the transfer within the polygon") {
    const DispatchSolution s = solve_restoration(two_bus(100.0, 80.0, 0.0, 2.5, 50.0), {}, exact());
    CHECK(s.status == SolveStatus::kOptimal);
    CHECK(s.load_p_kw[0] >= 0.98 * 50.0);
    CHECK(s.load_p_kw[0] <= 50.0 + 1e-6);
  }
  SUBCASE("shortage sheds the remainder") {
    const DispatchSolution s = solve_restoration(two_bus(30.0, 80.0, 0.0, 2.5, 500.0), {}, exact());
    CHECK(s.load_p_kw[0] == doctest::Approx(30.0));
  }
}

TEST_CASE("islanded bus without a source stays dark") {
  const PowerNetwork net = chain3(true);
  StepInputs in;
  in.line_usable = {1, 0};
  const DispatchSolution s = solve_restoration(net, in, exact());
  CHECK(s.status == SolveStatus::kOptimal);
  CHECK(s.load_p_kw[1] == 0.0);
  CHECK(s.e[2] == 0);
  CHECK(s.load_p_kw[0] == doctest::Approx(40.0));
  CHECK(check_radiality(s, net).ok());

  in.megs.push_back({0, 3, 100.0, -50.0, 75.0});
  const DispatchSolution with_meg = solve_restoration(net, in, exact());
  CHECK(with_meg.load_p_kw[1] == doctest::Approx(60.0));
  CHECK(with_meg.meg_p_kw[0] == doctest::Approx(60.0));
}

TEST_CASE("mobile storage charge is curtailed to spare supply") {
  const PowerNetwork net = two_bus(100.0, 80.0, 0.0, 2.5, 500.0);
  StepInputs in;
  in.messes.push_back({0, 2, 0.0, 100.0});
  const DispatchSolution s = solve_restoration(net, in, exact());
  CHECK(s.load_p_kw[0] == doctest::Approx(80.0));
  CHECK(s.mess_charge_kw[0] == doctest::Approx(20.0));
  CHECK(s.objective == doctest::Approx(200.0));
}

TEST_CASE("radiality check") {
  const PowerNetwork net = chain3(false);
  SUBCASE("energized chain with one source") {
    DispatchSolution s = shape(3, 2);
    s.e = {1, 1, 1};
    s.y = {1, 1};
    s.black_start = {1, 0, 0};
    s.root = {1, 0, 0};
    const auto r = check_radiality(s, net);
    CHECK(r.ok());
    CHECK(r.energized_lines == 3 - (0 + 1));
    CHECK(r.islands == 1);
  }
  SUBCASE("all dark") {
    const auto r = check_radiality(shape(3, 2), net);
    CHECK(r.ok());
    CHECK(r.energized_lines == 0);
  }
  SUBCASE("cycle") {
    json doc = to_json(net);
    doc["lines"].push_back({{"id", 3}, {"from", 1}, {"to", 3}, {"r", 0.01}, {"x", 0.01}, {"s_max_kva", 500}});
    const PowerNetwork ring = parse_network(doc);
    DispatchSolution s = shape(3, 3);
    s.e = {1, 1, 1};
    s.y = {1, 1, 1};
    s.black_start = {1, 0, 0};
    CHECK(check_radiality(s, ring).kind == RadialityReport::Kind::kCycle);
  }
  SUBCASE("island without a source") {
    DispatchSolution s = shape(3, 2);
    s.e = {1, 0, 1};
    s.black_start = {1, 0, 0};
    CHECK(check_radiality(s, net).kind == RadialityReport::Kind::kOrphanIsland);
  }
  SUBCASE("line next to a dark bus") {
    DispatchSolution s = shape(3, 2);
    s.e = {1, 1, 0};
    s.y = {1, 1};
    s.black_start = {1, 0, 0};
    CHECK(check_radiality(s, net).kind == RadialityReport::Kind::kDarkConnection);
  }
  SUBCASE("energized bus left unconnected") {
    DispatchSolution s = shape(3, 2);
    s.e = {1, 1, 0};
    s.black_start = {1, 0, 0};
    CHECK_FALSE(check_radiality(s, net).ok());
  }
}

TEST_CASE("branch and bound matches exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  int optimal = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const PowerNetwork net = random_network(rng);
    const StepInputs in = random_inputs(rng, net);
    const RestorationProblem p = build_problem(net, in);
    const EnumerationResult oracle = enumerate_mip(p.mip);
    REQUIRE(oracle.feasible);
    const MipResult r = solve_mip(p.mip, exact());
    REQUIRE(r.status == MipStatus::kOptimal);
    CHECK(std::abs(r.objective - oracle.objective) <= 1e-6 * std::max(1.0, std::abs(oracle.objective)));
    const DispatchSolution s = solve(p, exact());
    CHECK(s.status == SolveStatus::kOptimal);
    const double oracle_value = -oracle.objective * p.kw_per_pu;
    CHECK(std::abs(s.objective - oracle_value) <= 1e-3 * std::max(1.0, oracle_value) + 1e-3);
    optimal += s.status == SolveStatus::kOptimal;
  }
  CHECK(optimal == 40);
}

TEST_CASE("integral solutions are radial and respect baselines") {
  std::mt19937_64 rng(77);
  RandomNetOptions opt;
  opt.max_buses = 8;
  opt.max_lines = 10;
  opt.max_extra_sources = 2;
  for (int trial = 0; trial < 100; ++trial) {
    const PowerNetwork net = random_network(rng, opt);
    const StepInputs in = random_inputs(rng, net, opt);
    const DispatchSolution s = solve_restoration(net, in);
    REQUIRE(s.status != SolveStatus::kInfeasible);
    const auto rep = check_radiality(s, net);
    CHECK_MESSAGE(rep.ok(), rep.detail);
    double value = 0.0, baseline = 0.0;
    for (size_t k = 0; k < net.loads.size(); ++k) {
      CHECK(s.load_p_kw[k] <= in.load_p_kw[k] + 1e-6);
      CHECK(s.load_p_kw[k] >= -1e-9);
      value += net.loads[k].shed_cost * s.load_p_kw[k];
      baseline += net.loads[k].shed_cost * in.load_p_kw[k];
    }
    if (baseline > 0.0) {
      CHECK(value / baseline >= -1e-12);
      CHECK(value / baseline <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("repairing a line never lowers the optimum") {
  std::mt19937_64 rng(8);
  int compared = 0;
  for (int trial = 0; trial < 200 && compared < 40; ++trial) {
    const PowerNetwork net = random_network(rng);
    StepInputs in = random_inputs(rng, net);
    const auto it = std::find(in.line_usable.begin(), in.line_usable.end(), 0);
    if (it == in.line_usable.end()) continue;
    const MipResult before = solve_mip(build_problem(net, in).mip, exact());
    *it = 1;
    const MipResult after = solve_mip(build_problem(net, in).mip, exact());
    REQUIRE(before.status == MipStatus::kOptimal);
    REQUIRE(after.status == MipStatus::kOptimal);
    CHECK(after.objective <= before.objective + 1e-6 * std::max(1.0, std::abs(before.objective)));
    ++compared;
  }
  CHECK(compared == 40);
}

TEST_CASE("voltage drop follows the linear branch model") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double r = 0.001 + 0.05 * u(rng), x = 0.001 + 0.05 * u(rng);
    const double p = 10.0 + 200.0 * u(rng), q = 100.0 * u(rng);
    const PowerNetwork net = two_bus(1000.0, p, q, 2.5, 2000.0, r, x);
    const DispatchSolution s = solve_restoration(net, {}, exact());
    REQUIRE(s.y[0] == 1);
    const double pp = s.line_p_kw[0] / 1000.0, qq = s.line_q_kvar[0] / 1000.0;
    CHECK(pp == doctest::Approx(p / 1000.0));
    CHECK(qq == doctest::Approx(q / 1000.0));
    CHECK(std::abs((s.bus_v2[0] - s.bus_v2[1]) - 2.0 * (r * pp + x * qq)) < 1e-9);
  }
}

TEST_CASE("step inputs and solution json") {
  const PowerNetwork net = chain3(true);
  const json doc = {{"hour", 3},
                    {"loads", {{{"id", 2}, {"p_kw", 10}, {"q_kvar", 1}}}},
                    {"damaged_lines", {2}},
                    {"megs", {{{"bus", 3}, {"p_kw", 50}, {"q_min_kvar", -10}, {"q_max_kvar", 10}}}},
                    {"messes", {{{"bus", 2}, {"charge_kw", 20}}}}};
  const StepInputs in = parse_step_inputs(doc, net);
  CHECK(in.hour == 3);
  CHECK(in.load_p_kw == std::vector<double>{40.0, 10.0});
  CHECK(in.line_usable == std::vector<char>{1, 0});
  REQUIRE(in.megs.size() == 1);
  CHECK(in.megs[0].bus == 3);
  REQUIRE(in.messes.size() == 1);
  CHECK(in.messes[0].charge_request_kw == 20.0);

  const DispatchSolution s = solve_restoration(net, in, exact());
  const json out = to_json(s, net);
  CHECK(out.at("objective").get<double>() == doctest::Approx(s.objective));
  CHECK(out.at("status") == "optimal");

  CHECK_THROWS_AS(parse_step_inputs(json{{"damaged_lines", {9}}}, net), Error);
  CHECK_THROWS_AS(parse_step_inputs(json{{"loads", {{{"id", 1}, {"p_kw", -5}}}}}, net), Error);
}

TEST_CASE("LP text dump lists the binaries") {
  const RestorationProblem p = build_problem(two_bus(100.0, 80.0, 0.0, 2.5, 500.0), {});
  std::ostringstream os;
  write_lp(os, p, "two bus");
  const std::string text = os.str();
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("y_1") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
