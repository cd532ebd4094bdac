// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridmend/env.hpp"
#include "gridmend/error.hpp"
#include "gridmend/scenario.hpp"
#include "support/fixtures.hpp"

using namespace gridmend;
using namespace gridmend::testing;
using nlohmann::json;

namespace {

std::string two_day_csv() {
  std::ostringstream os;
  os << "day,hour,id,value\n";
  for (int d : {3, 4}) {
    for (int h = 0; h < 24; ++h) {
      os << d << "," << h << ",load_p:1," << 10 + h << "\n";
      os << d << "," << h << ",pv:1," << (h > 6 && h < 18 ? 5.0 : 0.0) << "\n";
    }
  }
  return os.str();
}

struct Ieee33 {
  PowerNetwork net = load_network(data_dir() / "ieee33" / "network.json");
  ScenarioFile sc = load_scenario(data_dir() / "ieee33" / "scenario.json", net);
};

}  // namespace

TEST_CASE("profile csv") {
  SUBCASE("two days") {
    std::istringstream in(two_day_csv());
    const ProfileSet p = read_profiles_csv(in);
    CHECK(p.days() == 2);
    CHECK(p.day_ids() == std::vector<int>{3, 4});
    CHECK(p.value("load_p:1", 1, 5) == 15.0);
    std::ostringstream out;
    write_profiles_csv(out, p);
    std::istringstream again(out.str());
    CHECK(read_profiles_csv(again).series() == p.series());
  }
  SUBCASE("negative value") {
    std::istringstream in("day,hour,id,value\n0,0,load_p:1,-2\n");
    CHECK_THROWS_AS(read_profiles_csv(in), ValidationError);
  }
  SUBCASE("missing hours are listed") {
    std::string text = two_day_csv();
    const std::string drop = "4,7,load_p:1,17\n";
    text.erase(text.find(drop), drop.size());
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(read_profiles_csv(in), doctest::Contains("load_p:1 day 4 hour 7"), ValidationError);
  }
  SUBCASE("malformed rows") {
    std::istringstream wide("0,0,load_p:1,2,9\n");
    CHECK_THROWS_AS(read_profiles_csv(wide), ParseError);
    std::istringstream hour("0,24,load_p:1,2\n");
    CHECK_THROWS_AS(read_profiles_csv(hour), ParseError);
    std::istringstream id("0,0,wind:1,2\n");
    CHECK_THROWS_AS(read_profiles_csv(id), ParseError);
  }
  SUBCASE("unknown element ids") {
    const PowerNetwork net = two_bus(100.0, 80.0, 0.0, 2.5, 500.0);
    std::ostringstream text;
    for (int h = 0; h < 24; ++h) text << "0," << h << ",load_p:9,2\n";
    std::istringstream in(text.str());
    const ProfileSet p = read_profiles_csv(in);
    CHECK_THROWS_AS(validate_profiles(p, net, nullptr), ValidationError);
  }
}

TEST_CASE("synthetic profiles validate") {
  const Ieee33 d;
  SynthOptions opt;
  opt.days = 5;
  opt.seed = 9;
  const ProfileSet p = synthesize_profiles(d.net, &d.sc.transport, opt);
  CHECK(p.days() == 5);
  CHECK_NOTHROW(validate_profiles(p, d.net, &d.sc.transport));
  // Clear-sky PV is dark at night and lit at noon; loads peak twice.
  for (const auto& g : d.net.generators) {
    if (!g.is_pv()) continue;
    CHECK(p.pv(0, 0, g) == 0.0);
    CHECK(p.pv(0, 12, g) > 0.0);
  }
  const Load& l = d.net.loads.front();
  CHECK(p.load_p(0, 19, l) > p.load_p(0, 3, l));
  CHECK(p.load_p(0, 8, l) > p.load_p(0, 3, l));
  const ProfileSet again = synthesize_profiles(d.net, &d.sc.transport, opt);
  CHECK(again.series() == p.series());
}

TEST_CASE("train and test days are disjoint") {
  const Ieee33 d;
  SynthOptions opt;
  opt.days = 12;
  const ProfileSet all = synthesize_profiles(d.net, &d.sc.transport, opt);
  const ProfileSet train = apply_split(all, {SplitTag::kTrain, 4});
  const ProfileSet test = apply_split(all, {SplitTag::kTest, 4});
  CHECK(train.days() == 8);
  CHECK(test.days() == 4);
  std::set<int> a(train.day_ids().begin(), train.day_ids().end());
  for (int id : test.day_ids()) CHECK(a.count(id) == 0);
  CHECK(a.size() + test.day_ids().size() == static_cast<size_t>(all.days()));
  CHECK(train.split() == SplitTag::kTrain);
  CHECK_THROWS_AS(apply_split(all, {SplitTag::kTest, 13}), ConfigError);
  CHECK(parse_split_tag("test") == SplitTag::kTest);
  CHECK_THROWS_AS(parse_split_tag("holdout"), ConfigError);
}

TEST_CASE("outage sampling extremes and determinism") {
  Ieee33 d;
  OutageSpec none = d.sc.outage;
  for (auto& [line, p] : none.fragility) p = 0.0;
  CHECK(sample_outage(d.net, none, 5).damaged.empty());

  OutageSpec all = d.sc.outage;
  for (int id : damageable_lines(d.net)) all.fragility[id] = 1.0;
  const OutageScenario s = sample_outage(d.net, all, 5);
  CHECK(s.damaged.size() == damageable_lines(d.net).size());
  for (const auto& x : s.damaged) {
    CHECK(x.repair_hours >= 1);
    CHECK(x.repair_hours <= 4);
    CHECK(x.repair_resources >= 2);
    CHECK(x.repair_resources <= 3);
  }
  CHECK(sample_outage(d.net, d.sc.outage, 42) == sample_outage(d.net, d.sc.outage, 42));
}

TEST_CASE("shipped repair ranges") {
  const Ieee33 d;
  CHECK(d.sc.outage.rt_min == 1);
  CHECK(d.sc.outage.rt_max == 4);
  CHECK(d.sc.outage.rs_min == 2);
  CHECK(d.sc.outage.rs_max == 3);
}

TEST_CASE("empirical inclusion frequency tracks the fragility") {
  const Ieee33 d;
  std::map<int, int> hits;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    for (const auto& x : sample_outage(d.net, d.sc.outage, static_cast<std::uint64_t>(seed)).damaged) {
      ++hits[x.line];
    }
  }
  for (const auto& [line, p] : d.sc.outage.fragility) {
    const double freq = static_cast<double>(hits[line]) / n;
    CHECK_MESSAGE(std::abs(freq - p) <= 0.02, "line " << line);
  }
}

TEST_CASE("outage spec parsing") {
  const PowerNetwork net = load_network(data_dir() / "toy3" / "network.json");
  const json ok = {{"fragility", {{{"line", 2}, {"p", 0.3}}}}, {"repair_hours", {1, 3}}, {"repair_resources", {2, 2}}};
  const OutageSpec s = parse_outage(ok, net);
  CHECK(s.fragility.at(2) == 0.3);
  CHECK(parse_outage(to_json(s), net) == s);
  json bad = ok;
  bad["fragility"][0]["line"] = 1;
  CHECK_THROWS_AS(parse_outage(bad, net), ValidationError);
  bad = ok;
  bad["fragility"][0]["p"] = 1.5;
  CHECK_THROWS_AS(parse_outage(bad, net), ValidationError);
  bad = ok;
  bad["repair_hours"] = {0, 2};
  CHECK_THROWS_AS(parse_outage(bad, net), ValidationError);
}
