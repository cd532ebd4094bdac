// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gridmend/env.hpp"
#include "gridmend/error.hpp"
#include "gridmend/transport.hpp"
#include "support/fixtures.hpp"

using namespace gridmend;
using namespace gridmend::testing;
using nlohmann::json;

namespace {

Road road(int id, int from, int to, double free_h, double ratio = 0.0, double alpha = 0.15) {
  Road r;
  r.id = id;
  r.from = from;
  r.to = to;
  r.free_time_h = free_h;
  r.capacity_vph = 1000.0;
  r.alpha = alpha;
  r.volume_vph.fill(ratio * 1000.0);
  return r;
}

TransportGraph graph(int nodes, std::vector<Road> roads) {
  TransportGraph g;
  g.node_count = nodes;
  g.roads = std::move(roads);
  validate(g);
  return g;
}

// Every simple path by depth-first search; the shortest total at `hour`.
double best_path_time(const TransportGraph& g, int from, int to, int hour) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> seen(static_cast<size_t>(g.node_count + 1), 0);
  std::function<void(int, double)> dfs = [&](int at, double t) {
    if (at == to) {
      best = std::min(best, t);
      return;
    }
    seen[at] = 1;
    for (const auto& r : g.roads) {
      int next = 0;
      if (r.from == at) next = r.to;
      if (r.to == at) next = r.from;
      if (next == 0 || seen[next]) continue;
      const double v = r.volume_vph[static_cast<size_t>(hour)] / r.capacity_vph;
      dfs(next, t + r.free_time_h * (1.0 + r.alpha * std::pow(v, r.beta)));
    }
    seen[at] = 0;
  };
  dfs(from, 0.0);
  return best;
}

// All-pairs durations by Floyd-Warshall over the ceiling of route times.
std::vector<std::vector<double>> floyd(const TransportGraph& g, int hour) {
  const int n = g.node_count;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(static_cast<size_t>(n + 1), std::vector<double>(n + 1, inf));
  for (int i = 1; i <= n; ++i) d[i][i] = 0.0;
  for (const auto& r : g.roads) {
    const double v = r.volume_vph[static_cast<size_t>(hour)] / r.capacity_vph;
    const double t = r.free_time_h * (1.0 + r.alpha * std::pow(v, r.beta));
    d[r.from][r.to] = std::min(d[r.from][r.to], t);
    d[r.to][r.from] = std::min(d[r.to][r.from], t);
  }
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// Nearest three candidates ranked by (whole hours, exact time, node id).
std::vector<int> nearest_three(const TransportGraph& g, const std::vector<int>& cands, int at) {
  const auto d = floyd(g, 0);
  std::vector<std::tuple<int, double, int>> ranked;
  for (int c : cands) {
    if (c == at || !std::isfinite(d[at][c])) continue;
    ranked.emplace_back(static_cast<int>(std::ceil(d[at][c] - 1e-9)), d[at][c], c);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out;
  for (size_t i = 0; i < ranked.size() && i < 3; ++i) out.push_back(std::get<2>(ranked[i]));
  return out;
}

}  // namespace

TEST_CASE("congestion travel time") {
  Road r = road(1, 1, 2, 1.0);
  CHECK(travel_time(r, 0.0) == 1.0);
  CHECK(travel_time(r, 1000.0) == doctest::Approx(1.15).epsilon(1e-12));
  CHECK(travel_time(r, 2000.0) == doctest::Approx(1.0 + 0.15 * 16.0).epsilon(1e-12));
  r.free_time_h = 0.5;
  CHECK(travel_time(r, 0.0) == 0.5);
}

TEST_CASE("travel time never falls as volume grows") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    Road r = road(1, 1, 2, 0.1 + 3.0 * u(rng), 0.0, 2.0 * u(rng));
    r.beta = 1.0 + 5.0 * u(rng);
    r.capacity_vph = 100.0 + 2000.0 * u(rng);
    double a = 3000.0 * u(rng), b = 3000.0 * u(rng);
    if (a > b) std::swap(a, b);
    CHECK(travel_time(r, a) <= travel_time(r, b));
    CHECK(travel_time(r, a) >= r.free_time_h);
  }
}

TEST_CASE("route duration") {
  SUBCASE("same node") {
    const TransportGraph g = graph(2, {road(1, 1, 2, 0.7)});
    CHECK(route_duration(g, 2, 2, 5) == 0);
  }
  SUBCASE("three-node chain sums then rounds up") {
    const TransportGraph g = graph(3, {road(1, 1, 2, 0.6), road(2, 2, 3, 0.6)});
    CHECK(route_time(g, 1, 3, 0) == doctest::Approx(1.2));
    CHECK(route_duration(g, 1, 3, 0) == 2);
    CHECK(route_duration(g, 3, 1, 0) == 2);
  }
  SUBCASE("congested route loses to the clear one") {
    // Depot 4, site 2: r3+r4 congested at 3 h, r1+r2 clear at 2 h.
    const TransportGraph g =
        graph(4, {road(1, 4, 1, 1.0), road(2, 1, 2, 1.0), road(3, 4, 3, 0.5),
                  road(4, 3, 2, 0.5, 2.0, (2.5 / 0.5 - 1.0) / 16.0)});
    CHECK(route_time(g, 3, 2, 0) == doctest::Approx(2.5));
    CHECK(route_duration(g, 4, 2, 0) == 2);
    CHECK(route_time(g, 4, 2, 0) == doctest::Approx(2.0));
  }
  SUBCASE("unreachable destination") {
    const TransportGraph g = graph(3, {road(1, 1, 2, 1.0)});
    CHECK_THROWS_AS(route_duration(g, 1, 3, 0), NoRouteError);
    const RouteTable t(g);
    CHECK_FALSE(t.reachable(1, 3, 0));
    CHECK_THROWS_AS(t.duration(1, 3, 0), NoRouteError);
  }
}

TEST_CASE("routes follow the departure hour's traffic") {
  Road jam = road(1, 1, 2, 1.0);
  jam.volume_vph[17] = 2000.0;
  const TransportGraph g = graph(2, {jam});
  CHECK(route_duration(g, 1, 2, 3) == 1);
  CHECK(route_duration(g, 1, 2, 17) == 4);
  CHECK(route_duration(g, 1, 2, 17 + 24) == 4);
  const RouteTable t(g);
  CHECK(t.duration(1, 2, 17) == 4);
}

TEST_CASE("route time equals the best enumerated path") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    std::vector<Road> roads;
    for (int a = 1; a <= n; ++a) {
      for (int b = a + 1; b <= n; ++b) {
        if (u(rng) < 0.45) {
          Road r = road(static_cast<int>(roads.size() + 1), a, b, 0.2 + 2.0 * u(rng), 0.0);
          for (auto& v : r.volume_vph) v = 2000.0 * u(rng);
          roads.push_back(r);
        }
      }
    }
    const TransportGraph g = graph(n, roads);
    const RouteTable table(g);
    const int hour = std::uniform_int_distribution<int>(0, 23)(rng);
    for (int a = 1; a <= n; ++a) {
      for (int b = 1; b <= n; ++b) {
        const double best = best_path_time(g, a, b, hour);
        if (!std::isfinite(best)) {
          CHECK_THROWS_AS(route_duration(g, a, b, hour), NoRouteError);
          continue;
        }
        CHECK(route_time(g, a, b, hour) == doctest::Approx(best).epsilon(1e-12));
        CHECK(table.time(a, b, hour) == doctest::Approx(best).epsilon(1e-12));
        CHECK(route_duration(g, a, b, hour) <= std::ceil(best - 1e-9));
        CHECK(table.duration(a, b, hour) == route_duration(g, a, b, hour));
      }
    }
  }
}

TEST_CASE("available moves on the ieee33 transport network") {
  const PowerNetwork net = load_network(data_dir() / "ieee33" / "network.json");
  const ScenarioFile sc = load_scenario(data_dir() / "ieee33" / "scenario.json", net);
  const TransportGraph& g = sc.transport;
  const RouteTable table(g);

  SUBCASE("mobile source at a station") {
    std::vector<int> ms;
    for (const auto& s : net.stations) ms.push_back(s.transport_node);
    REQUIRE(ms.size() == 5);
    const int at = net.station(1).transport_node;
    const MoveSet m = available_moves(table, ms, at, 0);
    CHECK(m.valid_count() == kRouteArity);
    CHECK(m.destination[0] == at);
    CHECK(m.valid[0]);
    const auto expected = nearest_three(g, ms, at);
    REQUIRE(expected.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(m.destination[k + 1] == expected[k]);
  }
  SUBCASE("crew at the depot with six damaged lines") {
    std::vector<int> sites;
    for (int line : {4, 14, 18, 22, 25, 31}) sites.push_back(g.line_sites.at(line));
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    const int depot = g.depots.front();
    const MoveSet m = available_moves(table, sites, depot, 0);
    CHECK(m.valid_count() == kRouteArity);
    CHECK(m.destination[0] == depot);
    const auto expected = nearest_three(g, sites, depot);
    for (int k = 0; k < 3; ++k) CHECK(m.destination[k + 1] == expected[k]);
  }
}

TEST_CASE("available moves on small graphs") {
  SUBCASE("single node") {
    const TransportGraph g = graph(1, {});
    const RouteTable t(g);
    const std::vector<int> cands{1};
    const MoveSet m = available_moves(t, cands, 1, 0);
    CHECK(m.valid_count() == 1);
    for (int d : m.destination) CHECK(d == 1);
  }
  SUBCASE("fewer candidates than slots pad with invalid stays") {
    const TransportGraph g = graph(3, {road(1, 1, 2, 1.0), road(2, 2, 3, 1.0)});
    const RouteTable t(g);
    const std::vector<int> cands{1, 3};
    const MoveSet m = available_moves(t, cands, 1, 0);
    CHECK(m.valid_count() == 2);
    CHECK(m.destination[1] == 3);
    CHECK_FALSE(m.valid[2]);
    CHECK(m.destination[2] == 1);
  }
  SUBCASE("unreachable candidates are skipped") {
    const TransportGraph g = graph(3, {road(1, 1, 2, 1.0)});
    const RouteTable t(g);
    const std::vector<int> cands{2, 3};
    const MoveSet m = available_moves(t, cands, 1, 0);
    CHECK(m.valid_count() == 2);
    CHECK(m.destination[1] == 2);
  }
}

TEST_CASE("transport parsing") {
  const json doc = {{"nodes", 2},
                    {"volume_profiles", {{"flat", std::vector<double>(24, 500.0)}}},
                    {"roads",
                     {{{"id", 1}, {"from", 1}, {"to", 2}, {"free_time_h", 1.0}, {"capacity_vph", 1000.0},
                       {"volume", "flat"}}}},
                    {"depots", {1}},
                    {"line_sites", {{{"line", 3}, {"node", 2}}}}};
  const TransportGraph g = parse_transport(doc);
  CHECK(g.roads[0].volume_vph[7] == 500.0);
  CHECK(g.line_sites.at(3) == 2);
  CHECK(parse_transport(to_json(g)) == g);

  json bad = doc;
  bad["roads"][0]["volume"] = "rush";
  CHECK_THROWS_AS(parse_transport(bad), ParseError);
  bad = doc;
  bad["roads"][0]["to"] = 9;
  CHECK_THROWS_AS(parse_transport(bad), ValidationError);
  bad = doc;
  bad["roads"][0]["free_time_h"] = 0.0;
  CHECK_THROWS_AS(parse_transport(bad), ValidationError);
}
