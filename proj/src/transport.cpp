// SPDX-License-Identifier: Apache-2.0

#include "gridmend/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"

namespace gridmend {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Durations within this margin of an integer are not rounded up.
constexpr double kCeilSlack = 1e-9;

int hour_of_day(int hour) {
  if (hour < 0) throw std::out_of_range("negative hour index");
  return hour % kHoursPerDay;
}

int ceil_hours(double t) { return static_cast<int>(std::ceil(t - kCeilSlack)); }

std::vector<double> dijkstra(const TransportGraph& g, int source_index,
                             const std::vector<double>& road_time) {
  std::vector<double> dist(static_cast<size_t>(g.node_count), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<size_t>(source_index)] = 0.0;
  heap.emplace(0.0, source_index);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<size_t>(u)]) continue;
    for (int r : g.incident[static_cast<size_t>(u)]) {
      const Road& road = g.roads[static_cast<size_t>(r)];
      const int v = (road.from - 1 == u ? road.to : road.from) - 1;
      const double nd = d + road_time[static_cast<size_t>(r)];
      if (nd < dist[static_cast<size_t>(v)]) {
        dist[static_cast<size_t>(v)] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

std::vector<double> road_times_at(const TransportGraph& g, int hour) {
  std::vector<double> t(g.roads.size());
  for (size_t r = 0; r < g.roads.size(); ++r) t[r] = travel_time(g.roads[r], hour);
  return t;
}

void check_node(const TransportGraph& g, int node) {
  if (node < 1 || node > g.node_count) {
    throw std::out_of_range("transport node " + std::to_string(node) + " out of range");
  }
}

}  // namespace

double travel_time(const Road& road, double volume_vph) {
  const double ratio = std::max(volume_vph, 0.0) / road.capacity_vph;
  return road.free_time_h * (1.0 + road.alpha * std::pow(ratio, road.beta));
}

double travel_time(const Road& road, int hour) {
  return travel_time(road, road.volume_vph[static_cast<size_t>(hour_of_day(hour))]);
}

void validate(TransportGraph& g) {
  if (g.node_count < 1) throw ValidationError("transport graph needs at least one node");
  std::sort(g.roads.begin(), g.roads.end(),
            [](const Road& a, const Road& b) { return a.id < b.id; });
  g.incident.assign(static_cast<size_t>(g.node_count), {});
  for (size_t i = 0; i < g.roads.size(); ++i) {
    const Road& r = g.roads[i];
    const std::string what = "road " + std::to_string(r.id);
    if (r.id != static_cast<int>(i) + 1) {
      throw ValidationError("road ids must be unique and contiguous from 1");
    }
    if (r.from < 1 || r.from > g.node_count || r.to < 1 || r.to > g.node_count) {
      throw ValidationError(what + " references an unknown node");
    }
    if (!(r.free_time_h > 0.0)) throw ValidationError(what + " needs free_time_h > 0");
    if (!(r.capacity_vph > 0.0)) throw ValidationError(what + " needs capacity_vph > 0");
    if (r.alpha < 0.0) throw ValidationError(what + " needs alpha >= 0");
    if (r.beta < 1.0) throw ValidationError(what + " needs beta >= 1");
    for (double v : r.volume_vph) {
      if (v < 0.0) throw ValidationError(what + " has a negative volume");
    }
    g.incident[static_cast<size_t>(r.from - 1)].push_back(static_cast<int>(i));
    if (r.to != r.from) g.incident[static_cast<size_t>(r.to - 1)].push_back(static_cast<int>(i));
  }
  for (int d : g.depots) {
    if (d < 1 || d > g.node_count) throw ValidationError("depot node out of range");
  }
  for (const auto& [line, node] : g.line_sites) {
    if (node < 1 || node > g.node_count) {
      throw ValidationError("site of line " + std::to_string(line) + " is not a transport node");
    }
  }
}

TransportGraph parse_transport(const json& doc, const std::string& where) {
  TransportGraph g;
  try {
    g.node_count = doc.at("nodes").get<int>();
    std::map<std::string, HourlyProfile> named;
    if (doc.contains("volume_profiles")) {
      for (const auto& [name, values] : doc.at("volume_profiles").items()) {
        auto v = values.get<std::vector<double>>();
        if (v.size() != kHoursPerDay) {
          throw ParseError(where + ".volume_profiles." + name, "expected 24 hourly values");
        }
        std::copy(v.begin(), v.end(), named[name].begin());
      }
    }
    const auto& roads = doc.at("roads");
    for (size_t i = 0; i < roads.size(); ++i) {
      const auto& j = roads[i];
      const std::string at = where + ".roads[" + std::to_string(i) + "]";
      Road r;
      r.id = j.at("id").get<int>();
      r.from = j.at("from").get<int>();
      r.to = j.at("to").get<int>();
      r.free_time_h = j.at("free_time_h").get<double>();
      r.capacity_vph = j.at("capacity_vph").get<double>();
      r.alpha = j.value("alpha", 0.15);
      r.beta = j.value("beta", 4.0);
      if (j.contains("volume")) {
        const auto& vol = j.at("volume");
        if (vol.is_string()) {
          auto it = named.find(vol.get<std::string>());
          if (it == named.end()) {
            throw ParseError(at + ".volume", "unknown volume profile '" + vol.get<std::string>() + "'");
          }
          r.volume_vph = it->second;
        } else if (vol.is_number()) {
          r.volume_vph.fill(vol.get<double>());
        } else {
          auto v = vol.get<std::vector<double>>();
          if (v.size() != kHoursPerDay) throw ParseError(at + ".volume", "expected 24 hourly values");
          std::copy(v.begin(), v.end(), r.volume_vph.begin());
        }
      }
      g.roads.push_back(r);
    }
    if (doc.contains("depots")) g.depots = doc.at("depots").get<std::vector<int>>();
    if (doc.contains("line_sites")) {
      for (const auto& s : doc.at("line_sites")) {
        g.line_sites[s.at("line").get<int>()] = s.at("node").get<int>();
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(where, e.what());
  }
  validate(g);
  return g;
}

json to_json(const TransportGraph& g) {
  json doc;
  doc["nodes"] = g.node_count;
  doc["roads"] = json::array();
  for (const auto& r : g.roads) {
    doc["roads"].push_back({{"id", r.id},
                            {"from", r.from},
                            {"to", r.to},
                            {"free_time_h", r.free_time_h},
                            {"capacity_vph", r.capacity_vph},
                            {"alpha", r.alpha},
                            {"beta", r.beta},
                            {"volume", std::vector<double>(r.volume_vph.begin(), r.volume_vph.end())}});
  }
  doc["depots"] = g.depots;
  doc["line_sites"] = json::array();
  for (const auto& [line, node] : g.line_sites) {
    doc["line_sites"].push_back({{"line", line}, {"node", node}});
  }
  return doc;
}

double route_time(const TransportGraph& g, int from, int to, int hour) {
  check_node(g, from);
  check_node(g, to);
  if (from == to) return 0.0;
  const auto dist = dijkstra(g, from - 1, road_times_at(g, hour));
  const double t = dist[static_cast<size_t>(to - 1)];
  if (!std::isfinite(t)) throw NoRouteError(from, to);
  return t;
}

int route_duration(const TransportGraph& g, int from, int to, int hour) {
  if (from == to) {
    check_node(g, from);
    return 0;
  }
  return ceil_hours(route_time(g, from, to, hour));
}

RouteTable::RouteTable(const TransportGraph& g) {
  std::vector<HourlyProfile> volumes(g.roads.size());
  for (size_t r = 0; r < g.roads.size(); ++r) volumes[r] = g.roads[r].volume_vph;
  *this = RouteTable(g, volumes);
}

RouteTable::RouteTable(const TransportGraph& g, const std::vector<HourlyProfile>& road_volumes)
    : nodes_(g.node_count) {
  if (road_volumes.size() != g.roads.size()) {
    throw std::invalid_argument("RouteTable: one volume profile per road required");
  }
  const size_t n = static_cast<size_t>(nodes_);
  times_.assign(kHoursPerDay * n * n, kInf);
  std::vector<double> road_time(g.roads.size());
  for (int h = 0; h < kHoursPerDay; ++h) {
    for (size_t r = 0; r < g.roads.size(); ++r) {
      road_time[r] = travel_time(g.roads[r], road_volumes[r][static_cast<size_t>(h)]);
    }
    for (size_t s = 0; s < n; ++s) {
      const auto dist = dijkstra(g, static_cast<int>(s), road_time);
      std::copy(dist.begin(), dist.end(), times_.begin() + static_cast<long>((h * n + s) * n));
    }
  }
}

double RouteTable::time(int from, int to, int hour) const {
  if (from < 1 || from > nodes_ || to < 1 || to > nodes_) {
    throw std::out_of_range("RouteTable: node out of range");
  }
  const size_t n = static_cast<size_t>(nodes_);
  return times_[(static_cast<size_t>(hour_of_day(hour)) * n + static_cast<size_t>(from - 1)) * n +
                static_cast<size_t>(to - 1)];
}

bool RouteTable::reachable(int from, int to, int hour) const {
  return std::isfinite(time(from, to, hour));
}

int RouteTable::duration(int from, int to, int hour) const {
  if (from == to) return 0;
  const double t = time(from, to, hour);
  if (!std::isfinite(t)) throw NoRouteError(from, to);
  return ceil_hours(t);
}

int MoveSet::valid_count() const {
  return static_cast<int>(std::count(valid.begin(), valid.end(), true));
}

MoveSet available_moves(const RouteTable& table, std::span<const int> candidates, int at,
                        int hour) {
  MoveSet moves;
  moves.destination.fill(at);
  moves.valid.fill(false);
  moves.valid[0] = true;

  std::vector<std::tuple<int, double, int>> ranked;
  for (int c : candidates) {
    if (c == at || !table.reachable(at, c, hour)) continue;
    ranked.emplace_back(table.duration(at, c, hour), table.time(at, c, hour), c);
  }
  std::sort(ranked.begin(), ranked.end());
  ranked.erase(std::unique(ranked.begin(), ranked.end(),
                           [](const auto& a, const auto& b) {
                             return std::get<2>(a) == std::get<2>(b);
                           }),
               ranked.end());
  for (size_t i = 0; i < ranked.size() && i + 1 < kRouteArity; ++i) {
    moves.destination[i + 1] = std::get<2>(ranked[i]);
    moves.valid[i + 1] = true;
  }
  return moves;
}

}  // namespace gridmend
