// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_TRANSPORT_HPP_
#define GRIDMEND_TRANSPORT_HPP_

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gridmend {

inline constexpr int kHoursPerDay = 24;
/// Width of the low-level routing action: slot 0 is "stay".
inline constexpr int kRouteArity = 4;

using HourlyProfile = std::array<double, kHoursPerDay>;

struct Road {
  int id = 0;
  int from = 0;  // transport node ids, 1-based
  int to = 0;
  double free_time_h = 0.0;
  double capacity_vph = 0.0;
  double alpha = 0.15;
  double beta = 4.0;
  HourlyProfile volume_vph{};  // hour-of-day traffic volume

  bool operator==(const Road&) const = default;
};

/// Road network shared by every mobile unit. Roads are traversable in both
/// directions. Node ids are 1-based and contiguous.
struct TransportGraph {
  int node_count = 0;
  std::vector<Road> roads;
  std::vector<int> depots;             // RC home nodes
  std::map<int, int> line_sites;       // damageable line id -> node id
  std::vector<std::vector<int>> incident;  // node index -> road indices

  bool operator==(const TransportGraph&) const = default;
};

/// Congestion-dependent travel time of one road, hours.
double travel_time(const Road& road, double volume_vph);
double travel_time(const Road& road, int hour);

TransportGraph parse_transport(const nlohmann::json& doc, const std::string& where = "transport");
nlohmann::json to_json(const TransportGraph& g);
void validate(TransportGraph& g);

/// Shortest real-valued travel time with all roads evaluated at departure
/// hour `hour`. Throws NoRouteError when unreachable.
double route_time(const TransportGraph& g, int from, int to, int hour);

/// `route_time` ceiling-rounded to whole hours; 0 when from == to.
int route_duration(const TransportGraph& g, int from, int to, int hour);

/// All-pairs route times for every hour of one day, given that day's road
/// volumes (volumes[hour][road index]).
class RouteTable {
 public:
  RouteTable() = default;
  explicit RouteTable(const TransportGraph& g);
  RouteTable(const TransportGraph& g, const std::vector<HourlyProfile>& road_volumes);

  int node_count() const { return nodes_; }
  bool reachable(int from, int to, int hour) const;
  double time(int from, int to, int hour) const;
  /// Throws NoRouteError when unreachable.
  int duration(int from, int to, int hour) const;

 private:
  int nodes_ = 0;
  std::vector<double> times_;  // [hour][from][to]
};

/// Fixed-arity routing menu offered to a unit parked at `at`.
struct MoveSet {
  std::array<int, kRouteArity> destination{};
  std::array<bool, kRouteArity> valid{};

  int valid_count() const;
};

/// Slot 0 is always "stay at `at`"; the remaining slots hold the nearest
/// reachable candidates (by duration, then real time, then id). Unused
/// slots are invalid and point back at `at`.
MoveSet available_moves(const RouteTable& table, std::span<const int> candidates, int at,
                        int hour);

}  // namespace gridmend

#endif  // GRIDMEND_TRANSPORT_HPP_
