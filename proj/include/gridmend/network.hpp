// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_NETWORK_HPP_
#define GRIDMEND_NETWORK_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gridmend {

inline constexpr int kNetworkSchemaVersion = 1;

enum class LineKind { kFixed, kTieSwitch, kDamageable };
enum class GeneratorKind { kDiesel, kGridFormingPv, kGridFollowingPv };

std::string_view to_string(LineKind kind);
std::string_view to_string(GeneratorKind kind);

// Element ids in network files are 1-based and contiguous; the vector index of
// every element is `id - 1`.

struct Bus {
  int id = 0;
  bool has_black_start = false;
  std::vector<int> loads;        // load ids
  std::vector<int> generators;   // generator ids
  std::vector<int> stations;     // MESS station ids

  bool operator==(const Bus&) const = default;
};

struct Line {
  int id = 0;
  int from = 0;
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double s_max_kva = 0.0;
  LineKind kind = LineKind::kFixed;
  int repair_hours = 0;      // RT, damageable lines only
  int repair_resources = 0;  // rs, damageable lines only

  bool operator==(const Line&) const = default;
};

struct Generator {
  int id = 0;
  GeneratorKind kind = GeneratorKind::kDiesel;
  int bus = 0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double q_min_kvar = 0.0;
  double q_max_kvar = 0.0;
  double s_max_kva = 0.0;  // PV only

  bool is_pv() const { return kind != GeneratorKind::kDiesel; }
  bool is_black_start() const { return kind != GeneratorKind::kGridFollowingPv; }
  bool operator==(const Generator&) const = default;
};

struct Load {
  int id = 0;
  int bus = 0;
  double p_kw = 0.0;     // nominal baseline, used when no profile is supplied
  double q_kvar = 0.0;
  bool essential = false;
  double shed_cost = 0.0;  // c^ls, currency per kWh

  bool operator==(const Load&) const = default;
};

struct MessStation {
  int id = 0;
  int bus = 0;
  int transport_node = 0;

  bool operator==(const MessStation&) const = default;
};

/// Immutable description of a distribution feeder. Construct through
/// `load_network` / `parse_network`, which validate every invariant.
struct PowerNetwork {
  std::string name;
  int schema_version = kNetworkSchemaVersion;
  double base_kv = 12.66;
  double base_mva = 1.0;
  double v_min = 0.95;
  double v_max = 1.05;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<MessStation> stations;

  double kw_per_pu() const { return base_mva * 1000.0; }
  const Bus& bus(int id) const { return buses.at(static_cast<size_t>(id - 1)); }
  const Line& line(int id) const { return lines.at(static_cast<size_t>(id - 1)); }
  const Load& load(int id) const { return loads.at(static_cast<size_t>(id - 1)); }
  const Generator& generator(int id) const {
    return generators.at(static_cast<size_t>(id - 1));
  }
  const MessStation& station(int id) const {
    return stations.at(static_cast<size_t>(id - 1));
  }
  /// Line id joining two buses in either direction, or 0.
  int find_line(int a, int b) const;

  bool operator==(const PowerNetwork&) const = default;
};

PowerNetwork load_network(const std::filesystem::path& path);
PowerNetwork parse_network(const nlohmann::json& doc, const std::string& source = "<network>");
PowerNetwork parse_network_text(std::string_view text, const std::string& source = "<network>");
nlohmann::json to_json(const PowerNetwork& net);

/// Re-derives bus cross references and checks every invariant; throws
/// ValidationError naming the first violation.
void validate(PowerNetwork& net);

/// Ids of lines marked damageable, ascending.
std::vector<int> damageable_lines(const PowerNetwork& net);

/// True when the full line set spans every bus.
bool is_connected(const PowerNetwork& net);

/// True when fixed + tie lines alone span every bus.
bool is_connected_without_damage(const PowerNetwork& net);

}  // namespace gridmend

#endif  // GRIDMEND_NETWORK_HPP_
