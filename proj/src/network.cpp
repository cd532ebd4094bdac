// SPDX-License-Identifier: Apache-2.0

#include "gridmend/network.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"
#include "union_find.hpp"

namespace gridmend {

using nlohmann::json;

std::string_view to_string(LineKind kind) {
  switch (kind) {
    case LineKind::kFixed:
      return "fixed";
    case LineKind::kTieSwitch:
      return "tie";
    case LineKind::kDamageable:
      return "damageable";
  }
  return "?";
}

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kDiesel:
      return "dg";
    case GeneratorKind::kGridFormingPv:
      return "pv_forming";
    case GeneratorKind::kGridFollowingPv:
      return "pv_following";
  }
  return "?";
}

namespace {

// Field accessors that report the offending location on failure.
template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where, std::string("missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key, e.what());
  }
}

template <typename T>
T optional(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key, e.what());
  }
}

const json& section(const json& doc, const char* key, const std::string& source) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw ParseError(source, std::string("missing array section '") + key + "'");
  }
  return doc.at(key);
}

LineKind parse_line_kind(const std::string& s, const std::string& where) {
  if (s == "fixed") return LineKind::kFixed;
  if (s == "tie") return LineKind::kTieSwitch;
  if (s == "damageable") return LineKind::kDamageable;
  throw ParseError(where + ".kind", "unknown line kind '" + s + "'");
}

GeneratorKind parse_generator_kind(const std::string& s, const std::string& where) {
  if (s == "dg") return GeneratorKind::kDiesel;
  if (s == "pv_forming") return GeneratorKind::kGridFormingPv;
  if (s == "pv_following") return GeneratorKind::kGridFollowingPv;
  throw ParseError(where + ".kind", "unknown generator kind '" + s + "'");
}

template <typename T>
void sort_and_check_ids(std::vector<T>& items, const char* what) {
  std::sort(items.begin(), items.end(),
            [](const T& a, const T& b) { return a.id < b.id; });
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0 && items[i].id == items[i - 1].id) {
      throw ValidationError(std::string("duplicate ") + what + " id " +
                            std::to_string(items[i].id));
    }
    if (items[i].id != static_cast<int>(i) + 1) {
      throw ValidationError(std::string(what) + " ids must be contiguous from 1; found " +
                            std::to_string(items[i].id) + " at position " +
                            std::to_string(i + 1));
    }
  }
}

}  // namespace

int PowerNetwork::find_line(int a, int b) const {
  for (const auto& l : lines) {
    if ((l.from == a && l.to == b) || (l.from == b && l.to == a)) return l.id;
  }
  return 0;
}

bool is_connected(const PowerNetwork& net) {
  detail::UnionFind uf(net.buses.size());
  for (const auto& l : net.lines) uf.unite(l.from - 1, l.to - 1);
  return uf.components() <= 1;
}

bool is_connected_without_damage(const PowerNetwork& net) {
  detail::UnionFind uf(net.buses.size());
  for (const auto& l : net.lines) {
    if (l.kind != LineKind::kDamageable) uf.unite(l.from - 1, l.to - 1);
  }
  return uf.components() <= 1;
}

void validate(PowerNetwork& net) {
  if (net.schema_version != kNetworkSchemaVersion) {
    throw ValidationError("unsupported schema_version " + std::to_string(net.schema_version));
  }
  if (!(net.base_kv > 0.0) || !(net.base_mva > 0.0)) {
    throw ValidationError("per-unit base must be positive");
  }
  if (!(net.v_min > 0.0) || !(net.v_min < net.v_max)) {
    throw ValidationError("voltage limits must satisfy 0 < v_min < v_max");
  }
  if (net.buses.empty()) throw ValidationError("network has no buses");

  sort_and_check_ids(net.buses, "bus");
  sort_and_check_ids(net.lines, "line");
  sort_and_check_ids(net.generators, "generator");
  sort_and_check_ids(net.loads, "load");
  sort_and_check_ids(net.stations, "station");
  std::vector<bool> flagged(net.buses.size());
  for (size_t i = 0; i < net.buses.size(); ++i) flagged[i] = net.buses[i].has_black_start;

  const int nb = static_cast<int>(net.buses.size());
  auto check_bus = [nb](int bus, const std::string& what) {
    if (bus < 1 || bus > nb) {
      throw ValidationError(what + " references unknown bus " + std::to_string(bus));
    }
  };

  for (auto& b : net.buses) {
    b.loads.clear();
    b.generators.clear();
    b.stations.clear();
    b.has_black_start = false;
  }

  for (const auto& l : net.lines) {
    const std::string what = "line " + std::to_string(l.id);
    check_bus(l.from, what);
    check_bus(l.to, what);
    if (l.from == l.to) throw ValidationError(what + " is a self loop");
    if (l.r_pu < 0.0 || l.x_pu < 0.0) {
      throw ValidationError(what + " has negative impedance (r >= 0, x >= 0 required)");
    }
    if (!(l.s_max_kva > 0.0)) throw ValidationError(what + " needs s_max_kva > 0");
    if (l.kind == LineKind::kDamageable && (l.repair_hours < 1 || l.repair_resources < 1)) {
      throw ValidationError(what + " is damageable and needs repair_hours >= 1 and "
                                   "repair_resources >= 1");
    }
  }
  for (const auto& g : net.generators) {
    const std::string what = "generator " + std::to_string(g.id);
    check_bus(g.bus, what);
    if (g.p_min_kw > g.p_max_kw) throw ValidationError(what + " has p_min > p_max");
    if (g.q_min_kvar > g.q_max_kvar) throw ValidationError(what + " has q_min > q_max");
    if (g.is_pv() && !(g.s_max_kva > 0.0)) {
      throw ValidationError(what + " is a PV and needs s_max_kva > 0");
    }
    if (g.p_min_kw > 0.0) {
      // A dark bus must be able to host a generator at zero output.
      throw ValidationError(what + " has p_min > 0; generators must admit zero output");
    }
    auto& bus = net.buses[static_cast<size_t>(g.bus - 1)];
    bus.generators.push_back(g.id);
    if (g.is_black_start()) bus.has_black_start = true;
  }
  for (const auto& d : net.loads) {
    const std::string what = "load " + std::to_string(d.id);
    check_bus(d.bus, what);
    if (!(d.shed_cost > 0.0)) throw ValidationError(what + " needs shed_cost > 0");
    if (d.p_kw < 0.0 || d.q_kvar < 0.0) throw ValidationError(what + " has negative baseline");
    net.buses[static_cast<size_t>(d.bus - 1)].loads.push_back(d.id);
  }
  for (const auto& s : net.stations) {
    const std::string what = "station " + std::to_string(s.id);
    check_bus(s.bus, what);
    if (s.transport_node < 0) throw ValidationError(what + " has negative transport node");
    auto& bus = net.buses[static_cast<size_t>(s.bus - 1)];
    if (!bus.stations.empty()) {
      throw ValidationError("bus " + std::to_string(s.bus) + " hosts more than one station");
    }
    bus.stations.push_back(s.id);
    bus.has_black_start = true;
  }

  // Essential loads must sit in the higher cost tier.
  double max_nonessential = 0.0;
  double min_essential = 1e300;
  for (const auto& d : net.loads) {
    if (d.essential) {
      min_essential = std::min(min_essential, d.shed_cost);
    } else {
      max_nonessential = std::max(max_nonessential, d.shed_cost);
    }
  }
  if (min_essential < max_nonessential) {
    throw ValidationError("essential loads must carry a shedding cost >= every non-essential load");
  }

  for (size_t i = 0; i < net.buses.size(); ++i) {
    if (flagged[i] && !net.buses[i].has_black_start) {
      throw ValidationError("bus " + std::to_string(i + 1) +
                            " is flagged black-start but hosts no DG, grid-forming PV or station");
    }
  }

  if (!is_connected(net)) throw ValidationError("lines do not span every bus");
}

PowerNetwork parse_network(const json& doc, const std::string& source) {
  if (!doc.is_object()) throw ParseError(source, "network document must be a JSON object");
  PowerNetwork net;
  net.schema_version = required<int>(doc, "schema_version", source);
  net.name = optional<std::string>(doc, "name", "", source);
  net.base_kv = optional<double>(doc, "base_kv", 12.66, source);
  net.base_mva = optional<double>(doc, "base_mva", 1.0, source);
  if (doc.contains("voltage_limits")) {
    auto lim = required<std::vector<double>>(doc, "voltage_limits", source);
    if (lim.size() != 2) throw ParseError(source + ".voltage_limits", "expected [v_min, v_max]");
    net.v_min = lim[0];
    net.v_max = lim[1];
  }

  const auto& buses = section(doc, "buses", source);
  for (size_t i = 0; i < buses.size(); ++i) {
    const std::string where = source + ".buses[" + std::to_string(i) + "]";
    Bus b;
    b.id = required<int>(buses[i], "id", where);
    b.has_black_start = optional<bool>(buses[i], "black_start", false, where);
    net.buses.push_back(b);
  }

  const auto& lines = section(doc, "lines", source);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string where = source + ".lines[" + std::to_string(i) + "]";
    const auto& j = lines[i];
    Line l;
    l.id = required<int>(j, "id", where);
    l.from = required<int>(j, "from", where);
    l.to = required<int>(j, "to", where);
    l.r_pu = required<double>(j, "r", where);
    l.x_pu = required<double>(j, "x", where);
    l.s_max_kva = required<double>(j, "s_max_kva", where);
    l.kind = parse_line_kind(optional<std::string>(j, "kind", "fixed", where), where);
    l.repair_hours = optional<int>(j, "repair_hours", 0, where);
    l.repair_resources = optional<int>(j, "repair_resources", 0, where);
    net.lines.push_back(l);
  }

  const auto& gens = section(doc, "generators", source);
  for (size_t i = 0; i < gens.size(); ++i) {
    const std::string where = source + ".generators[" + std::to_string(i) + "]";
    const auto& j = gens[i];
    Generator g;
    g.id = required<int>(j, "id", where);
    g.kind = parse_generator_kind(required<std::string>(j, "kind", where), where);
    g.bus = required<int>(j, "bus", where);
    g.p_min_kw = optional<double>(j, "p_min_kw", 0.0, where);
    g.p_max_kw = required<double>(j, "p_max_kw", where);
    g.q_min_kvar = optional<double>(j, "q_min_kvar", 0.0, where);
    g.q_max_kvar = optional<double>(j, "q_max_kvar", 0.0, where);
    g.s_max_kva = optional<double>(j, "s_max_kva", 0.0, where);
    net.generators.push_back(g);
  }

  const auto& loads = section(doc, "loads", source);
  for (size_t i = 0; i < loads.size(); ++i) {
    const std::string where = source + ".loads[" + std::to_string(i) + "]";
    const auto& j = loads[i];
    Load d;
    d.id = required<int>(j, "id", where);
    d.bus = required<int>(j, "bus", where);
    d.p_kw = required<double>(j, "p_kw", where);
    d.q_kvar = optional<double>(j, "q_kvar", 0.0, where);
    d.essential = optional<bool>(j, "essential", false, where);
    d.shed_cost = required<double>(j, "shed_cost", where);
    net.loads.push_back(d);
  }

  if (doc.contains("stations")) {
    const auto& st = section(doc, "stations", source);
    for (size_t i = 0; i < st.size(); ++i) {
      const std::string where = source + ".stations[" + std::to_string(i) + "]";
      MessStation s;
      s.id = required<int>(st[i], "id", where);
      s.bus = required<int>(st[i], "bus", where);
      s.transport_node = required<int>(st[i], "transport_node", where);
      net.stations.push_back(s);
    }
  }

  validate(net);
  return net;
}

PowerNetwork parse_network_text(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it to a line number.
    const size_t offset = std::min(static_cast<size_t>(e.byte), text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n');
    throw ParseError(source + ":" + std::to_string(line), e.what());
  }
  return parse_network(doc, source);
}

PowerNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_network_text(buf.str(), path.string());
}

json to_json(const PowerNetwork& net) {
  json doc;
  doc["schema_version"] = net.schema_version;
  doc["name"] = net.name;
  doc["base_kv"] = net.base_kv;
  doc["base_mva"] = net.base_mva;
  doc["voltage_limits"] = {net.v_min, net.v_max};
  doc["buses"] = json::array();
  for (const auto& b : net.buses) {
    doc["buses"].push_back({{"id", b.id}, {"black_start", b.has_black_start}});
  }
  doc["lines"] = json::array();
  for (const auto& l : net.lines) {
    json j = {{"id", l.id},   {"from", l.from}, {"to", l.to},
              {"r", l.r_pu},  {"x", l.x_pu},    {"s_max_kva", l.s_max_kva},
              {"kind", std::string(to_string(l.kind))}};
    if (l.kind == LineKind::kDamageable) {
      j["repair_hours"] = l.repair_hours;
      j["repair_resources"] = l.repair_resources;
    }
    doc["lines"].push_back(j);
  }
  doc["generators"] = json::array();
  for (const auto& g : net.generators) {
    json j = {{"id", g.id},
              {"kind", std::string(to_string(g.kind))},
              {"bus", g.bus},
              {"p_min_kw", g.p_min_kw},
              {"p_max_kw", g.p_max_kw},
              {"q_min_kvar", g.q_min_kvar},
              {"q_max_kvar", g.q_max_kvar}};
    if (g.is_pv()) j["s_max_kva"] = g.s_max_kva;
    doc["generators"].push_back(j);
  }
  doc["loads"] = json::array();
  for (const auto& d : net.loads) {
    doc["loads"].push_back({{"id", d.id},
                            {"bus", d.bus},
                            {"p_kw", d.p_kw},
                            {"q_kvar", d.q_kvar},
                            {"essential", d.essential},
                            {"shed_cost", d.shed_cost}});
  }
  doc["stations"] = json::array();
  for (const auto& s : net.stations) {
    doc["stations"].push_back(
        {{"id", s.id}, {"bus", s.bus}, {"transport_node", s.transport_node}});
  }
  return doc;
}

std::vector<int> damageable_lines(const PowerNetwork& net) {
  std::vector<int> ids;
  for (const auto& l : net.lines) {
    if (l.kind == LineKind::kDamageable) ids.push_back(l.id);
  }
  return ids;
}

}  // namespace gridmend
