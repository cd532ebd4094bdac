// SPDX-License-Identifier: Apache-2.0

#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"
#include "gridmend/restoration.hpp"

namespace gridmend {

using nlohmann::json;

namespace {

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where, std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key, e.what());
  }
}

template <class T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

void check_id(int id, size_t n, const std::string& where, const char* what) {
  if (id < 1 || static_cast<size_t>(id) > n) {
    throw ParseError(where, std::string("unknown ") + what + " id " + std::to_string(id));
  }
}

}  // namespace

StepInputs parse_step_inputs(const json& doc, const PowerNetwork& net, const std::string& where) {
  if (!doc.is_object()) throw ParseError(where, "expected an object");
  StepInputs in;
  in.hour = field_or<int>(doc, "hour", 0, where);
  if (doc.contains("loads")) {
    for (const auto& l : net.loads) {
      in.load_p_kw.push_back(l.p_kw);
      in.load_q_kvar.push_back(l.q_kvar);
    }
    for (size_t k = 0; k < doc["loads"].size(); ++k) {
      const std::string w = where + ".loads[" + std::to_string(k) + "]";
      const auto& e = doc["loads"][k];
      const int id = field<int>(e, "id", w);
      check_id(id, net.loads.size(), w, "load");
      const double p = field<double>(e, "p_kw", w);
      if (p < 0.0) throw ParseError(w + ".p_kw", "load must be non-negative");
      const auto& nominal = net.loads[static_cast<size_t>(id - 1)];
      const double ratio = nominal.p_kw > 0.0 ? nominal.q_kvar / nominal.p_kw : 0.0;
      in.load_p_kw[static_cast<size_t>(id - 1)] = p;
      in.load_q_kvar[static_cast<size_t>(id - 1)] = field_or<double>(e, "q_kvar", p * ratio, w);
    }
  }
  if (doc.contains("pv")) {
    for (const auto& g : net.generators) in.pv_available_kw.push_back(g.p_max_kw);
    for (size_t k = 0; k < doc["pv"].size(); ++k) {
      const std::string w = where + ".pv[" + std::to_string(k) + "]";
      const int id = field<int>(doc["pv"][k], "id", w);
      check_id(id, net.generators.size(), w, "generator");
      in.pv_available_kw[static_cast<size_t>(id - 1)] = field<double>(doc["pv"][k], "p_kw", w);
    }
  }
  if (doc.contains("damaged_lines")) {
    in.line_usable.assign(net.lines.size(), 1);
    for (int id : field<std::vector<int>>(doc, "damaged_lines", where)) {
      check_id(id, net.lines.size(), where + ".damaged_lines", "line");
      in.line_usable[static_cast<size_t>(id - 1)] = 0;
    }
  }
  if (doc.contains("megs")) {
    for (size_t k = 0; k < doc["megs"].size(); ++k) {
      const std::string w = where + ".megs[" + std::to_string(k) + "]";
      const auto& e = doc["megs"][k];
      MegInjection m;
      m.unit = static_cast<int>(k);
      m.bus = field<int>(e, "bus", w);
      check_id(m.bus, net.buses.size(), w, "bus");
      m.p_request_kw = field<double>(e, "p_kw", w);
      m.q_min_kvar = field_or<double>(e, "q_min_kvar", 0.0, w);
      m.q_max_kvar = field_or<double>(e, "q_max_kvar", 0.0, w);
      in.megs.push_back(m);
    }
  }
  if (doc.contains("messes")) {
    for (size_t k = 0; k < doc["messes"].size(); ++k) {
      const std::string w = where + ".messes[" + std::to_string(k) + "]";
      const auto& e = doc["messes"][k];
      MessInjection m;
      m.unit = static_cast<int>(k);
      m.bus = field<int>(e, "bus", w);
      check_id(m.bus, net.buses.size(), w, "bus");
      m.discharge_request_kw = field_or<double>(e, "discharge_kw", 0.0, w);
      m.charge_request_kw = field_or<double>(e, "charge_kw", 0.0, w);
      if (m.discharge_request_kw > 0.0 && m.charge_request_kw > 0.0) {
        throw ParseError(w, "a MESS cannot charge and discharge in the same step");
      }
      in.messes.push_back(m);
    }
  }
  return in;
}

json to_json(const DispatchSolution& s, const PowerNetwork& net) {
  json j;
  j["status"] = to_string(s.status);
  j["objective"] = s.objective;
  j["restored_kw"] = s.restored_kw;
  j["nodes"] = s.nodes;
  j["lp_iterations"] = s.lp_iterations;
  json loads = json::array();
  for (size_t k = 0; k < s.load_p_kw.size(); ++k) {
    loads.push_back({{"id", net.loads[k].id}, {"bus", net.loads[k].bus}, {"p_kw", s.load_p_kw[k]},
                     {"q_kvar", s.load_q_kvar[k]}});
  }
  j["loads"] = loads;
  json gens = json::array();
  for (size_t k = 0; k < s.gen_p_kw.size(); ++k) {
    gens.push_back({{"id", net.generators[k].id}, {"p_kw", s.gen_p_kw[k]}, {"q_kvar", s.gen_q_kvar[k]}});
  }
  j["generators"] = gens;
  json lines = json::array();
  for (size_t k = 0; k < s.line_p_kw.size(); ++k) {
    lines.push_back({{"id", net.lines[k].id}, {"energized", s.y[k] != 0}, {"p_kw", s.line_p_kw[k]},
                     {"q_kvar", s.line_q_kvar[k]}});
  }
  j["lines"] = lines;
  json buses = json::array();
  for (size_t k = 0; k < s.bus_v2.size(); ++k) {
    buses.push_back({{"id", static_cast<int>(k + 1)}, {"energized", s.e[k] != 0}, {"v2", s.bus_v2[k]}});
  }
  j["buses"] = buses;
  j["meg_p_kw"] = s.meg_p_kw;
  j["meg_q_kvar"] = s.meg_q_kvar;
  j["mess_discharge_kw"] = s.mess_discharge_kw;
  j["mess_charge_kw"] = s.mess_charge_kw;
  return j;
}

}  // namespace gridmend
