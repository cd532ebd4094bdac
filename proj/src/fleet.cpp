// SPDX-License-Identifier: Apache-2.0

#include "gridmend/fleet.hpp"

#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"

namespace gridmend {

using nlohmann::json;

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::kMeg: return "meg";
    case UnitKind::kMess: return "mess";
    case UnitKind::kRc: return "rc";
  }
  return "?";
}

MessPower mess_power_from_action(const MessSpec& spec, double soc, double a, double dt_h) {
  a = std::clamp(a, -1.0, 1.0);
  MessPower p;
  if (a >= 0.0) {
    const double headroom = (spec.soc_max - soc) * spec.e_max_kwh / spec.eta_charge / dt_h;
    p.charge_kw = std::max(0.0, std::min(a * spec.p_max_kw, headroom));
  } else {
    const double floor = (spec.soc_min - soc) * spec.e_max_kwh * spec.eta_discharge / dt_h;
    p.discharge_kw = -std::min(0.0, std::max(a * spec.p_max_kw, floor));
  }
  return p;
}

double mess_soc_step(const MessSpec& spec, double soc, const MessPower& executed, bool connected,
                     double dt_h) {
  if (!connected) return soc;
  const double delta =
      (executed.charge_kw * spec.eta_charge - executed.discharge_kw / spec.eta_discharge) * dt_h /
      spec.e_max_kwh;
  return soc + delta;
}

double meg_power_from_action(const MegSpec& spec, double a) {
  a = std::clamp(a, 0.0, 1.0);
  return spec.p_min_kw + a * (spec.p_max_kw - spec.p_min_kw);
}

RepairOutcome rc_repair_step(RcState& crew, int crew_index, DamagedLine& line, bool repairing) {
  if (!repairing) return RepairOutcome::kIdle;
  if (line.repaired) return RepairOutcome::kAlreadyRepaired;
  if (crew.resources < line.repair_resources) return RepairOutcome::kRefused;
  ++line.progress;
  ++crew.hours_spent[line.line];
  if (line.progress < line.repair_hours) return RepairOutcome::kProgress;
  line.repaired = true;
  line.repaired_by = crew_index;
  crew.resources -= line.repair_resources;
  return RepairOutcome::kCompleted;
}

namespace {

template <typename T>
T field(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

FleetSpec parse_fleet(const json& doc, const std::string& where) {
  FleetSpec f;
  try {
    if (doc.contains("meg")) {
      for (const auto& j : doc.at("meg")) {
        MegSpec s;
        s.p_min_kw = field(j, "p_min_kw", s.p_min_kw);
        s.p_max_kw = field(j, "p_max_kw", s.p_max_kw);
        s.q_min_kvar = field(j, "q_min_kvar", s.q_min_kvar);
        s.q_max_kvar = field(j, "q_max_kvar", s.q_max_kvar);
        f.megs.push_back(s);
        f.meg_start.push_back(j.at("start").get<int>());
      }
    }
    if (doc.contains("mess")) {
      for (const auto& j : doc.at("mess")) {
        MessSpec s;
        s.p_max_kw = field(j, "p_max_kw", s.p_max_kw);
        s.e_max_kwh = field(j, "e_max_kwh", s.e_max_kwh);
        s.soc_min = field(j, "soc_min", s.soc_min);
        s.soc_max = field(j, "soc_max", s.soc_max);
        s.eta_charge = field(j, "eta_charge", s.eta_charge);
        s.eta_discharge = field(j, "eta_discharge", s.eta_discharge);
        s.soc_init = field(j, "soc_init", s.soc_init);
        f.messes.push_back(s);
        f.mess_start.push_back(j.at("start").get<int>());
      }
    }
    if (doc.contains("rc")) {
      for (const auto& j : doc.at("rc")) {
        RcSpec s;
        s.resources = field(j, "resources", s.resources);
        f.rcs.push_back(s);
        f.rc_start.push_back(j.at("start").get<int>());
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(where, e.what());
  }
  validate(f);
  return f;
}

json to_json(const FleetSpec& f) {
  json doc = {{"meg", json::array()}, {"mess", json::array()}, {"rc", json::array()}};
  for (size_t i = 0; i < f.megs.size(); ++i) {
    const auto& s = f.megs[i];
    doc["meg"].push_back({{"start", f.meg_start[i]},
                          {"p_min_kw", s.p_min_kw},
                          {"p_max_kw", s.p_max_kw},
                          {"q_min_kvar", s.q_min_kvar},
                          {"q_max_kvar", s.q_max_kvar}});
  }
  for (size_t i = 0; i < f.messes.size(); ++i) {
    const auto& s = f.messes[i];
    doc["mess"].push_back({{"start", f.mess_start[i]},
                           {"p_max_kw", s.p_max_kw},
                           {"e_max_kwh", s.e_max_kwh},
                           {"soc_min", s.soc_min},
                           {"soc_max", s.soc_max},
                           {"eta_charge", s.eta_charge},
                           {"eta_discharge", s.eta_discharge},
                           {"soc_init", s.soc_init}});
  }
  for (size_t i = 0; i < f.rcs.size(); ++i) {
    doc["rc"].push_back({{"start", f.rc_start[i]}, {"resources", f.rcs[i].resources}});
  }
  return doc;
}

void validate(const FleetSpec& f) {
  for (const auto& s : f.megs) {
    if (s.p_min_kw < 0.0 || s.p_min_kw > s.p_max_kw) throw ValidationError("MEG needs 0 <= p_min <= p_max");
    if (s.q_min_kvar > s.q_max_kvar) throw ValidationError("MEG needs q_min <= q_max");
  }
  for (const auto& s : f.messes) {
    if (!(s.p_max_kw > 0.0) || !(s.e_max_kwh > 0.0)) {
      throw ValidationError("MESS needs positive power and energy ratings");
    }
    if (s.soc_min < 0.0 || s.soc_min > s.soc_max || s.soc_max > 1.0) {
      throw ValidationError("MESS needs 0 <= soc_min <= soc_max <= 1");
    }
    if (s.soc_init < s.soc_min || s.soc_init > s.soc_max) {
      throw ValidationError("MESS initial SoC outside [soc_min, soc_max]");
    }
    auto eff_ok = [](double e) { return e > 0.0 && e <= 1.0; };
    if (!eff_ok(s.eta_charge) || !eff_ok(s.eta_discharge)) {
      throw ValidationError("MESS efficiencies must lie in (0, 1]");
    }
  }
  for (const auto& s : f.rcs) {
    if (s.resources < 0) throw ValidationError("RC resources must be non-negative");
  }
  if (f.meg_start.size() != f.megs.size() || f.mess_start.size() != f.messes.size() ||
      f.rc_start.size() != f.rcs.size()) {
    throw ValidationError("every unit needs a start node");
  }
}

}  // namespace gridmend
