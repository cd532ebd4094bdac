// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_FLEET_HPP_
#define GRIDMEND_FLEET_HPP_

#include <map>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gridmend {

enum class UnitKind { kMeg, kMess, kRc };
std::string_view to_string(UnitKind kind);

/// Where a unit is. A parked unit has hours_left == 0 and sits on `node`;
/// a travelling unit is bound for `node` and arrives after hours_left steps.
struct Location {
  int node = 0;
  int hours_left = 0;

  bool in_transit() const { return hours_left > 0; }
  bool operator==(const Location&) const = default;
};

struct MegSpec {
  double p_min_kw = 0.0;
  double p_max_kw = 150.0;
  double q_min_kvar = -50.0;
  double q_max_kvar = 75.0;
  bool operator==(const MegSpec&) const = default;
};

struct MessSpec {
  double p_max_kw = 100.0;
  double e_max_kwh = 400.0;
  double soc_min = 0.1;
  double soc_max = 0.9;
  double eta_charge = 0.9;
  double eta_discharge = 0.9;
  double soc_init = 0.5;
  bool operator==(const MessSpec&) const = default;
};

struct RcSpec {
  int resources = 10;
  bool operator==(const RcSpec&) const = default;
};

struct MegState {
  MegSpec spec;
  Location at;
};

struct MessState {
  MessSpec spec;
  Location at;
  double soc = 0.5;
};

struct RcState {
  RcSpec spec;
  Location at;
  int resources = 10;
  std::map<int, int> hours_spent;  // line id -> repair hours this crew contributed
};

/// Both fields are non-negative magnitudes; at most one is nonzero.
struct MessPower {
  double charge_kw = 0.0;
  double discharge_kw = 0.0;
};

MessPower mess_power_from_action(const MessSpec& spec, double soc, double a,
                                 double dt_h = 1.0);

/// SoC after one step. A travelling MESS keeps its SoC.
double mess_soc_step(const MessSpec& spec, double soc, const MessPower& executed,
                     bool connected, double dt_h = 1.0);

double meg_power_from_action(const MegSpec& spec, double a);

/// Repair status of one damaged line, shared by every crew working on it.
struct DamagedLine {
  int line = 0;
  int repair_hours = 1;      // RT
  int repair_resources = 1;  // rs
  int progress = 0;          // cumulative crew-hours spent
  bool repaired = false;
  int repaired_by = -1;      // index of the crew that completed it

  bool operator==(const DamagedLine&) const = default;
};

enum class RepairOutcome { kIdle, kProgress, kCompleted, kRefused, kAlreadyRepaired };

/// One hour of work by `crew` (index `crew_index`) on `line`. A crew may only
/// work when it holds at least rs units; the resources are consumed by the
/// crew whose hour completes the repair.
RepairOutcome rc_repair_step(RcState& crew, int crew_index, DamagedLine& line, bool repairing);

struct FleetSpec {
  std::vector<MegSpec> megs;
  std::vector<MessSpec> messes;
  std::vector<RcSpec> rcs;
  std::vector<int> meg_start;   // transport node per MEG
  std::vector<int> mess_start;  // transport node per MESS
  std::vector<int> rc_start;    // transport node per RC

  int agent_count() const {
    return static_cast<int>(megs.size() + messes.size() + rcs.size());
  }
  bool operator==(const FleetSpec&) const = default;
};

FleetSpec parse_fleet(const nlohmann::json& doc, const std::string& where = "fleet");
nlohmann::json to_json(const FleetSpec& fleet);
void validate(const FleetSpec& fleet);

}  // namespace gridmend

#endif  // GRIDMEND_FLEET_HPP_
