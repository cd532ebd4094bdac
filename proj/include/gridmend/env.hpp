// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_ENV_HPP_
#define GRIDMEND_ENV_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridmend/fleet.hpp"
#include "gridmend/mip.hpp"
#include "gridmend/network.hpp"
#include "gridmend/restoration.hpp"
#include "gridmend/scenario.hpp"
#include "gridmend/transport.hpp"

namespace gridmend {

/// Transport, fleet and outage sections of a scenario file.
struct ScenarioFile {
  TransportGraph transport;
  FleetSpec fleet;
  OutageSpec outage;
};

ScenarioFile parse_scenario(const nlohmann::json& doc, const PowerNetwork& net,
                            const std::string& where = "<scenario>");
ScenarioFile load_scenario(const std::filesystem::path& path, const PowerNetwork& net);

struct EnvConfig {
  PowerNetwork net;
  TransportGraph transport;
  FleetSpec fleet;
  OutageSpec outage;
  ProfileSet profiles;  // empty set means nominal loads, full PV, file volumes
  int horizon = kHoursPerDay;
  MipOptions mip;
  RestorationOptions restoration;
};

/// Checks that every fleet start and station sits on a transport node and
/// every damageable line has a site.
void validate(const EnvConfig& cfg);

enum class HlAction { kTransport = 0, kPower = 1 };

struct AgentAction {
  HlAction hl = HlAction::kPower;
  int route = 0;           // index into the unit's move set
  double magnitude = 0.0;  // MEG [0,1], MESS [-1,1]
  int repair = 0;          // RC only
};

struct AgentInfo {
  UnitKind kind = UnitKind::kMeg;
  int unit = 0;  // index within its kind
};

/// Per-agent record of what the step actually did.
struct AgentStepInfo {
  bool acted = false;        // false while travelling at the start of the step
  bool departed = false;
  bool invalid_route = false;
  bool connected = false;
  int station = 0;           // station id when connected
  double power_kw = 0.0;     // executed: MEG output, MESS discharge (+) / charge (-)
  RepairOutcome repair = RepairOutcome::kIdle;
  bool repair_noop = false;  // repair requested away from any damaged line
  int repair_line = 0;
};

struct StepResult {
  std::vector<std::vector<double>> observations;  // for t + 1
  double reward = 0.0;                            // λ_t, shared
  std::vector<double> xi;                         // per agent
  double restored_kw = 0.0;
  double restored_value = 0.0;  // Σ c·P restored
  double baseline_value = 0.0;  // Σ c·P̄
  SolveStatus status = SolveStatus::kOptimal;
  int hour = 0;                 // the step just simulated
  bool done = false;
  std::vector<AgentStepInfo> agents;
  DispatchSolution dispatch;
};

/// Share of restored load attributed to each agent: MEG output, MESS
/// discharge, and |flow| on lines an RC completed. `repaired_by[line id]`
/// holds the completing agent index or -1. Shares are rescaled when their
/// sum exceeds one.
std::vector<double> contribution(const DispatchSolution& sol, const StepInputs& in,
                                 const std::vector<AgentInfo>& agents,
                                 const std::vector<int>& repaired_by);

class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  /// Draws a day from the profile set and an outage from the scenario spec.
  std::vector<std::vector<double>> reset(std::uint64_t seed);
  /// Fixed day index (into the profile set) and outage.
  std::vector<std::vector<double>> reset(std::uint64_t seed, int day, const OutageScenario& outage);

  StepResult step(const std::vector<AgentAction>& actions);

  int agent_count() const { return static_cast<int>(agents_.size()); }
  const std::vector<AgentInfo>& agents() const { return agents_; }
  int observation_width() const;
  int hour() const { return hour_; }
  int day() const { return day_; }
  bool done() const { return hour_ >= cfg_.horizon; }
  const EnvConfig& config() const { return cfg_; }
  const OutageScenario& outage() const { return outage_; }

  std::vector<std::vector<double>> observations() const;
  /// Routing menu for an agent parked now; all-invalid except stay when in transit.
  MoveSet moves(int agent) const;
  bool in_transit(int agent) const;
  Location location(int agent) const;
  double soc(int mess_index) const { return messes_.at(static_cast<size_t>(mess_index)).soc; }
  int rc_resources(int rc_index) const { return rcs_.at(static_cast<size_t>(rc_index)).resources; }
  const std::vector<DamagedLine>& damaged() const { return damaged_; }
  /// Candidate nodes whose one-hot columns lead the observation.
  const std::vector<int>& observed_nodes() const { return obs_nodes_; }

  /// Appends one CSV row per agent for the last step.
  static void write_trace_header(std::ostream& os);
  void write_trace(std::ostream& os, const StepResult& r, const std::vector<AgentAction>& a) const;

 private:
  std::vector<double> observe(int agent) const;
  const std::vector<int>& candidates(UnitKind kind) const;
  Location& location_ref(int agent);
  int station_at(int node) const;
  DamagedLine* damage_at(int node);
  const DamagedLine* damage_at(int node) const;

  EnvConfig cfg_;
  std::vector<AgentInfo> agents_;
  std::vector<int> obs_nodes_;
  std::vector<int> mps_candidates_;
  std::vector<int> rc_candidates_;
  double max_nodal_load_ = 1.0;
  double max_nodal_pv_ = 1.0;
  int rt_scale_ = 1;
  int rs_scale_ = 1;

  // Episode state.
  int hour_ = 0;
  int day_ = 0;
  OutageScenario outage_;
  RouteTable routes_;
  std::vector<HourlyProfile> volumes_;
  std::vector<MegState> megs_;
  std::vector<MessState> messes_;
  std::vector<RcState> rcs_;
  std::vector<DamagedLine> damaged_;
  std::vector<int> warm_y_, warm_e_;
};

}  // namespace gridmend

#endif  // GRIDMEND_ENV_HPP_
