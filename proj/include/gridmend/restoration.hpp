// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_RESTORATION_HPP_
#define GRIDMEND_RESTORATION_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridmend/mip.hpp"
#include "gridmend/network.hpp"

namespace gridmend {

/// A MEG parked at a station bus for this step. Its active power is an
/// upper bound the optimizer may curtail; reactive power is free in range.
struct MegInjection {
  int unit = -1;
  int bus = 0;
  double p_request_kw = 0.0;
  double q_min_kvar = 0.0;
  double q_max_kvar = 0.0;
};

/// A MESS parked at a station bus. At most one of the requests is nonzero.
struct MessInjection {
  int unit = -1;
  int bus = 0;
  double discharge_request_kw = 0.0;
  double charge_request_kw = 0.0;
};

struct StepInputs {
  int hour = 0;
  std::vector<double> load_p_kw;        // per load id; empty means nominal
  std::vector<double> load_q_kvar;      // per load id; empty means nominal
  std::vector<double> pv_available_kw;  // per generator id; empty means p_max
  std::vector<char> line_usable;        // per line id; 0 for damaged, unrepaired
  std::vector<MegInjection> megs;
  std::vector<MessInjection> messes;
  std::vector<int> warm_y;  // previous step's line energization, optional
  std::vector<int> warm_e;  // previous step's bus energization, optional
};

struct RestorationOptions {
  /// Objective weight on MESS charging, relative to the cheapest load.
  double charge_bonus = 1e-3;
};

/// Column indices of every model variable; -1 where a variable is absent.
struct RestorationProblem {
  MipProblem mip;
  std::vector<int> load_p;
  std::vector<double> load_q_ratio;  // Q follows P at the baseline power factor
  std::vector<int> gen_p, gen_q;
  std::vector<int> line_p, line_q, line_f, line_y;
  std::vector<int> bus_v, bus_e, bus_root, bus_fs;
  std::vector<int> meg_p, meg_q, mess_d, mess_c;
  std::vector<char> black_start;  // per bus, for this step
  std::vector<std::pair<int, int>> line_ends;  // (from, to) bus ids
  std::vector<double> load_cost;
  double kw_per_pu = 1000.0;
  StepInputs inputs;
};

RestorationProblem build_problem(const PowerNetwork& net, const StepInputs& in,
                                 const RestorationOptions& opt = {});

enum class SolveStatus { kOptimal, kIncumbent, kInfeasible };
std::string to_string(SolveStatus s);

struct DispatchSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  double objective = 0.0;  // sum of c^ls * restored kW
  double restored_kw = 0.0;
  std::vector<double> load_p_kw, load_q_kvar;
  std::vector<double> gen_p_kw, gen_q_kvar;
  std::vector<double> line_p_kw, line_q_kvar;
  std::vector<double> bus_v2;
  std::vector<int> y, e, root;
  std::vector<double> line_virtual, source_virtual;
  std::vector<double> meg_p_kw, meg_q_kvar;
  std::vector<double> mess_discharge_kw, mess_charge_kw;
  std::vector<char> black_start;
  int nodes = 0;
  int lp_iterations = 0;
};

/// Branch-and-bound solve. The previous step's (y, e) and the all-dark
/// assignment are tried first as incumbents.
DispatchSolution solve(const RestorationProblem& p, const MipOptions& opt = {});

DispatchSolution solve_restoration(const PowerNetwork& net, const StepInputs& in,
                                   const MipOptions& opt = {}, const RestorationOptions& ro = {});

/// Decodes an arbitrary column vector (e.g. from an enumerated LP) into a
/// dispatch solution.
DispatchSolution decode(const RestorationProblem& p, const std::vector<double>& x);

struct RadialityReport {
  enum class Kind { kOk, kCycle, kOrphanIsland, kCountMismatch, kDarkConnection, kFractional };
  Kind kind = Kind::kOk;
  std::string detail;
  int energized_buses = 0;
  int energized_lines = 0;
  int islands = 0;

  bool ok() const { return kind == Kind::kOk; }
};

RadialityReport check_radiality(const DispatchSolution& sol, const PowerNetwork& net);

void write_lp(std::ostream& os, const RestorationProblem& p, const std::string& title = {});

/// Step inputs from JSON. Every field is optional:
///   {"hour": 0, "loads": [{"id", "p_kw", "q_kvar"}], "pv": [{"id", "p_kw"}],
///    "damaged_lines": [ids], "megs": [{"bus", "p_kw", "q_min_kvar", "q_max_kvar"}],
///    "messes": [{"bus", "discharge_kw" | "charge_kw"}]}
/// Loads and PVs not listed keep their nominal values.
StepInputs parse_step_inputs(const nlohmann::json& doc, const PowerNetwork& net,
                             const std::string& where = "<step>");
nlohmann::json to_json(const DispatchSolution& s, const PowerNetwork& net);

}  // namespace gridmend

#endif  // GRIDMEND_RESTORATION_HPP_
