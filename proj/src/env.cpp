// SPDX-License-Identifier: Apache-2.0

#include "gridmend/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"

namespace gridmend {

using nlohmann::json;

namespace {

// One-hot block followed by these scalar features.
enum Feature {
  kInTransit,
  kHour,
  kRoadLoad,
  kLineStatus,
  kRepairTime,
  kRepairResources,
  kCrewResources,
  kNodalLoad,
  kNodalPv,
  kSoc,
  kFeatureCount
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

ScenarioFile parse_scenario(const json& doc, const PowerNetwork& net, const std::string& where) {
  ScenarioFile s;
  if (!doc.is_object()) throw ParseError(where, "scenario must be a JSON object");
  if (doc.value("schema_version", 1) != 1) throw ParseError(where, "unsupported schema_version");
  if (!doc.contains("transport")) throw ParseError(where, "missing section 'transport'");
  s.transport = parse_transport(doc.at("transport"), where + ".transport");
  validate(s.transport);
  if (!doc.contains("fleet")) throw ParseError(where, "missing section 'fleet'");
  s.fleet = parse_fleet(doc.at("fleet"), where + ".fleet");
  validate(s.fleet);
  s.outage = doc.contains("outage") ? parse_outage(doc.at("outage"), net, where + ".outage") : OutageSpec{};
  return s;
}

ScenarioFile load_scenario(const std::filesystem::path& path, const PowerNetwork& net) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  return parse_scenario(doc, net, path.string());
}

void validate(const EnvConfig& cfg) {
  const auto& g = cfg.transport;
  std::set<int> station_nodes;
  for (const auto& s : cfg.net.stations) {
    if (s.transport_node < 1 || s.transport_node > g.node_count) {
      throw ValidationError(fmt::format("station {} sits on unknown transport node {}", s.id,
                                        s.transport_node));
    }
    station_nodes.insert(s.transport_node);
  }
  auto check_mps = [&](const std::vector<int>& starts, const char* kind) {
    for (size_t i = 0; i < starts.size(); ++i) {
      if (!station_nodes.count(starts[i])) {
        throw ValidationError(fmt::format("{} {} starts at node {}, which hosts no station", kind,
                                          i + 1, starts[i]));
      }
    }
  };
  check_mps(cfg.fleet.meg_start, "MEG");
  check_mps(cfg.fleet.mess_start, "MESS");
  for (size_t i = 0; i < cfg.fleet.rc_start.size(); ++i) {
    const int n = cfg.fleet.rc_start[i];
    if (std::find(g.depots.begin(), g.depots.end(), n) == g.depots.end()) {
      throw ValidationError(fmt::format("RC {} starts at node {}, which is not a depot", i + 1, n));
    }
  }
  for (int id : damageable_lines(cfg.net)) {
    if (!g.line_sites.count(id)) {
      throw ValidationError(fmt::format("damageable line {} has no transport site", id));
    }
  }
  if (cfg.horizon < 1 || cfg.horizon > kHoursPerDay) {
    throw ValidationError("horizon must lie in 1..24");
  }
  validate_profiles(cfg.profiles, cfg.net, &g);
}

std::vector<double> contribution(const DispatchSolution& sol, const StepInputs& in,
                                 const std::vector<AgentInfo>& agents,
                                 const std::vector<int>& repaired_by) {
  std::vector<double> xi(agents.size(), 0.0);
  if (sol.status == SolveStatus::kInfeasible || sol.restored_kw <= 1e-9) return xi;
  auto agent_of = [&](UnitKind kind, int unit) {
    for (size_t a = 0; a < agents.size(); ++a) {
      if (agents[a].kind == kind && agents[a].unit == unit) return static_cast<int>(a);
    }
    return -1;
  };
  for (size_t k = 0; k < in.megs.size() && k < sol.meg_p_kw.size(); ++k) {
    const int a = agent_of(UnitKind::kMeg, in.megs[k].unit);
    if (a >= 0) xi[static_cast<size_t>(a)] += std::max(0.0, sol.meg_p_kw[k]);
  }
  for (size_t k = 0; k < in.messes.size() && k < sol.mess_discharge_kw.size(); ++k) {
    const int a = agent_of(UnitKind::kMess, in.messes[k].unit);
    if (a >= 0) xi[static_cast<size_t>(a)] += std::abs(sol.mess_discharge_kw[k]);
  }
  for (size_t id = 1; id < repaired_by.size() && id <= sol.line_p_kw.size(); ++id) {
    const int a = repaired_by[id];
    if (a >= 0 && a < static_cast<int>(agents.size())) {
      xi[static_cast<size_t>(a)] += std::abs(sol.line_p_kw[id - 1]);
    }
  }
  double sum = 0.0;
  for (double& v : xi) {
    v /= sol.restored_kw;
    sum += v;
  }
  // Flows through repaired lines overlap with injections, so the raw shares
  // can add up to more than one.
  if (sum > 1.0) {
    for (double& v : xi) v /= sum;
  }
  return xi;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  for (size_t i = 0; i < cfg_.fleet.megs.size(); ++i) agents_.push_back({UnitKind::kMeg, static_cast<int>(i)});
  for (size_t i = 0; i < cfg_.fleet.messes.size(); ++i) agents_.push_back({UnitKind::kMess, static_cast<int>(i)});
  for (size_t i = 0; i < cfg_.fleet.rcs.size(); ++i) agents_.push_back({UnitKind::kRc, static_cast<int>(i)});

  std::vector<int> nodes;
  for (const auto& s : cfg_.net.stations) mps_candidates_.push_back(s.transport_node);
  mps_candidates_ = sorted_unique(mps_candidates_);
  nodes = mps_candidates_;
  nodes.insert(nodes.end(), cfg_.transport.depots.begin(), cfg_.transport.depots.end());
  for (int id : damageable_lines(cfg_.net)) nodes.push_back(cfg_.transport.line_sites.at(id));
  obs_nodes_ = sorted_unique(nodes);

  // Normalisers: the largest nodal load and nodal PV anywhere in the data.
  std::vector<double> nominal(cfg_.net.buses.size(), 0.0), pv(cfg_.net.buses.size(), 0.0);
  for (const auto& l : cfg_.net.loads) nominal[static_cast<size_t>(l.bus - 1)] += l.p_kw;
  for (const auto& gen : cfg_.net.generators) {
    if (gen.is_pv()) pv[static_cast<size_t>(gen.bus - 1)] += gen.p_max_kw;
  }
  max_nodal_load_ = std::max(1e-9, *std::max_element(nominal.begin(), nominal.end()));
  const auto& prof = cfg_.profiles;
  for (int d = 0; d < prof.days(); ++d) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      std::vector<double> at(cfg_.net.buses.size(), 0.0);
      for (const auto& l : cfg_.net.loads) at[static_cast<size_t>(l.bus - 1)] += prof.load_p(d, h, l);
      max_nodal_load_ = std::max(max_nodal_load_, *std::max_element(at.begin(), at.end()));
    }
  }
  max_nodal_pv_ = std::max(1e-9, *std::max_element(pv.begin(), pv.end()));
  rt_scale_ = cfg_.outage.rt_max;
  rs_scale_ = cfg_.outage.rs_max;
  for (int id : damageable_lines(cfg_.net)) {
    rt_scale_ = std::max(rt_scale_, cfg_.net.line(id).repair_hours);
    rs_scale_ = std::max(rs_scale_, cfg_.net.line(id).repair_resources);
  }
  reset(0, 0, OutageScenario{});
}

int Environment::observation_width() const {
  return static_cast<int>(obs_nodes_.size()) + kFeatureCount;
}

std::vector<std::vector<double>> Environment::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int day = 0;
  if (cfg_.profiles.days() > 0) {
    day = std::uniform_int_distribution<int>(0, cfg_.profiles.days() - 1)(rng);
  }
  const std::uint64_t outage_seed = rng();
  return reset(seed, day, sample_outage(cfg_.net, cfg_.outage, outage_seed));
}

std::vector<std::vector<double>> Environment::reset(std::uint64_t seed, int day,
                                                    const OutageScenario& outage) {
  if (cfg_.profiles.days() > 0 && (day < 0 || day >= cfg_.profiles.days())) {
    throw std::out_of_range(fmt::format("day {} outside profile set of {} days", day,
                                        cfg_.profiles.days()));
  }
  hour_ = 0;
  day_ = day;
  outage_ = outage;
  outage_.seed = outage.seed == 0 ? seed : outage.seed;
  volumes_ = cfg_.profiles.road_volumes(day, cfg_.transport);
  routes_ = RouteTable(cfg_.transport, volumes_);

  megs_.clear();
  messes_.clear();
  rcs_.clear();
  for (size_t i = 0; i < cfg_.fleet.megs.size(); ++i) {
    megs_.push_back({cfg_.fleet.megs[i], {cfg_.fleet.meg_start[i], 0}});
  }
  for (size_t i = 0; i < cfg_.fleet.messes.size(); ++i) {
    const auto& s = cfg_.fleet.messes[i];
    messes_.push_back({s, {cfg_.fleet.mess_start[i], 0}, s.soc_init});
  }
  for (size_t i = 0; i < cfg_.fleet.rcs.size(); ++i) {
    const auto& s = cfg_.fleet.rcs[i];
    rcs_.push_back({s, {cfg_.fleet.rc_start[i], 0}, s.resources, {}});
  }

  damaged_.clear();
  std::vector<int> rc_nodes = cfg_.transport.depots;
  for (const auto& d : outage.damaged) {
    if (d.line < 1 || d.line > static_cast<int>(cfg_.net.lines.size()) ||
        cfg_.net.line(d.line).kind != LineKind::kDamageable) {
      throw ValidationError(fmt::format("outage damages line {}, which is not damageable", d.line));
    }
    if (d.repair_hours < 1 || d.repair_resources < 1) {
      throw ValidationError(fmt::format("line {} needs RT >= 1 and rs >= 1", d.line));
    }
    damaged_.push_back({d.line, d.repair_hours, d.repair_resources, 0, false, -1});
    rc_nodes.push_back(cfg_.transport.line_sites.at(d.line));
  }
  std::sort(damaged_.begin(), damaged_.end(),
            [](const DamagedLine& a, const DamagedLine& b) { return a.line < b.line; });
  rc_candidates_ = sorted_unique(rc_nodes);
  warm_y_.clear();
  warm_e_.clear();
  return observations();
}

const std::vector<int>& Environment::candidates(UnitKind kind) const {
  return kind == UnitKind::kRc ? rc_candidates_ : mps_candidates_;
}

Location Environment::location(int agent) const {
  const auto& info = agents_.at(static_cast<size_t>(agent));
  switch (info.kind) {
    case UnitKind::kMeg: return megs_[static_cast<size_t>(info.unit)].at;
    case UnitKind::kMess: return messes_[static_cast<size_t>(info.unit)].at;
    case UnitKind::kRc: return rcs_[static_cast<size_t>(info.unit)].at;
  }
  return {};
}

Location& Environment::location_ref(int agent) {
  const auto& info = agents_.at(static_cast<size_t>(agent));
  switch (info.kind) {
    case UnitKind::kMeg: return megs_[static_cast<size_t>(info.unit)].at;
    case UnitKind::kMess: return messes_[static_cast<size_t>(info.unit)].at;
    case UnitKind::kRc: break;
  }
  return rcs_[static_cast<size_t>(info.unit)].at;
}

bool Environment::in_transit(int agent) const { return location(agent).in_transit(); }

MoveSet Environment::moves(int agent) const {
  const Location at = location(agent);
  if (at.in_transit()) {
    MoveSet m;
    m.destination.fill(at.node);
    m.valid.fill(false);
    m.valid[0] = true;
    return m;
  }
  return available_moves(routes_, candidates(agents_[static_cast<size_t>(agent)].kind), at.node,
                         hour_);
}

int Environment::station_at(int node) const {
  for (const auto& s : cfg_.net.stations) {
    if (s.transport_node == node) return s.id;
  }
  return 0;
}

const DamagedLine* Environment::damage_at(int node) const {
  for (const auto& d : damaged_) {
    if (!d.repaired && cfg_.transport.line_sites.at(d.line) == node) return &d;
  }
  return nullptr;
}

DamagedLine* Environment::damage_at(int node) {
  return const_cast<DamagedLine*>(std::as_const(*this).damage_at(node));
}

std::vector<double> Environment::observe(int agent) const {
  const auto& info = agents_[static_cast<size_t>(agent)];
  const Location at = location(agent);
  const size_t k = obs_nodes_.size();
  std::vector<double> o(k + kFeatureCount, 0.0);
  auto f = [&](Feature i) -> double& { return o[k + i]; };
  f(kHour) = clamp01(static_cast<double>(hour_) / cfg_.horizon);
  if (info.kind == UnitKind::kMess) f(kSoc) = clamp01(messes_[static_cast<size_t>(info.unit)].soc);
  if (info.kind == UnitKind::kRc) {
    const auto& rc = rcs_[static_cast<size_t>(info.unit)];
    f(kCrewResources) = rc.spec.resources > 0 ? clamp01(double(rc.resources) / rc.spec.resources) : 0.0;
  }
  if (at.in_transit()) {
    f(kInTransit) = 1.0;
    return o;
  }
  const auto pos = std::lower_bound(obs_nodes_.begin(), obs_nodes_.end(), at.node);
  if (pos != obs_nodes_.end() && *pos == at.node) o[static_cast<size_t>(pos - obs_nodes_.begin())] = 1.0;

  const int h = hour_ % kHoursPerDay;
  const auto& roads = cfg_.transport.incident[static_cast<size_t>(at.node - 1)];
  if (!roads.empty()) {
    double sum = 0.0;
    for (int r : roads) {
      const double ratio = volumes_[static_cast<size_t>(r)][static_cast<size_t>(h)] /
                           cfg_.transport.roads[static_cast<size_t>(r)].capacity_vph;
      sum += std::min(ratio, 2.0) / 2.0;
    }
    f(kRoadLoad) = sum / static_cast<double>(roads.size());
  }

  if (info.kind == UnitKind::kRc) {
    if (const DamagedLine* d = damage_at(at.node)) {
      f(kLineStatus) = 1.0;
      f(kRepairTime) = clamp01(double(d->repair_hours - d->progress) / rt_scale_);
      f(kRepairResources) = clamp01(double(d->repair_resources) / rs_scale_);
    }
    return o;
  }
  const int station = station_at(at.node);
  if (station == 0) return o;
  const int bus = cfg_.net.station(station).bus;
  int incident = 0, out = 0;
  for (const auto& line : cfg_.net.lines) {
    if (line.from != bus && line.to != bus) continue;
    ++incident;
    for (const auto& d : damaged_) out += d.line == line.id && !d.repaired;
  }
  if (incident > 0) f(kLineStatus) = double(out) / incident;
  const int day = cfg_.profiles.days() > 0 ? day_ : 0;
  double load = 0.0, pv = 0.0;
  for (int id : cfg_.net.bus(bus).loads) load += cfg_.profiles.load_p(day, h, cfg_.net.load(id));
  for (int id : cfg_.net.bus(bus).generators) {
    const auto& g = cfg_.net.generator(id);
    if (g.is_pv()) pv += std::min(g.p_max_kw, cfg_.profiles.pv(day, h, g));
  }
  f(kNodalLoad) = clamp01(load / max_nodal_load_);
  f(kNodalPv) = clamp01(pv / max_nodal_pv_);
  return o;
}

std::vector<std::vector<double>> Environment::observations() const {
  std::vector<std::vector<double>> out;
  out.reserve(agents_.size());
  for (int a = 0; a < agent_count(); ++a) out.push_back(observe(a));
  return out;
}

StepResult Environment::step(const std::vector<AgentAction>& actions) {
  if (done()) throw std::logic_error("step() called on a finished episode; call reset()");
  if (static_cast<int>(actions.size()) != agent_count()) {
    throw std::invalid_argument(fmt::format("expected {} actions, got {}", agent_count(),
                                            actions.size()));
  }
  const int n = agent_count();
  StepResult res;
  res.hour = hour_;
  res.agents.resize(static_cast<size_t>(n));

  // (1) departures
  for (int a = 0; a < n; ++a) {
    auto& info = res.agents[static_cast<size_t>(a)];
    Location& loc = location_ref(a);
    if (loc.in_transit()) continue;
    info.acted = true;
    const AgentAction& act = actions[static_cast<size_t>(a)];
    if (act.hl != HlAction::kTransport) continue;
    const MoveSet ms = moves(a);
    if (act.route < 0 || act.route >= kRouteArity || !ms.valid[static_cast<size_t>(act.route)]) {
      info.invalid_route = true;
      continue;
    }
    const int dest = ms.destination[static_cast<size_t>(act.route)];
    if (dest == loc.node) continue;
    loc = {dest, std::max(1, routes_.duration(loc.node, dest, hour_))};
    info.departed = true;
  }
  // (2) transit clocks
  for (int a = 0; a < n; ++a) {
    Location& loc = location_ref(a);
    if (loc.in_transit()) --loc.hours_left;
  }
  // (3)-(4) power-side decisions and repairs
  const int day = cfg_.profiles.days() > 0 ? day_ : 0;
  const int h = hour_ % kHoursPerDay;
  StepInputs in;
  in.hour = hour_;
  for (const auto& l : cfg_.net.loads) {
    in.load_p_kw.push_back(cfg_.profiles.load_p(day, h, l));
    in.load_q_kvar.push_back(cfg_.profiles.load_q(day, h, l));
  }
  for (const auto& g : cfg_.net.generators) {
    in.pv_available_kw.push_back(g.is_pv() ? cfg_.profiles.pv(day, h, g) : g.p_max_kw);
  }
  std::vector<int> meg_inj(megs_.size(), -1), mess_inj(messes_.size(), -1);
  for (int a = 0; a < n; ++a) {
    auto& info = res.agents[static_cast<size_t>(a)];
    if (!info.acted || info.departed) continue;
    const Location loc = location(a);
    info.connected = true;
    const AgentAction& act = actions[static_cast<size_t>(a)];
    const bool power = act.hl == HlAction::kPower;
    const auto& agent = agents_[static_cast<size_t>(a)];
    const size_t u = static_cast<size_t>(agent.unit);
    if (agent.kind == UnitKind::kRc) {
      if (!power || act.repair == 0) continue;
      DamagedLine* d = damage_at(loc.node);
      if (d == nullptr) {
        info.repair_noop = true;
        continue;
      }
      info.repair_line = d->line;
      info.repair = rc_repair_step(rcs_[u], a, *d, true);
      continue;
    }
    info.station = station_at(loc.node);
    const int bus = cfg_.net.station(info.station).bus;
    if (agent.kind == UnitKind::kMeg) {
      const auto& spec = megs_[u].spec;
      const double p = power ? meg_power_from_action(spec, std::clamp(act.magnitude, 0.0, 1.0)) : 0.0;
      meg_inj[u] = static_cast<int>(in.megs.size());
      in.megs.push_back({agent.unit, bus, p, spec.q_min_kvar, spec.q_max_kvar});
    } else {
      const auto& m = messes_[u];
      MessPower req;
      if (power) req = mess_power_from_action(m.spec, m.soc, std::clamp(act.magnitude, -1.0, 1.0));
      mess_inj[u] = static_cast<int>(in.messes.size());
      in.messes.push_back({agent.unit, bus, req.discharge_kw, req.charge_kw});
    }
  }
  in.line_usable.assign(cfg_.net.lines.size(), 1);
  for (const auto& d : damaged_) {
    if (!d.repaired) in.line_usable[static_cast<size_t>(d.line - 1)] = 0;
  }
  in.warm_y = warm_y_;
  in.warm_e = warm_e_;

  // (5) restoration dispatch
  DispatchSolution sol = solve_restoration(cfg_.net, in, cfg_.mip, cfg_.restoration);
  const bool solved = sol.status != SolveStatus::kInfeasible;
  if (solved) {
    warm_y_ = sol.y;
    warm_e_ = sol.e;
  }

  // (6) executed powers drive the MESS state of charge
  for (int a = 0; a < n; ++a) {
    const auto& agent = agents_[static_cast<size_t>(a)];
    auto& info = res.agents[static_cast<size_t>(a)];
    const size_t u = static_cast<size_t>(agent.unit);
    if (agent.kind == UnitKind::kMeg && meg_inj[u] >= 0 && solved) {
      info.power_kw = sol.meg_p_kw[static_cast<size_t>(meg_inj[u])];
    } else if (agent.kind == UnitKind::kMess) {
      auto& m = messes_[u];
      MessPower done;
      if (mess_inj[u] >= 0 && solved) {
        done.discharge_kw = sol.mess_discharge_kw[static_cast<size_t>(mess_inj[u])];
        done.charge_kw = sol.mess_charge_kw[static_cast<size_t>(mess_inj[u])];
      }
      m.soc = std::clamp(mess_soc_step(m.spec, m.soc, done, info.connected), m.spec.soc_min,
                         m.spec.soc_max);
      info.power_kw = done.discharge_kw - done.charge_kw;
    }
  }

  // (7) reward and contributions
  for (const auto& l : cfg_.net.loads) {
    res.baseline_value += l.shed_cost * in.load_p_kw[static_cast<size_t>(l.id - 1)];
  }
  res.status = sol.status;
  if (solved) {
    res.restored_kw = sol.restored_kw;
    res.restored_value = sol.objective;
  }
  res.reward = res.baseline_value > 0.0 ? clamp01(res.restored_value / res.baseline_value) : 1.0;

  std::vector<int> repaired_by(cfg_.net.lines.size() + 1, -1);
  for (const auto& d : damaged_) {
    if (d.repaired) repaired_by[static_cast<size_t>(d.line)] = d.repaired_by;
  }
  res.xi = contribution(sol, in, agents_, repaired_by);
  res.dispatch = std::move(sol);

  // (8) next observations
  ++hour_;
  res.done = done();
  res.observations = observations();
  return res;
}

void Environment::write_trace_header(std::ostream& os) {
  os << "day,time,agent,unit,location,in_transit,hl,route,magnitude,repair,power,soc,lambda,xi,"
        "status\n";
}

void Environment::write_trace(std::ostream& os, const StepResult& r,
                              const std::vector<AgentAction>& actions) const {
  std::vector<int> per_kind(3, 0);
  for (int a = 0; a < agent_count(); ++a) {
    const auto& agent = agents_[static_cast<size_t>(a)];
    const auto& info = r.agents[static_cast<size_t>(a)];
    const auto& act = actions[static_cast<size_t>(a)];
    const Location loc = location(a);
    const std::string unit = fmt::format("{}{}", to_string(agent.kind), agent.unit + 1);
    const double soc = agent.kind == UnitKind::kMess ? messes_[static_cast<size_t>(agent.unit)].soc : 0.0;
    os << fmt::format("{},{},{},{},{},{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n",
                      cfg_.profiles.days() > 0 ? cfg_.profiles.day_ids()[static_cast<size_t>(day_)] : 0,
                      r.hour, a, unit, loc.node, loc.in_transit() ? 1 : 0,
                      info.acted ? (act.hl == HlAction::kPower ? "power" : "transport") : "travel",
                      act.route, act.magnitude, act.repair, info.power_kw, soc, r.reward,
                      r.xi[static_cast<size_t>(a)], to_string(r.status));
  }
}

}  // namespace gridmend
