// SPDX-License-Identifier: Apache-2.0

#include "gridmend/restoration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "union_find.hpp"

namespace gridmend {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kIncumbent: return "incumbent";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

namespace {

// Octagon inscribed in the circle of radius s: four pairs of opposite
// half-planes with normals at odd multiples of pi/8.
struct OctagonFace {
  double a;
  double b;
};
constexpr double kOctagonScale = 0.92387953251128674;  // cos(pi/8)

std::array<OctagonFace, 4> octagon_faces() {
  std::array<OctagonFace, 4> f{};
  for (int k = 0; k < 4; ++k) {
    const double th = (2 * k + 1) * std::numbers::pi / 8.0;
    f[k] = {std::cos(th), std::sin(th)};
  }
  return f;
}

// (a P + b Q) within +-(s cos(pi/8)) * gate for each face.
void add_gated_octagon(LpProblem& lp, int p, int q, int gate, double s, const std::string& tag) {
  const auto faces = octagon_faces();
  const double rhs = s * kOctagonScale;
  for (int k = 0; k < 4; ++k) {
    const int up = lp.add_row(-kLpInf, 0.0, fmt::format("{}_oct{}u", tag, k));
    lp.set_coef(up, p, faces[k].a);
    lp.set_coef(up, q, faces[k].b);
    lp.set_coef(up, gate, -rhs);
    const int dn = lp.add_row(0.0, kLpInf, fmt::format("{}_oct{}d", tag, k));
    lp.set_coef(dn, p, faces[k].a);
    lp.set_coef(dn, q, faces[k].b);
    lp.set_coef(dn, gate, rhs);
  }
}

// col <= cap * gate  (or >= when cap is negative and `lower` is set)
void add_gate(LpProblem& lp, int col, int gate, double cap, bool lower, const std::string& name) {
  const int r = lower ? lp.add_row(0.0, kLpInf, name) : lp.add_row(-kLpInf, 0.0, name);
  lp.set_coef(r, col, 1.0);
  lp.set_coef(r, gate, -cap);
}

double value_or(const std::vector<double>& v, int id, double fallback) {
  return v.empty() ? fallback : v.at(static_cast<size_t>(id - 1));
}

}  // namespace

RestorationProblem build_problem(const PowerNetwork& net, const StepInputs& in,
                                 const RestorationOptions& opt) {
  RestorationProblem rp;
  rp.inputs = in;
  rp.kw_per_pu = net.kw_per_pu();
  const double base = rp.kw_per_pu;
  const int nb = static_cast<int>(net.buses.size());
  const double nbd = static_cast<double>(nb);
  const double v_lo2 = net.v_min * net.v_min;
  const double v_hi2 = net.v_max * net.v_max;
  LpProblem& lp = rp.mip.lp;

  auto check_size = [](const auto& v, size_t n, const char* what) {
    if (!v.empty() && v.size() != n) throw std::invalid_argument(fmt::format("{} has wrong size", what));
  };
  check_size(in.load_p_kw, net.loads.size(), "load_p_kw");
  check_size(in.load_q_kvar, net.loads.size(), "load_q_kvar");
  check_size(in.pv_available_kw, net.generators.size(), "pv_available_kw");
  check_size(in.line_usable, net.lines.size(), "line_usable");

  rp.black_start.assign(static_cast<size_t>(nb), 0);
  for (const auto& g : net.generators) {
    if (g.is_black_start()) rp.black_start[g.bus - 1] = 1;
  }
  for (const auto& m : in.megs) rp.black_start.at(static_cast<size_t>(m.bus - 1)) = 1;
  for (const auto& m : in.messes) rp.black_start.at(static_cast<size_t>(m.bus - 1)) = 1;

  // Bus variables.
  rp.bus_v.resize(static_cast<size_t>(nb));
  rp.bus_e.resize(static_cast<size_t>(nb));
  rp.bus_root.assign(static_cast<size_t>(nb), -1);
  rp.bus_fs.assign(static_cast<size_t>(nb), -1);
  for (int b = 1; b <= nb; ++b) {
    rp.bus_e[b - 1] = lp.add_col(0.0, 0.0, 1.0, fmt::format("e_{}", b));
    rp.bus_v[b - 1] = lp.add_col(0.0, 0.0, v_hi2, fmt::format("v_{}", b));
    if (rp.black_start[b - 1]) {
      rp.bus_root[b - 1] = lp.add_col(0.0, 0.0, 1.0, fmt::format("root_{}", b));
      rp.bus_fs[b - 1] = lp.add_col(0.0, 0.0, nbd, fmt::format("fs_{}", b));
    }
  }

  // Loads. Reactive demand tracks active demand at the baseline ratio.
  double min_cost = kLpInf;
  for (const auto& d : net.loads) {
    const double p = std::max(0.0, value_or(in.load_p_kw, d.id, d.p_kw)) / base;
    const double q = value_or(in.load_q_kvar, d.id, d.q_kvar) / base;
    rp.load_p.push_back(lp.add_col(-d.shed_cost, 0.0, p, fmt::format("pd_{}", d.id)));
    rp.load_q_ratio.push_back(p > 0.0 ? q / p : 0.0);
    rp.load_cost.push_back(d.shed_cost);
    min_cost = std::min(min_cost, d.shed_cost);
  }
  if (!std::isfinite(min_cost)) min_cost = 1.0;

  // Generators.
  for (const auto& g : net.generators) {
    const double pmax = (g.is_pv() ? std::min(g.p_max_kw, std::max(0.0, value_or(in.pv_available_kw, g.id, g.p_max_kw)))
                                   : g.p_max_kw) / base;
    const double qlo = g.q_min_kvar / base;
    const double qhi = g.q_max_kvar / base;
    const int cp = lp.add_col(0.0, 0.0, pmax, fmt::format("pg_{}", g.id));
    const int cq = lp.add_col(0.0, std::min(qlo, 0.0), std::max(qhi, 0.0), fmt::format("qg_{}", g.id));
    rp.gen_p.push_back(cp);
    rp.gen_q.push_back(cq);
  }

  // MPS injections.
  for (size_t k = 0; k < in.megs.size(); ++k) {
    const auto& m = in.megs[k];
    rp.meg_p.push_back(lp.add_col(0.0, 0.0, std::max(0.0, m.p_request_kw) / base, fmt::format("peg_{}", k)));
    rp.meg_q.push_back(lp.add_col(0.0, std::min(0.0, m.q_min_kvar / base),
                                  std::max(0.0, m.q_max_kvar / base), fmt::format("qeg_{}", k)));
  }
  const double bonus = opt.charge_bonus * min_cost;
  for (size_t k = 0; k < in.messes.size(); ++k) {
    const auto& m = in.messes[k];
    rp.mess_d.push_back(lp.add_col(0.0, 0.0, std::max(0.0, m.discharge_request_kw) / base,
                                   fmt::format("pesd_{}", k)));
    rp.mess_c.push_back(lp.add_col(-bonus, 0.0, std::max(0.0, m.charge_request_kw) / base,
                                   fmt::format("pesc_{}", k)));
  }

  // Lines.
  for (const auto& l : net.lines) {
    const double s = l.s_max_kva / base;
    const bool usable = in.line_usable.empty() || in.line_usable[l.id - 1];
    rp.line_p.push_back(lp.add_col(0.0, -s, s, fmt::format("pl_{}", l.id)));
    rp.line_q.push_back(lp.add_col(0.0, -s, s, fmt::format("ql_{}", l.id)));
    rp.line_f.push_back(lp.add_col(0.0, -nbd, nbd, fmt::format("fl_{}", l.id)));
    rp.line_y.push_back(lp.add_col(0.0, 0.0, usable ? 1.0 : 0.0, fmt::format("y_{}", l.id)));
    rp.line_ends.emplace_back(l.from, l.to);
  }

  auto& integer = rp.mip.integer;
  integer.assign(static_cast<size_t>(lp.num_cols()), false);
  for (int c : rp.bus_e) integer[c] = true;
  for (int c : rp.bus_root) {
    if (c >= 0) integer[c] = true;
  }
  for (int c : rp.line_y) integer[c] = true;

  // Nodal balances, real network and virtual network.
  std::vector<int> bal_p(static_cast<size_t>(nb)), bal_q(static_cast<size_t>(nb)),
      bal_f(static_cast<size_t>(nb));
  for (int b = 1; b <= nb; ++b) {
    bal_p[b - 1] = lp.add_row(0.0, 0.0, fmt::format("balp_{}", b));
    bal_q[b - 1] = lp.add_row(0.0, 0.0, fmt::format("balq_{}", b));
    bal_f[b - 1] = lp.add_row(0.0, 0.0, fmt::format("balf_{}", b));
    lp.set_coef(bal_f[b - 1], rp.bus_e[b - 1], -1.0);
    if (rp.bus_fs[b - 1] >= 0) lp.set_coef(bal_f[b - 1], rp.bus_fs[b - 1], 1.0);
  }
  for (size_t k = 0; k < net.loads.size(); ++k) {
    const auto& d = net.loads[k];
    lp.set_coef(bal_p[d.bus - 1], rp.load_p[k], -1.0);
    lp.set_coef(bal_q[d.bus - 1], rp.load_p[k], -rp.load_q_ratio[k]);
    add_gate(lp, rp.load_p[k], rp.bus_e[d.bus - 1], lp.col_hi[rp.load_p[k]], false,
             fmt::format("pd_gate_{}", d.id));
  }
  for (size_t k = 0; k < net.generators.size(); ++k) {
    const auto& g = net.generators[k];
    const int e = rp.bus_e[g.bus - 1];
    lp.set_coef(bal_p[g.bus - 1], rp.gen_p[k], 1.0);
    lp.set_coef(bal_q[g.bus - 1], rp.gen_q[k], 1.0);
    const std::string tag = fmt::format("g{}", g.id);
    add_gate(lp, rp.gen_p[k], e, lp.col_hi[rp.gen_p[k]], false, tag + "_pgate");
    if (g.is_pv()) {
      add_gated_octagon(lp, rp.gen_p[k], rp.gen_q[k], e, g.s_max_kva / base, tag);
    } else {
      add_gate(lp, rp.gen_q[k], e, lp.col_hi[rp.gen_q[k]], false, tag + "_qhi");
      add_gate(lp, rp.gen_q[k], e, lp.col_lo[rp.gen_q[k]], true, tag + "_qlo");
    }
  }
  for (size_t k = 0; k < in.megs.size(); ++k) {
    const int b = in.megs[k].bus;
    const int e = rp.bus_e[b - 1];
    lp.set_coef(bal_p[b - 1], rp.meg_p[k], 1.0);
    lp.set_coef(bal_q[b - 1], rp.meg_q[k], 1.0);
    const std::string tag = fmt::format("eg{}", k);
    add_gate(lp, rp.meg_p[k], e, lp.col_hi[rp.meg_p[k]], false, tag + "_pgate");
    add_gate(lp, rp.meg_q[k], e, lp.col_hi[rp.meg_q[k]], false, tag + "_qhi");
    add_gate(lp, rp.meg_q[k], e, lp.col_lo[rp.meg_q[k]], true, tag + "_qlo");
  }
  for (size_t k = 0; k < in.messes.size(); ++k) {
    const int b = in.messes[k].bus;
    const int e = rp.bus_e[b - 1];
    lp.set_coef(bal_p[b - 1], rp.mess_d[k], 1.0);
    lp.set_coef(bal_p[b - 1], rp.mess_c[k], -1.0);
    const std::string tag = fmt::format("es{}", k);
    add_gate(lp, rp.mess_d[k], e, lp.col_hi[rp.mess_d[k]], false, tag + "_dgate");
    add_gate(lp, rp.mess_c[k], e, lp.col_hi[rp.mess_c[k]], false, tag + "_cgate");
  }

  const int count_row = lp.add_row(0.0, 0.0, "radial_count");
  for (int b = 1; b <= nb; ++b) {
    const int e = rp.bus_e[b - 1];
    const int v = rp.bus_v[b - 1];
    lp.set_coef(count_row, e, -1.0);
    add_gate(lp, v, e, v_lo2, true, fmt::format("vlo_{}", b));
    add_gate(lp, v, e, v_hi2, false, fmt::format("vhi_{}", b));
    if (rp.bus_root[b - 1] >= 0) {
      lp.set_coef(count_row, rp.bus_root[b - 1], 1.0);
      add_gate(lp, rp.bus_root[b - 1], e, 1.0, false, fmt::format("root_gate_{}", b));
      add_gate(lp, rp.bus_fs[b - 1], rp.bus_root[b - 1], nbd, false, fmt::format("fs_gate_{}", b));
    }
  }

  for (size_t k = 0; k < net.lines.size(); ++k) {
    const auto& l = net.lines[k];
    const int p = rp.line_p[k], q = rp.line_q[k], f = rp.line_f[k], y = rp.line_y[k];
    const int from = l.from - 1, to = l.to - 1;
    lp.set_coef(count_row, y, 1.0);
    lp.set_coef(bal_p[from], p, -1.0);
    lp.set_coef(bal_p[to], p, 1.0);
    lp.set_coef(bal_q[from], q, -1.0);
    lp.set_coef(bal_q[to], q, 1.0);
    lp.set_coef(bal_f[from], f, -1.0);
    lp.set_coef(bal_f[to], f, 1.0);

    const std::string tag = fmt::format("l{}", l.id);
    add_gated_octagon(lp, p, q, y, l.s_max_kva / base, tag);
    add_gate(lp, f, y, nbd, false, tag + "_fhi");
    add_gate(lp, f, y, -nbd, true, tag + "_flo");
    add_gate(lp, y, rp.bus_e[from], 1.0, false, tag + "_efrom");
    add_gate(lp, y, rp.bus_e[to], 1.0, false, tag + "_eto");

    // v_from - v_to - 2(rP + xQ) within +-M(1 - y). With y = 0 both flows
    // vanish and each squared voltage lies in [0, v_hi2].
    const double big_m = v_hi2 + 2.0 * (l.r_pu + l.x_pu) * l.s_max_kva / base;
    const int up = lp.add_row(-kLpInf, big_m, tag + "_vdrop_u");
    const int dn = lp.add_row(-big_m, kLpInf, tag + "_vdrop_d");
    for (int r : {up, dn}) {
      lp.set_coef(r, rp.bus_v[from], 1.0);
      lp.set_coef(r, rp.bus_v[to], -1.0);
      lp.set_coef(r, p, -2.0 * l.r_pu);
      lp.set_coef(r, q, -2.0 * l.x_pu);
    }
    lp.set_coef(up, y, big_m);
    lp.set_coef(dn, y, -big_m);
  }
  return rp;
}

DispatchSolution decode(const RestorationProblem& p, const std::vector<double>& x) {
  DispatchSolution s;
  const double base = p.kw_per_pu;
  auto val = [&](int c) { return c >= 0 ? x[c] : 0.0; };
  auto bin = [&](int c) { return c >= 0 ? static_cast<int>(std::lround(x[c])) : 0; };
  for (size_t k = 0; k < p.load_p.size(); ++k) {
    const double pkw = val(p.load_p[k]) * base;
    s.load_p_kw.push_back(pkw);
    s.load_q_kvar.push_back(pkw * p.load_q_ratio[k]);
    s.objective += p.load_cost[k] * pkw;
    s.restored_kw += pkw;
  }
  for (size_t k = 0; k < p.gen_p.size(); ++k) {
    s.gen_p_kw.push_back(val(p.gen_p[k]) * base);
    s.gen_q_kvar.push_back(val(p.gen_q[k]) * base);
  }
  for (size_t k = 0; k < p.line_p.size(); ++k) {
    s.line_p_kw.push_back(val(p.line_p[k]) * base);
    s.line_q_kvar.push_back(val(p.line_q[k]) * base);
    s.line_virtual.push_back(val(p.line_f[k]));
    s.y.push_back(bin(p.line_y[k]));
  }
  for (size_t b = 0; b < p.bus_e.size(); ++b) {
    s.bus_v2.push_back(val(p.bus_v[b]));
    s.e.push_back(bin(p.bus_e[b]));
    s.root.push_back(bin(p.bus_root[b]));
    s.source_virtual.push_back(val(p.bus_fs[b]));
  }
  for (size_t k = 0; k < p.meg_p.size(); ++k) {
    s.meg_p_kw.push_back(val(p.meg_p[k]) * base);
    s.meg_q_kvar.push_back(val(p.meg_q[k]) * base);
  }
  for (size_t k = 0; k < p.mess_d.size(); ++k) {
    s.mess_discharge_kw.push_back(val(p.mess_d[k]) * base);
    s.mess_charge_kw.push_back(val(p.mess_c[k]) * base);
  }
  s.black_start = p.black_start;
  return s;
}

namespace {

// Completes a (y, e) assignment with one root per energized component.
// Returns false when some component has no black-start bus.
bool hint_from_assignment(const RestorationProblem& p, const std::vector<int>& y,
                          const std::vector<int>& e, MipHint& hint) {
  const size_t nb = p.bus_e.size();
  detail::UnionFind uf(nb);
  for (size_t k = 0; k < p.line_ends.size(); ++k) {
    if (!y[k]) continue;
    const auto [from, to] = p.line_ends[k];
    if (!e[from - 1] || !e[to - 1]) return false;
    if (!uf.unite(static_cast<size_t>(from - 1), static_cast<size_t>(to - 1))) return false;
  }
  std::vector<int> root_of(nb, -1);
  for (size_t b = 0; b < nb; ++b) {
    if (e[b] && p.bus_root[b] >= 0 && root_of[uf.find(b)] < 0) root_of[uf.find(b)] = static_cast<int>(b);
  }
  for (size_t b = 0; b < nb; ++b) {
    if (e[b] && root_of[uf.find(b)] < 0) return false;
  }
  for (size_t k = 0; k < p.line_y.size(); ++k) hint.fixed.emplace_back(p.line_y[k], y[k]);
  for (size_t b = 0; b < nb; ++b) {
    hint.fixed.emplace_back(p.bus_e[b], e[b]);
    if (p.bus_root[b] >= 0) {
      hint.fixed.emplace_back(p.bus_root[b], root_of[uf.find(b)] == static_cast<int>(b) ? 1.0 : 0.0);
    }
  }
  return true;
}

// Spanning forest over usable lines taken in the given order; every tree
// holding a black-start bus is energized whole, the rest stay dark. Loads
// can always be shed, so the assignment is feasible.
MipHint forest_hint(const RestorationProblem& p, const std::vector<size_t>& order) {
  const size_t nb = p.bus_e.size();
  const auto& usable = p.inputs.line_usable;
  detail::UnionFind uf(nb);
  std::vector<int> y(p.line_y.size(), 0);
  for (size_t k : order) {
    if (!usable.empty() && !usable[k]) continue;
    const auto [from, to] = p.line_ends[k];
    if (uf.unite(static_cast<size_t>(from - 1), static_cast<size_t>(to - 1))) y[k] = 1;
  }
  std::vector<char> live(nb, 0);
  for (size_t b = 0; b < nb; ++b) {
    if (p.black_start[b]) live[uf.find(b)] = 1;
  }
  std::vector<int> e(nb, 0);
  for (size_t b = 0; b < nb; ++b) e[b] = live[uf.find(b)];
  for (size_t k = 0; k < y.size(); ++k) {
    const auto [from, to] = p.line_ends[k];
    y[k] = y[k] && e[from - 1] && e[to - 1];
  }
  MipHint h;
  hint_from_assignment(p, y, e, h);
  return h;
}

}  // namespace

DispatchSolution solve(const RestorationProblem& p, const MipOptions& opt) {
  std::vector<MipHint> hints;
  const size_t nl = p.line_y.size();
  const size_t nb = p.bus_e.size();
  const auto& in = p.inputs;
  if (in.warm_y.size() == nl && in.warm_e.size() == nb) {
    MipHint h;
    if (hint_from_assignment(p, in.warm_y, in.warm_e, h)) hints.push_back(std::move(h));
  }
  MipHint dark;
  hint_from_assignment(p, std::vector<int>(nl, 0), std::vector<int>(nb, 0), dark);
  hints.push_back(std::move(dark));
  std::vector<size_t> order(nl);
  for (size_t k = 0; k < nl; ++k) order[k] = k;
  hints.push_back(forest_hint(p, order));

  MipOptions o = opt;
  if (!o.root_heuristic) {
    o.root_heuristic = [&p, nl](const std::vector<double>& x) -> std::optional<MipHint> {
      std::vector<size_t> by_y(nl);
      for (size_t k = 0; k < nl; ++k) by_y[k] = k;
      std::stable_sort(by_y.begin(), by_y.end(), [&](size_t a, size_t b) {
        return x[p.line_y[a]] > x[p.line_y[b]];
      });
      return forest_hint(p, by_y);
    };
  }
  const MipResult r = solve_mip(p.mip, o, hints);
  DispatchSolution s;
  if (r.status != MipStatus::kInfeasible) s = decode(p, r.x);
  else s.black_start = p.black_start;
  s.status = r.status == MipStatus::kOptimal     ? SolveStatus::kOptimal
             : r.status == MipStatus::kIncumbent ? SolveStatus::kIncumbent
                                                 : SolveStatus::kInfeasible;
  s.nodes = r.nodes;
  s.lp_iterations = r.lp_iterations;
  return s;
}

DispatchSolution solve_restoration(const PowerNetwork& net, const StepInputs& in,
                                   const MipOptions& opt, const RestorationOptions& ro) {
  return solve(build_problem(net, in, ro), opt);
}

RadialityReport check_radiality(const DispatchSolution& sol, const PowerNetwork& net) {
  RadialityReport rep;
  const size_t nb = net.buses.size();
  if (sol.e.size() != nb || sol.y.size() != net.lines.size()) {
    rep.kind = RadialityReport::Kind::kCountMismatch;
    rep.detail = "solution does not match the network shape";
    return rep;
  }
  for (int v : sol.e) {
    if (v != 0 && v != 1) {
      rep.kind = RadialityReport::Kind::kFractional;
      rep.detail = "bus energization is not binary";
      return rep;
    }
  }
  detail::UnionFind uf(nb);
  for (size_t k = 0; k < net.lines.size(); ++k) {
    if (!sol.y[k]) continue;
    const auto& l = net.lines[k];
    ++rep.energized_lines;
    if (!sol.e[l.from - 1] || !sol.e[l.to - 1]) {
      rep.kind = RadialityReport::Kind::kDarkConnection;
      rep.detail = fmt::format("line {} ({}-{}) is energized next to a dark bus", l.id, l.from, l.to);
      return rep;
    }
    if (!uf.unite(static_cast<size_t>(l.from - 1), static_cast<size_t>(l.to - 1))) {
      rep.kind = RadialityReport::Kind::kCycle;
      rep.detail = fmt::format("line {} ({}-{}) closes a cycle", l.id, l.from, l.to);
      return rep;
    }
  }
  std::vector<char> has_source(nb, 0), seen(nb, 0);
  for (size_t b = 0; b < nb; ++b) {
    if (!sol.e[b]) continue;
    ++rep.energized_buses;
    if (b < sol.black_start.size() && sol.black_start[b]) has_source[uf.find(b)] = 1;
  }
  for (size_t b = 0; b < nb; ++b) {
    if (!sol.e[b]) continue;
    const size_t c = uf.find(b);
    if (!seen[c]) {
      seen[c] = 1;
      ++rep.islands;
    }
    if (!has_source[c]) {
      rep.kind = RadialityReport::Kind::kOrphanIsland;
      rep.detail = fmt::format("bus {} is energized without a black-start source", b + 1);
      return rep;
    }
  }
  const int dark = static_cast<int>(nb) - rep.energized_buses;
  const int expected = static_cast<int>(nb) - (dark + rep.islands);
  int roots = 0;
  for (int r : sol.root) roots += r;
  if (rep.energized_lines != expected || (!sol.root.empty() && roots != rep.islands)) {
    rep.kind = RadialityReport::Kind::kCountMismatch;
    rep.detail = fmt::format("{} energized lines, expected {} ({} roots for {} islands)",
                             rep.energized_lines, expected, roots, rep.islands);
  }
  return rep;
}

void write_lp(std::ostream& os, const RestorationProblem& p, const std::string& title) {
  write_lp_format(os, p.mip.lp, p.mip.integer, title);
}

}  // namespace gridmend
