// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gridmend/lp.hpp"

namespace gridmend::testing {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path data_dir() { return GRIDMEND_DATA_DIR; }
fs::path test_data_dir() { return GRIDMEND_TEST_DATA_DIR; }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("gridmend-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PowerNetwork random_network(std::mt19937_64& rng, const RandomNetOptions& opt) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const int nb = std::uniform_int_distribution<int>(opt.min_buses, opt.max_buses)(rng);

  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> used;
  for (int b = 2; b <= nb; ++b) {
    const int a = std::uniform_int_distribution<int>(1, b - 1)(rng);
    edges.emplace_back(a, b);
    used.insert({a, b});
  }
  const int max_pairs = nb * (nb - 1) / 2;
  const int target = std::min({opt.max_lines, max_pairs,
                               nb - 1 + std::uniform_int_distribution<int>(0, 3)(rng)});
  while (static_cast<int>(edges.size()) < target) {
    int a = std::uniform_int_distribution<int>(1, nb)(rng);
    int b = std::uniform_int_distribution<int>(1, nb)(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    edges.emplace_back(a, b);
  }
  std::shuffle(edges.begin(), edges.end(), rng);

  json doc = {{"schema_version", 1}, {"name", "random"}};
  json buses = json::array();
  for (int b = 1; b <= nb; ++b) buses.push_back({{"id", b}});
  json lines = json::array();
  for (size_t k = 0; k < edges.size(); ++k) {
    json l = {{"id", static_cast<int>(k + 1)},
              {"from", edges[k].first},
              {"to", edges[k].second},
              {"r", uni(0.001, 0.05)},
              {"x", uni(0.001, 0.05)},
              {"s_max_kva", uni(40.0, 400.0)}};
    const double kind = u(rng);
    if (kind < 0.35) {
      l["kind"] = "damageable";
      l["repair_hours"] = 1;
      l["repair_resources"] = 2;
    } else if (kind < 0.55) {
      l["kind"] = "tie";
    }
    lines.push_back(l);
  }
  json gens = json::array();
  gens.push_back({{"id", 1},
                  {"kind", "dg"},
                  {"bus", 1},
                  {"p_max_kw", uni(50.0, 300.0)},
                  {"q_min_kvar", -uni(10.0, 80.0)},
                  {"q_max_kvar", uni(10.0, 80.0)}});
  int extra_sources = 0;
  for (int b = 2; b <= nb; ++b) {
    if (u(rng) > 0.4) continue;
    const bool forming = extra_sources < opt.max_extra_sources && u(rng) < 0.5;
    if (forming) ++extra_sources;
    const double smax = uni(30.0, 150.0);
    gens.push_back({{"id", static_cast<int>(gens.size() + 1)},
                    {"kind", forming ? "pv_forming" : "pv_following"},
                    {"bus", b},
                    {"p_max_kw", smax * uni(0.6, 1.0)},
                    {"q_min_kvar", -0.3 * smax},
                    {"q_max_kvar", 0.3 * smax},
                    {"s_max_kva", smax}});
  }
  json loads = json::array();
  for (int b = 1; b <= nb; ++b) {
    if (u(rng) > 0.85) continue;
    const bool essential = u(rng) < 0.35;
    const double p = uni(5.0, 150.0);
    loads.push_back({{"id", static_cast<int>(loads.size() + 1)},
                     {"bus", b},
                     {"p_kw", p},
                     {"q_kvar", p * uni(0.0, 0.5)},
                     {"essential", essential},
                     {"shed_cost", essential ? 2.5 : 1.5}});
  }
  doc["buses"] = buses;
  doc["lines"] = lines;
  doc["generators"] = gens;
  doc["loads"] = loads;
  // Mark every bus that hosts a black-start generator.
  for (const auto& g : gens) {
    if (g["kind"] != "pv_following") doc["buses"][g["bus"].get<int>() - 1]["black_start"] = true;
  }
  return parse_network(doc, "random");
}

StepInputs random_inputs(std::mt19937_64& rng, const PowerNetwork& net, const RandomNetOptions& opt) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StepInputs in;
  const size_t nl = net.lines.size();
  in.line_usable.assign(nl, 1);
  for (const auto& l : net.lines) {
    if (l.kind == LineKind::kDamageable && u(rng) < 0.5) in.line_usable[l.id - 1] = 0;
  }
  for (const auto& d : net.loads) {
    in.load_p_kw.push_back(d.p_kw * (0.5 + u(rng)));
    in.load_q_kvar.push_back(d.q_kvar * (0.5 + u(rng)));
  }
  int sources = 0;
  for (const auto& g : net.generators) {
    in.pv_available_kw.push_back(g.is_pv() ? g.p_max_kw * u(rng) : g.p_max_kw);
    if (g.kind == GeneratorKind::kGridFormingPv) ++sources;
  }
  std::set<int> black;
  for (const auto& g : net.generators) {
    if (g.is_black_start()) black.insert(g.bus);
  }
  const int nb = static_cast<int>(net.buses.size());
  auto free_bus = [&]() {
    for (int tries = 0; tries < 20; ++tries) {
      const int b = std::uniform_int_distribution<int>(1, nb)(rng);
      if (!black.count(b)) return b;
    }
    return 0;
  };
  if (sources < opt.max_extra_sources && u(rng) < 0.4) {
    if (const int b = free_bus()) {
      in.megs.push_back({0, b, 150.0 * u(rng), -50.0, 75.0});
      black.insert(b);
      ++sources;
    }
  }
  if (sources < opt.max_extra_sources && u(rng) < 0.4) {
    if (const int b = free_bus()) {
      in.messes.push_back({0, b, 100.0 * u(rng), 0.0});
      black.insert(b);
      ++sources;
    }
  }
  return in;
}

EnumerationResult enumerate_mip(const MipProblem& p) {
  const LpProblem& lp = p.lp;
  std::vector<int> bits;
  std::vector<int> bit_of(static_cast<size_t>(lp.num_cols()), -1);
  for (int j = 0; j < lp.num_cols(); ++j) {
    if (p.integer[j]) {
      bit_of[j] = static_cast<int>(bits.size());
      bits.push_back(j);
    }
  }
  if (bits.size() > 24) throw std::invalid_argument("too many integer columns to enumerate");

  // Rows whose every nonzero sits on an integer column can be checked
  // before any LP is solved.
  struct Row {
    std::vector<std::pair<int, double>> terms;  // (bit, coef)
    double lo, hi;
    bool pure = true;
  };
  std::vector<Row> rows(static_cast<size_t>(lp.num_rows()));
  for (int i = 0; i < lp.num_rows(); ++i) {
    rows[i].lo = lp.row_lo[i];
    rows[i].hi = lp.row_hi[i];
  }
  for (int j = 0; j < lp.num_cols(); ++j) {
    for (const auto& [i, a] : lp.columns[j]) {
      if (bit_of[j] < 0) {
        rows[i].pure = false;
      } else {
        rows[i].terms.emplace_back(bit_of[j], a);
      }
    }
  }
  std::vector<Row> pure;
  for (auto& r : rows) {
    if (r.pure && !r.terms.empty()) pure.push_back(std::move(r));
  }

  EnumerationResult best;
  const unsigned long total = 1UL << bits.size();
  std::vector<int> val(bits.size());
  LpProblem fixed = lp;
  for (unsigned long mask = 0; mask < total; ++mask) {
    ++best.assignments;
    bool ok = true;
    for (size_t k = 0; k < bits.size() && ok; ++k) {
      val[k] = static_cast<int>((mask >> k) & 1UL);
      const int j = bits[k];
      ok = val[k] >= lp.col_lo[j] - 1e-9 && val[k] <= lp.col_hi[j] + 1e-9;
    }
    for (size_t r = 0; r < pure.size() && ok; ++r) {
      double act = 0.0;
      for (const auto& [k, a] : pure[r].terms) act += a * val[k];
      ok = act >= pure[r].lo - 1e-9 && act <= pure[r].hi + 1e-9;
    }
    if (!ok) continue;
    for (size_t k = 0; k < bits.size(); ++k) {
      fixed.col_lo[bits[k]] = fixed.col_hi[bits[k]] = val[k];
    }
    ++best.lps;
    const LpResult r = solve_lp(fixed);
    if (r.status != LpStatus::kOptimal) continue;
    if (!best.feasible || r.objective < best.objective) {
      best.feasible = true;
      best.objective = r.objective;
      best.x = r.x;
    }
  }
  return best;
}

PowerNetwork two_bus(double dg_kw, double load_kw, double load_kvar, double cost, double s_max_kva,
                     double r, double x) {
  json doc = {{"schema_version", 1},
              {"buses", {{{"id", 1}, {"black_start", true}}, {{"id", 2}}}},
              {"lines",
               {{{"id", 1}, {"from", 1}, {"to", 2}, {"r", r}, {"x", x}, {"s_max_kva", s_max_kva}}}},
              {"generators",
               {{{"id", 1},
                 {"kind", "dg"},
                 {"bus", 1},
                 {"p_max_kw", dg_kw},
                 {"q_min_kvar", -dg_kw},
                 {"q_max_kvar", dg_kw}}}},
              {"loads",
               {{{"id", 1},
                 {"bus", 2},
                 {"p_kw", load_kw},
                 {"q_kvar", load_kvar},
                 {"essential", true},
                 {"shed_cost", cost}}}}};
  return parse_network(doc, "two_bus");
}

EnvConfig toy_env_config() {
  EnvConfig cfg;
  cfg.net = load_network(data_dir() / "toy3" / "network.json");
  ScenarioFile sc = load_scenario(data_dir() / "toy3" / "scenario.json", cfg.net);
  cfg.transport = std::move(sc.transport);
  cfg.fleet = std::move(sc.fleet);
  cfg.outage = std::move(sc.outage);
  validate(cfg);
  return cfg;
}

}  // namespace gridmend::testing
