// SPDX-License-Identifier: Apache-2.0

#include "gridmend/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gridmend/error.hpp"

namespace gridmend {

using nlohmann::json;

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kAll: return "all";
    case SplitTag::kTrain: return "train";
    case SplitTag::kTest: return "test";
  }
  return "?";
}

SplitTag parse_split_tag(const std::string& s) {
  if (s == "all") return SplitTag::kAll;
  if (s == "train") return SplitTag::kTrain;
  if (s == "test") return SplitTag::kTest;
  throw ConfigError("unknown split '" + s + "' (expected all, train or test)");
}

double ProfileSet::value(const std::string& key, int day, int hour) const {
  const auto& s = series_.at(key);
  return s.at(static_cast<size_t>(day) * kHoursPerDay + static_cast<size_t>(hour % kHoursPerDay));
}

void ProfileSet::set(const std::string& key, int day, int hour, double v) {
  auto& s = series_[key];
  if (s.empty()) s.assign(static_cast<size_t>(days()) * kHoursPerDay, std::nan(""));
  s.at(static_cast<size_t>(day) * kHoursPerDay + static_cast<size_t>(hour)) = v;
}

ProfileSet ProfileSet::select(const std::vector<int>& idx, SplitTag tag) const {
  std::vector<int> ids;
  for (int d : idx) ids.push_back(day_ids_.at(static_cast<size_t>(d)));
  ProfileSet out(ids);
  out.split_ = tag;
  for (const auto& [key, s] : series_) {
    auto& dst = out.series_[key];
    for (int d : idx) {
      const auto first = s.begin() + static_cast<long>(d) * kHoursPerDay;
      dst.insert(dst.end(), first, first + kHoursPerDay);
    }
  }
  return out;
}

double ProfileSet::load_p(int day, int hour, const Load& d) const {
  const std::string key = fmt::format("load_p:{}", d.id);
  return days() > 0 && has(key) ? value(key, day, hour) : d.p_kw;
}

double ProfileSet::load_q(int day, int hour, const Load& d) const {
  const std::string key = fmt::format("load_q:{}", d.id);
  if (days() > 0 && has(key)) return value(key, day, hour);
  // Without an explicit Q series, keep the nominal power factor.
  if (d.p_kw > 0.0) return load_p(day, hour, d) * d.q_kvar / d.p_kw;
  return d.q_kvar;
}

double ProfileSet::pv(int day, int hour, const Generator& g) const {
  const std::string key = fmt::format("pv:{}", g.id);
  return days() > 0 && has(key) ? value(key, day, hour) : g.p_max_kw;
}

std::vector<HourlyProfile> ProfileSet::road_volumes(int day, const TransportGraph& g) const {
  std::vector<HourlyProfile> out(g.roads.size());
  for (size_t r = 0; r < g.roads.size(); ++r) {
    const std::string key = fmt::format("vol:{}", g.roads[r].id);
    if (days() > 0 && has(key)) {
      for (int h = 0; h < kHoursPerDay; ++h) out[r][h] = value(key, day, h);
    } else {
      out[r] = g.roads[r].volume_vph;
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

bool known_prefix(const std::string& key) {
  for (const char* p : {"load_p:", "load_q:", "pv:", "vol:"}) {
    if (key.rfind(p, 0) == 0) return true;
  }
  return false;
}

}  // namespace

ProfileSet read_profiles_csv(std::istream& in, const std::string& source) {
  struct Row {
    int day;
    int hour;
    std::string id;
    double value;
  };
  std::vector<Row> rows;
  std::set<int> day_set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = split_csv(t);
    if (lineno == 1 && trim(f[0]) == "day") continue;
    const std::string where = fmt::format("{}:{}", source, lineno);
    if (f.size() != 4) throw ParseError(where, "expected 4 fields day,hour,id,value");
    Row r;
    try {
      size_t pos = 0;
      r.day = std::stoi(trim(f[0]), &pos);
      r.hour = std::stoi(trim(f[1]), &pos);
      r.value = std::stod(trim(f[3]), &pos);
    } catch (const std::exception&) {
      throw ParseError(where, "non-numeric day, hour or value");
    }
    r.id = trim(f[2]);
    if (r.hour < 0 || r.hour >= kHoursPerDay) throw ParseError(where, "hour must lie in 0..23");
    if (!known_prefix(r.id)) throw ParseError(where, "unknown profile id '" + r.id + "'");
    if (!std::isfinite(r.value) || r.value < 0.0) {
      throw ValidationError(fmt::format("{}: profile value for {} must be finite and non-negative",
                                        where, r.id));
    }
    day_set.insert(r.day);
    rows.push_back(std::move(r));
  }
  std::vector<int> days(day_set.begin(), day_set.end());
  ProfileSet p(days);
  std::map<int, int> index;
  for (size_t i = 0; i < days.size(); ++i) index[days[i]] = static_cast<int>(i);
  for (const auto& r : rows) p.set(r.id, index[r.day], r.hour, r.value);

  std::vector<std::string> gaps;
  for (const auto& [key, s] : p.series()) {
    for (size_t k = 0; k < s.size(); ++k) {
      if (std::isnan(s[k])) {
        gaps.push_back(fmt::format("{} day {} hour {}", key, days[k / kHoursPerDay], k % kHoursPerDay));
      }
    }
  }
  if (!gaps.empty()) {
    std::string msg = fmt::format("{}: {} missing hour(s): ", source, gaps.size());
    for (size_t i = 0; i < gaps.size() && i < 10; ++i) msg += (i ? "; " : "") + gaps[i];
    if (gaps.size() > 10) msg += "; ...";
    throw ValidationError(msg);
  }
  return p;
}

ProfileSet apply_split(const ProfileSet& all, const SplitSpec& split) {
  if (split.test_days < 0 || split.test_days > all.days()) {
    throw ConfigError(fmt::format("test_days {} outside 0..{}", split.test_days, all.days()));
  }
  const int n_train = all.days() - split.test_days;
  std::vector<int> idx;
  if (split.tag == SplitTag::kAll) {
    for (int d = 0; d < all.days(); ++d) idx.push_back(d);
  } else if (split.tag == SplitTag::kTrain) {
    for (int d = 0; d < n_train; ++d) idx.push_back(d);
  } else {
    for (int d = n_train; d < all.days(); ++d) idx.push_back(d);
  }
  return all.select(idx, split.tag);
}

ProfileSet load_profiles(const std::filesystem::path& path, const SplitSpec& split) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file " + path.string());
  return apply_split(read_profiles_csv(in, path.string()), split);
}

void write_profiles_csv(std::ostream& out, const ProfileSet& p) {
  out << "day,hour,id,value\n";
  for (int d = 0; d < p.days(); ++d) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      for (const auto& [key, s] : p.series()) {
        out << p.day_ids()[d] << ',' << h << ',' << key << ','
            << fmt::format("{:.6g}", s[static_cast<size_t>(d) * kHoursPerDay + h]) << '\n';
      }
    }
  }
}

void validate_profiles(const ProfileSet& p, const PowerNetwork& net, const TransportGraph* g) {
  for (const auto& [key, s] : p.series()) {
    const auto colon = key.find(':');
    const std::string kind = key.substr(0, colon);
    int id = 0;
    try {
      id = std::stoi(key.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("profile id '" + key + "' has no numeric element id");
    }
    bool ok = false;
    if (kind == "load_p" || kind == "load_q") {
      ok = id >= 1 && id <= static_cast<int>(net.loads.size());
    } else if (kind == "pv") {
      ok = id >= 1 && id <= static_cast<int>(net.generators.size()) && net.generator(id).is_pv();
    } else if (kind == "vol") {
      ok = g != nullptr && id >= 1 && id <= static_cast<int>(g->roads.size());
    }
    if (!ok) throw ValidationError("profile id '" + key + "' does not name a network element");
    for (double v : s) {
      if (v < 0.0) throw ValidationError("profile '" + key + "' has a negative value");
    }
  }
}

namespace {

double gauss_bump(double h, double centre, double width) {
  const double z = (h - centre) / width;
  return std::exp(-0.5 * z * z);
}

// Residential shape: overnight base, morning shoulder, evening peak; max 1.
double load_shape(int hour) {
  static const std::array<double, kHoursPerDay> shape = [] {
    std::array<double, kHoursPerDay> s{};
    double peak = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) {
      s[h] = 0.45 + 0.35 * gauss_bump(h, 8.0, 1.5) + 0.55 * gauss_bump(h, 19.0, 2.0);
      peak = std::max(peak, s[h]);
    }
    for (double& v : s) v /= peak;
    return s;
  }();
  return shape[hour];
}

double pv_shape(int hour) {
  const double x = (hour + 0.5 - 6.0) / 12.0;
  return x <= 0.0 || x >= 1.0 ? 0.0 : std::sin(std::numbers::pi * x);
}

}  // namespace

ProfileSet synthesize_profiles(const PowerNetwork& net, const TransportGraph* g,
                               const SynthOptions& opt) {
  if (opt.days < 1) throw ConfigError("synthetic profiles need at least one day");
  std::vector<int> ids(static_cast<size_t>(opt.days));
  for (int d = 0; d < opt.days; ++d) ids[d] = d;
  ProfileSet p(ids);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> cloud(0.6, 1.0);
  std::uniform_real_distribution<double> traffic(0.9, 1.1);
  for (int d = 0; d < opt.days; ++d) {
    const double day_level = 1.0 + opt.noise * noise(rng);
    for (const auto& l : net.loads) {
      for (int h = 0; h < kHoursPerDay; ++h) {
        const double f = std::max(0.0, load_shape(h) * day_level * (1.0 + opt.noise * noise(rng)));
        p.set(fmt::format("load_p:{}", l.id), d, h, l.p_kw * opt.load_scale * f);
        p.set(fmt::format("load_q:{}", l.id), d, h, l.q_kvar * opt.load_scale * f);
      }
    }
    for (const auto& gen : net.generators) {
      if (!gen.is_pv()) continue;
      const double c = cloud(rng);
      for (int h = 0; h < kHoursPerDay; ++h) {
        p.set(fmt::format("pv:{}", gen.id), d, h, gen.p_max_kw * opt.pv_scale * c * pv_shape(h));
      }
    }
    if (g != nullptr) {
      for (const auto& r : g->roads) {
        const double k = traffic(rng);
        for (int h = 0; h < kHoursPerDay; ++h) {
          const double ratio = opt.traffic_base + (opt.traffic_peak - opt.traffic_base) *
                                                      gauss_bump(h, 16.5, 1.8);
          p.set(fmt::format("vol:{}", r.id), d, h, r.capacity_vph * ratio * k);
        }
      }
    }
  }
  return p;
}

ProfileSet import_ausgrid(const std::filesystem::path& csv, const PowerNetwork& net,
                          const AusgridOptions& opt) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open Ausgrid file " + csv.string());
  // customer -> category -> date -> 24 hourly kW
  std::map<int, std::map<std::string, std::map<std::string, HourlyProfile>>> data;
  std::set<std::string> dates;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_csv(line);
    if (f.size() < 53) continue;  // title and header rows
    int customer = 0;
    try {
      customer = std::stoi(trim(f[0]));
    } catch (const std::exception&) {
      continue;
    }
    const std::string cat = trim(f[3]);
    const std::string date = trim(f[4]);
    HourlyProfile hourly{};
    for (int k = 0; k < 48; ++k) {
      double kwh = 0.0;
      try {
        kwh = std::stod(trim(f[5 + k]));
      } catch (const std::exception&) {
        throw ParseError(fmt::format("{}:{}", csv.string(), lineno), "bad half-hour reading");
      }
      // Column k covers the half hour ending at (k+1)*30 min; two halves make
      // one hour and kWh per hour equals mean kW.
      hourly[static_cast<size_t>(k / 2)] += kwh;
    }
    auto& slot = data[customer][cat][date];
    for (int h = 0; h < kHoursPerDay; ++h) slot[h] += hourly[h];
    dates.insert(date);
  }
  if (data.empty()) throw ValidationError(csv.string() + ": no customer rows found");

  std::vector<std::string> date_list(dates.begin(), dates.end());
  std::vector<int> ids;
  for (size_t i = 0; i < date_list.size(); ++i) ids.push_back(opt.first_day + static_cast<int>(i));
  ProfileSet p(ids);
  std::vector<int> customers;
  for (const auto& [c, _] : data) customers.push_back(c);

  auto series_for = [&](int customer, std::initializer_list<const char*> cats) {
    std::vector<double> s(date_list.size() * kHoursPerDay, 0.0);
    for (size_t d = 0; d < date_list.size(); ++d) {
      for (const char* cat : cats) {
        auto ci = data[customer].find(cat);
        if (ci == data[customer].end()) continue;
        auto di = ci->second.find(date_list[d]);
        if (di == ci->second.end()) continue;
        for (int h = 0; h < kHoursPerDay; ++h) s[d * kHoursPerDay + h] += di->second[h];
      }
    }
    return s;
  };
  auto emit = [&](const std::string& key, const std::vector<double>& s, double rating) {
    const double peak = *std::max_element(s.begin(), s.end());
    const double k = peak > 0.0 ? rating / peak : 0.0;
    for (size_t i = 0; i < s.size(); ++i) {
      p.set(key, static_cast<int>(i / kHoursPerDay), static_cast<int>(i % kHoursPerDay), s[i] * k);
    }
  };
  for (size_t i = 0; i < net.loads.size(); ++i) {
    const auto& l = net.loads[i];
    const auto s = series_for(customers[i % customers.size()], {"GC", "CL"});
    emit(fmt::format("load_p:{}", l.id), s, l.p_kw * opt.load_scale);
    emit(fmt::format("load_q:{}", l.id), s, l.q_kvar * opt.load_scale);
  }
  size_t pv_index = 0;
  for (const auto& g : net.generators) {
    if (!g.is_pv()) continue;
    const auto s = series_for(customers[pv_index++ % customers.size()], {"GG"});
    emit(fmt::format("pv:{}", g.id), s, g.p_max_kw);
  }
  return p;
}

OutageSpec parse_outage(const json& doc, const PowerNetwork& net, const std::string& where) {
  OutageSpec s;
  try {
    if (doc.contains("fragility")) {
      for (const auto& f : doc.at("fragility")) {
        s.fragility[f.at("line").get<int>()] = f.at("p").get<double>();
      }
    }
    if (doc.contains("repair_hours")) {
      auto r = doc.at("repair_hours").get<std::vector<int>>();
      if (r.size() != 2) throw ParseError(where + ".repair_hours", "expected [min, max]");
      s.rt_min = r[0];
      s.rt_max = r[1];
    }
    if (doc.contains("repair_resources")) {
      auto r = doc.at("repair_resources").get<std::vector<int>>();
      if (r.size() != 2) throw ParseError(where + ".repair_resources", "expected [min, max]");
      s.rs_min = r[0];
      s.rs_max = r[1];
    }
  } catch (const json::exception& e) {
    throw ParseError(where, e.what());
  }
  for (const auto& [line, prob] : s.fragility) {
    if (line < 1 || line > static_cast<int>(net.lines.size()) ||
        net.line(line).kind != LineKind::kDamageable) {
      throw ValidationError(fmt::format("fragility given for line {}, which is not damageable", line));
    }
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw ValidationError(fmt::format("fragility of line {} must lie in [0, 1]", line));
    }
  }
  if (s.rt_min < 1 || s.rt_min > s.rt_max) throw ValidationError("repair_hours range must satisfy 1 <= min <= max");
  if (s.rs_min < 1 || s.rs_min > s.rs_max) throw ValidationError("repair_resources range must satisfy 1 <= min <= max");
  return s;
}

json to_json(const OutageSpec& s) {
  json doc;
  doc["fragility"] = json::array();
  for (const auto& [line, p] : s.fragility) doc["fragility"].push_back({{"line", line}, {"p", p}});
  doc["repair_hours"] = {s.rt_min, s.rt_max};
  doc["repair_resources"] = {s.rs_min, s.rs_max};
  return doc;
}

json to_json(const OutageScenario& s) {
  json doc;
  doc["seed"] = s.seed;
  doc["damaged"] = json::array();
  for (const auto& d : s.damaged) {
    doc["damaged"].push_back({{"line", d.line},
                              {"repair_hours", d.repair_hours},
                              {"repair_resources", d.repair_resources}});
  }
  return doc;
}

OutageScenario sample_outage(const PowerNetwork& net, const OutageSpec& spec, std::uint64_t seed) {
  OutageScenario s;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> rt(spec.rt_min, spec.rt_max);
  std::uniform_int_distribution<int> rs(spec.rs_min, spec.rs_max);
  for (int id : damageable_lines(net)) {
    auto it = spec.fragility.find(id);
    const double p = it == spec.fragility.end() ? 0.0 : it->second;
    if (p < 0.0 || p > 1.0) throw ValidationError(fmt::format("fragility of line {} outside [0, 1]", id));
    const double draw = u(rng);
    // Both integer draws happen for every line so the stream of one line
    // does not depend on the outcome of another.
    const int hours = rt(rng);
    const int res = rs(rng);
    if (draw < p) s.damaged.push_back({id, hours, res});
  }
  return s;
}

}  // namespace gridmend
