// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_SCENARIO_HPP_
#define GRIDMEND_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridmend/network.hpp"
#include "gridmend/transport.hpp"

namespace gridmend {

enum class SplitTag { kAll, kTrain, kTest };
std::string to_string(SplitTag tag);
SplitTag parse_split_tag(const std::string& s);

struct SplitSpec {
  SplitTag tag = SplitTag::kAll;
  int test_days = 0;  // the last `test_days` days form the test set
};

/// Hourly series keyed by "load_p:<id>", "load_q:<id>", "pv:<id>" or
/// "vol:<road id>". Every series covers every day of the set.
class ProfileSet {
 public:
  ProfileSet() = default;
  explicit ProfileSet(std::vector<int> day_ids) : day_ids_(std::move(day_ids)) {}

  int days() const { return static_cast<int>(day_ids_.size()); }
  const std::vector<int>& day_ids() const { return day_ids_; }
  SplitTag split() const { return split_; }

  bool has(const std::string& key) const { return series_.count(key) > 0; }
  /// day is an index into day_ids().
  double value(const std::string& key, int day, int hour) const;
  void set(const std::string& key, int day, int hour, double v);
  const std::map<std::string, std::vector<double>>& series() const { return series_; }

  /// Subset of days by index, keeping series order.
  ProfileSet select(const std::vector<int>& day_indices, SplitTag tag) const;

  double load_p(int day, int hour, const Load& d) const;
  double load_q(int day, int hour, const Load& d) const;
  double pv(int day, int hour, const Generator& g) const;
  /// Per-road volumes for one day, falling back to the transport file.
  std::vector<HourlyProfile> road_volumes(int day, const TransportGraph& g) const;

 private:
  std::vector<int> day_ids_;
  std::map<std::string, std::vector<double>> series_;
  SplitTag split_ = SplitTag::kAll;
};

/// Reads day,hour,id,value rows. Missing hours are reported together.
ProfileSet read_profiles_csv(std::istream& in, const std::string& source = "<profiles>");
ProfileSet load_profiles(const std::filesystem::path& path, const SplitSpec& split = {});
void write_profiles_csv(std::ostream& out, const ProfileSet& p);

/// Train days are every day except the last `test_days`.
ProfileSet apply_split(const ProfileSet& all, const SplitSpec& split);

/// Rejects series whose id does not name a load, PV or road.
void validate_profiles(const ProfileSet& p, const PowerNetwork& net, const TransportGraph* g);

struct SynthOptions {
  int days = 30;
  std::uint64_t seed = 1;
  double load_scale = 1.0;
  double pv_scale = 1.0;
  double noise = 0.05;         // relative Gaussian noise on loads
  double traffic_peak = 1.1;   // afternoon V/C peak
  double traffic_base = 0.3;
};

/// Double-peak residential loads, clear-sky PV with daily cloudiness and an
/// afternoon traffic peak.
ProfileSet synthesize_profiles(const PowerNetwork& net, const TransportGraph* g,
                               const SynthOptions& opt);

struct AusgridOptions {
  double load_scale = 1.0;
  int first_day = 0;
};

/// Adapter for the Ausgrid solar-home CSV layout (customer, capacity,
/// postcode, category GC/CL/GG, date, 48 half-hour kWh columns). Customers
/// are assigned to loads and PVs round-robin in ascending customer order and
/// each series is scaled so its peak matches the element's rating.
ProfileSet import_ausgrid(const std::filesystem::path& csv, const PowerNetwork& net,
                          const AusgridOptions& opt = {});

struct OutageSpec {
  std::map<int, double> fragility;  // damageable line id -> probability
  int rt_min = 1;
  int rt_max = 4;
  int rs_min = 2;
  int rs_max = 3;
  bool operator==(const OutageSpec&) const = default;
};

struct LineDamage {
  int line = 0;
  int repair_hours = 1;
  int repair_resources = 1;
  bool operator==(const LineDamage&) const = default;
};

struct OutageScenario {
  std::uint64_t seed = 0;
  std::vector<LineDamage> damaged;  // ascending line id
  bool operator==(const OutageScenario&) const = default;
};

OutageSpec parse_outage(const nlohmann::json& doc, const PowerNetwork& net,
                        const std::string& where = "outage");
nlohmann::json to_json(const OutageSpec& spec);
nlohmann::json to_json(const OutageScenario& s);

/// Each damageable line is drawn independently with its probability; RT and
/// rs are drawn uniformly from the configured integer ranges.
OutageScenario sample_outage(const PowerNetwork& net, const OutageSpec& spec, std::uint64_t seed);

}  // namespace gridmend

#endif  // GRIDMEND_SCENARIO_HPP_
