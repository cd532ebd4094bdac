// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_TESTS_FIXTURES_HPP_
#define GRIDMEND_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gridmend/env.hpp"
#include "gridmend/mip.hpp"
#include "gridmend/network.hpp"
#include "gridmend/restoration.hpp"

namespace gridmend::testing {

std::filesystem::path data_dir();
std::filesystem::path test_data_dir();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, const std::string& text);
std::string read_file(const std::filesystem::path& p);

struct RandomNetOptions {
  int min_buses = 2;
  int max_buses = 6;
  int max_lines = 7;
  /// Black-start sources besides the DG at bus 1 (grid-forming PV, MEG, MESS).
  int max_extra_sources = 1;
};

/// Connected feeder with a DG at bus 1, random loads, PVs and line kinds.
PowerNetwork random_network(std::mt19937_64& rng, const RandomNetOptions& opt = {});

/// Random damage, PV availability and mobile injections for one step.
StepInputs random_inputs(std::mt19937_64& rng, const PowerNetwork& net,
                         const RandomNetOptions& opt = {});

/// Exhaustive search over every assignment of the integer columns, with one
/// LP per assignment that survives the rows involving only integer columns.
struct EnumerationResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
  long assignments = 0;
  long lps = 0;
};

EnumerationResult enumerate_mip(const MipProblem& p);

/// Two-bus network: DG at bus 1, one load at bus 2, one line.
PowerNetwork two_bus(double dg_kw, double load_kw, double load_kvar, double cost, double s_max_kva,
                     double r = 0.01, double x = 0.01);

/// Toy environment config with its profile set replaced by one nominal day.
EnvConfig toy_env_config();

}  // namespace gridmend::testing

#endif  // GRIDMEND_TESTS_FIXTURES_HPP_
