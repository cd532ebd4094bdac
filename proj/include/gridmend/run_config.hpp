// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_RUN_CONFIG_HPP_
#define GRIDMEND_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridmend/env.hpp"
#include "gridmend/marl.hpp"

namespace gridmend {

/// A TOML run configuration. Relative paths resolve against the file's
/// directory.
struct RunConfig {
  std::filesystem::path source;
  std::string text;  // raw file contents, hashed into the run manifest

  std::filesystem::path network;
  std::filesystem::path scenario;
  std::optional<std::filesystem::path> transport;  // overrides the scenario's transport section
  std::optional<std::filesystem::path> profiles;   // CSV; synthesized when absent
  std::filesystem::path out_dir;

  SynthOptions synth;
  int test_days = 0;

  int horizon = kHoursPerDay;
  MipOptions mip;
  RestorationOptions restoration;

  TrainConfig train;
  std::vector<std::uint64_t> seeds{1};

  int eval_days = 0;  // 0 means every test day
  std::uint64_t eval_seed = 1;
};

/// Throws ConfigError for malformed TOML, unknown keys, bad values or
/// referenced files that do not exist.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& source);

/// Environment over the train or test split of the configured profiles.
EnvConfig make_env_config(const RunConfig& rc, SplitTag split);

/// FNV-1a 64 of the configuration text, as 16 hex digits.
std::string config_hash(const RunConfig& rc);

}  // namespace gridmend

#endif  // GRIDMEND_RUN_CONFIG_HPP_
