// SPDX-License-Identifier: Apache-2.0

#include "gridmend/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "gridmend/error.hpp"

namespace gridmend {

namespace fs = std::filesystem;

namespace {

// Typed reads that reject wrong types and unknown keys.
class Table {
 public:
  Table(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  bool has(const char* key) {
    seen_.insert(key);
    return t_ && t_->contains(key);
  }

  template <class T>
  T get(const char* key, T fallback) {
    if (!has(key)) return fallback;
    const toml::node& n = *t_->get(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n.value_exact<bool>()) return *v;
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = n.value_exact<std::int64_t>()) {
        if (*v < 0 && std::is_unsigned_v<T>) fail(key, "must be non-negative");
        return static_cast<T>(*v);
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = n.value<double>()) return *v;
    } else {
      if (auto v = n.value_exact<std::string>()) return *v;
    }
    fail(key, "has the wrong type");
  }

  template <class T>
  std::vector<T> list(const char* key, std::vector<T> fallback) {
    if (!has(key)) return fallback;
    const toml::array* a = t_->get(key)->as_array();
    if (!a) fail(key, "must be an array");
    std::vector<T> out;
    for (const auto& n : *a) {
      auto v = n.value_exact<std::int64_t>();
      if (!v || *v < 0) fail(key, "must hold non-negative integers");
      out.push_back(static_cast<T>(*v));
    }
    return out;
  }

  void reject_unknown() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError(fmt::format("unknown key [{}].{}", name_, k.str()));
      }
    }
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError(fmt::format("[{}].{} {}", name_, key, what));
  }

 private:
  const toml::table* t_;
  std::string name_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : (base / q).lexically_normal();
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw ConfigError(fmt::format("{} file not found: {}", what, p.string()));
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& source) {
  toml::table doc;
  try {
    doc = toml::parse(text, source.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e;
    throw ConfigError("invalid TOML: " + os.str());
  }
  for (const auto& [k, v] : doc) {
    const std::string key(k.str());
    if (key != "paths" && key != "profiles" && key != "env" && key != "train" && key != "eval") {
      throw ConfigError("unknown section [" + key + "]");
    }
    if (!v.is_table()) throw ConfigError("[" + key + "] must be a table");
  }
  RunConfig rc;
  rc.source = source;
  rc.text = text;
  const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");

  Table paths(doc["paths"].as_table(), "paths");
  if (!paths.has("network")) throw ConfigError("[paths].network is required");
  if (!paths.has("scenario")) throw ConfigError("[paths].scenario is required");
  rc.network = resolve(base, paths.get<std::string>("network", ""));
  rc.scenario = resolve(base, paths.get<std::string>("scenario", ""));
  if (paths.has("transport")) rc.transport = resolve(base, paths.get<std::string>("transport", ""));
  if (paths.has("profiles")) rc.profiles = resolve(base, paths.get<std::string>("profiles", ""));
  rc.out_dir = resolve(base, paths.get<std::string>("out", "runs"));
  paths.reject_unknown();

  Table prof(doc["profiles"].as_table(), "profiles");
  rc.synth.days = prof.get<int>("days", rc.synth.days);
  rc.synth.seed = prof.get<std::uint64_t>("seed", rc.synth.seed);
  rc.synth.load_scale = prof.get<double>("load_scale", rc.synth.load_scale);
  rc.synth.pv_scale = prof.get<double>("pv_scale", rc.synth.pv_scale);
  rc.synth.noise = prof.get<double>("noise", rc.synth.noise);
  rc.synth.traffic_peak = prof.get<double>("traffic_peak", rc.synth.traffic_peak);
  rc.synth.traffic_base = prof.get<double>("traffic_base", rc.synth.traffic_base);
  rc.test_days = prof.get<int>("test_days", 0);
  prof.reject_unknown();
  if (rc.synth.days < 1) throw ConfigError("[profiles].days must be at least 1");
  if (rc.test_days < 0) throw ConfigError("[profiles].test_days must be non-negative");

  Table env(doc["env"].as_table(), "env");
  rc.horizon = env.get<int>("horizon", rc.horizon);
  rc.mip.time_limit_s = env.get<double>("mip_time_limit_s", rc.mip.time_limit_s);
  rc.mip.node_limit = env.get<int>("mip_node_limit", rc.mip.node_limit);
  rc.mip.gap = env.get<double>("mip_gap", rc.mip.gap);
  rc.restoration.charge_bonus = env.get<double>("charge_bonus", rc.restoration.charge_bonus);
  env.reject_unknown();

  Table tr(doc["train"].as_table(), "train");
  TrainConfig& t = rc.train;
  t.algorithm = parse_algorithm(tr.get<std::string>("algorithm", to_string(t.algorithm)));
  t.episodes = tr.get<int>("episodes", t.episodes);
  rc.seeds = tr.list<std::uint64_t>("seeds", rc.seeds);
  t.batch_steps = tr.get<int>("batch_steps", t.batch_steps);
  t.gamma = tr.get<double>("gamma", t.gamma);
  t.clip = tr.get<double>("clip", t.clip);
  t.gae_lambda = tr.get<double>("gae_lambda", t.gae_lambda);
  t.lr_hl = tr.get<double>("lr_hl", t.lr_hl);
  t.lr_route = tr.get<double>("lr_route", t.lr_route);
  t.lr_schedule = tr.get<double>("lr_schedule", t.lr_schedule);
  t.lr_actor = tr.get<double>("lr_actor", t.lr_actor);
  t.lr_critic = tr.get<double>("lr_critic", t.lr_critic);
  t.entropy_coef = tr.get<double>("entropy_coef", t.entropy_coef);
  t.normalize_advantages = tr.get<bool>("normalize_advantages", t.normalize_advantages);
  {
    const auto hidden = tr.list<int>("hidden", std::vector<int>(t.hidden.begin(), t.hidden.end()));
    t.hidden.assign(hidden.begin(), hidden.end());
  }
  t.actor_final_gain = tr.get<double>("actor_final_gain", t.actor_final_gain);
  tr.reject_unknown();
  if (rc.seeds.empty()) throw ConfigError("[train].seeds must not be empty");
  if (t.episodes < 0) throw ConfigError("[train].episodes must be non-negative");
  if (t.clip <= 0.0 || t.clip >= 1.0) throw ConfigError("[train].clip must lie in (0, 1)");
  for (int w : t.hidden) {
    if (w < 1) throw ConfigError("[train].hidden widths must be positive");
  }
  t.seed = rc.seeds.front();

  Table ev(doc["eval"].as_table(), "eval");
  rc.eval_days = ev.get<int>("days", 0);
  rc.eval_seed = ev.get<std::uint64_t>("seed", 1);
  ev.reject_unknown();

  require_file(rc.network, "network");
  require_file(rc.scenario, "scenario");
  if (rc.transport) require_file(*rc.transport, "transport");
  if (rc.profiles) require_file(*rc.profiles, "profiles");
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

EnvConfig make_env_config(const RunConfig& rc, SplitTag split) {
  EnvConfig cfg;
  cfg.net = load_network(rc.network);
  ScenarioFile sc = load_scenario(rc.scenario, cfg.net);
  cfg.transport = std::move(sc.transport);
  if (rc.transport) {
    std::ifstream in(*rc.transport);
    if (!in) throw ConfigError("transport file not found: " + rc.transport->string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(rc.transport->string(), e.what());
    }
    cfg.transport = parse_transport(doc.contains("transport") ? doc["transport"] : doc,
                                    rc.transport->string());
  }
  cfg.fleet = std::move(sc.fleet);
  cfg.outage = std::move(sc.outage);
  const SplitSpec spec{split, rc.test_days};
  if (rc.profiles) {
    cfg.profiles = load_profiles(*rc.profiles, spec);
  } else {
    cfg.profiles = apply_split(synthesize_profiles(cfg.net, &cfg.transport, rc.synth), spec);
  }
  cfg.horizon = rc.horizon;
  cfg.mip = rc.mip;
  cfg.restoration = rc.restoration;
  validate(cfg);
  return cfg;
}

std::string config_hash(const RunConfig& rc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : rc.text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace gridmend
