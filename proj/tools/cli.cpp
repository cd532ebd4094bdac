// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "gridmend/env.hpp"
#include "gridmend/error.hpp"
#include "gridmend/marl.hpp"
#include "gridmend/restoration.hpp"
#include "gridmend/run_config.hpp"

#ifndef GRIDMEND_VERSION
#define GRIDMEND_VERSION "unknown"
#endif

namespace gridmend::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("gridmend", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("GRIDMEND_LOG")) log->set_level(spdlog::level::from_str(lvl));
  return log;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("file not found: " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(p.string(), e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

json manifest_base(const RunConfig& rc, const std::string& command) {
  json m;
  m["command"] = command;
  m["version"] = GRIDMEND_VERSION;
  m["config"] = fs::absolute(rc.source).string();
  m["config_hash"] = config_hash(rc);
  json data;
  data["network"] = file_hash(rc.network);
  data["scenario"] = file_hash(rc.scenario);
  if (rc.transport) data["transport"] = file_hash(*rc.transport);
  if (rc.profiles) data["profiles"] = file_hash(*rc.profiles);
  m["data_hashes"] = data;
  return m;
}

// Per-command option holders.
struct TrainArgs {
  std::string config;
  int episodes = -1;
  std::vector<std::uint64_t> seeds;
  std::string algorithm;
  std::string out;
  int workers = 1;
};

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  int days = -1;
  std::int64_t seed = -1;
  std::string out;
  bool trace = false;
  int workers = 1;
};

int cmd_net_validate(const std::string& path, std::ostream& out) {
  const PowerNetwork net = load_network(path);
  const auto dmg = damageable_lines(net);
  out << fmt::format("ok: {} buses, {} lines ({} damageable), {} generators, {} loads, {} stations\n",
                     net.buses.size(), net.lines.size(), dmg.size(), net.generators.size(),
                     net.loads.size(), net.stations.size());
  return kOk;
}

int cmd_scenario_sample(const std::string& net_path, const std::string& scenario_path,
                        std::uint64_t seed, int count, const std::string& out_dir, std::ostream& out) {
  const PowerNetwork net = load_network(net_path);
  const ScenarioFile sc = load_scenario(scenario_path, net);
  json samples = json::array();
  for (int k = 0; k < count; ++k) samples.push_back(to_json(sample_outage(net, sc.outage, seed + static_cast<std::uint64_t>(k))));
  const json doc = {{"network", net_path}, {"samples", samples}};
  if (out_dir.empty()) {
    out << doc.dump(1) << "\n";
  } else {
    open_out(fs::path(out_dir) / "outages.json") << doc.dump(1) << "\n";
  }
  return kOk;
}

int cmd_profiles_synth(const std::string& net_path, const std::string& scenario_path,
                       const SynthOptions& opt, const std::string& out_dir, std::ostream& out) {
  const PowerNetwork net = load_network(net_path);
  std::optional<ScenarioFile> sc;
  if (!scenario_path.empty()) sc = load_scenario(scenario_path, net);
  const ProfileSet p = synthesize_profiles(net, sc ? &sc->transport : nullptr, opt);
  if (out_dir.empty()) {
    write_profiles_csv(out, p);
  } else {
    auto os = open_out(fs::path(out_dir) / "profiles.csv");
    write_profiles_csv(os, p);
  }
  return kOk;
}

int cmd_train(const TrainArgs& a, spdlog::logger& log, std::ostream& out) {
  RunConfig rc = load_run_config(a.config);
  if (a.episodes >= 0) rc.train.episodes = a.episodes;
  if (!a.seeds.empty()) rc.seeds = a.seeds;
  if (!a.algorithm.empty()) rc.train.algorithm = parse_algorithm(a.algorithm);
  if (!a.out.empty()) rc.out_dir = a.out;
  if (a.workers < 1) throw ConfigError("--workers must be at least 1");

  const EnvConfig env_cfg = make_env_config(rc, SplitTag::kTrain);
  if (env_cfg.profiles.days() == 0) throw ConfigError("the train split holds no days");
  const std::string algo = to_string(rc.train.algorithm);
  const fs::path root = fs::path(rc.out_dir) / algo;
  fs::create_directories(root);
  log.info("training {} for {} episodes on {} seed(s), output under {}", algo, rc.train.episodes,
           rc.seeds.size(), root.string());

  std::vector<double> final_means(rc.seeds.size(), 0.0);
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (size_t k = next++; k < rc.seeds.size(); k = next++) {
      try {
        TrainConfig tc = rc.train;
        tc.seed = rc.seeds[k];
        const fs::path dir = root / fmt::format("seed-{}", tc.seed);
        fs::create_directories(dir);
        auto metrics = open_out(dir / "metrics.csv");
        auto timing = open_out(dir / "timing.csv");
        write_metrics_header(metrics);
        timing << "episode,wall_ms\n";
        Environment env(env_cfg);
        const TrainResult res = train(env, tc, [&](const EpisodeMetrics& m) {
          write_metrics_row(metrics, m);
          timing << fmt::format("{},{:.3f}\n", m.episode, m.wall_ms);
          if ((m.episode + 1) % 50 == 0) {
            std::lock_guard lock(mu);
            log.debug("seed {} episode {} reward {:.4f}", tc.seed, m.episode + 1, m.reward);
          }
        });
        save_checkpoint(dir / "checkpoint.gmck", res.policies);
        const size_t n = res.metrics.size();
        const size_t tail = std::min<size_t>(50, n);
        double s = 0.0;
        for (size_t i = n - tail; i < n; ++i) s += res.metrics[i].reward;
        final_means[k] = tail ? s / static_cast<double>(tail) : 0.0;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int workers = std::min<int>(a.workers, static_cast<int>(rc.seeds.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  json m = manifest_base(rc, "train");
  m["algorithm"] = algo;
  m["episodes"] = rc.train.episodes;
  m["seeds"] = rc.seeds;
  m["workers"] = a.workers;
  m["train_days"] = env_cfg.profiles.day_ids();
  open_out(root / "manifest.json") << m.dump(1) << "\n";
  for (size_t k = 0; k < rc.seeds.size(); ++k) {
    out << fmt::format("{} seed {}: mean reward over the last {} episodes {:.4f}\n", algo, rc.seeds[k],
                       std::min(50, rc.train.episodes), final_means[k]);
  }
  return kOk;
}

int cmd_eval(const EvalArgs& a, spdlog::logger& log, std::ostream& out) {
  RunConfig rc = load_run_config(a.config);
  if (!a.out.empty()) rc.out_dir = a.out;
  if (a.workers < 1) throw ConfigError("--workers must be at least 1");
  const Policies pol = load_checkpoint(a.checkpoint);
  const EnvConfig env_cfg = make_env_config(rc, SplitTag::kTest);
  {
    Environment probe(env_cfg);
    if (static_cast<int>(pol.agents.size()) != probe.agent_count() ||
        pol.obs_width != probe.observation_width()) {
      throw ConfigError(fmt::format(
          "checkpoint {} was trained for {} agents with observation width {}; this config has {} and {}",
          a.checkpoint, pol.agents.size(), pol.obs_width, probe.agent_count(), probe.observation_width()));
    }
    for (size_t i = 0; i < pol.agents.size(); ++i) {
      if (pol.agents[i].kind != probe.agents()[i].kind) {
        throw ConfigError("checkpoint agent kinds do not match the configured fleet");
      }
    }
  }
  const int available = env_cfg.profiles.days();
  const int want = a.days >= 0 ? a.days : (rc.eval_days > 0 ? rc.eval_days : available);
  if (want > available) {
    throw ConfigError(fmt::format("requested {} evaluation days but the test split holds {}", want, available));
  }
  EvalOptions opt;
  for (int d = 0; d < want; ++d) opt.days.push_back(d);
  opt.seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : rc.eval_seed;
  opt.workers = a.workers;
  opt.trace = a.trace;
  log.info("evaluating {} on {} test day(s)", to_string(pol.algorithm), want);
  const auto days = evaluate(pol, env_cfg, opt);

  const fs::path dir = rc.out_dir;
  auto csv = open_out(dir / "eval.csv");
  write_eval_header(csv);
  double sum = 0.0;
  for (const auto& d : days) {
    write_eval_row(csv, d);
    sum += d.lambda_sum;
  }
  if (a.trace) {
    auto tr = open_out(dir / "trace.csv");
    Environment::write_trace_header(tr);
    for (const auto& d : days) tr << d.trace;
  }
  json m = manifest_base(rc, "eval");
  m["checkpoint"] = fs::absolute(a.checkpoint).string();
  m["checkpoint_hash"] = file_hash(a.checkpoint);
  m["algorithm"] = to_string(pol.algorithm);
  m["days"] = want;
  m["seed"] = opt.seed;
  m["workers"] = a.workers;
  open_out(dir / "eval_manifest.json") << m.dump(1) << "\n";
  out << fmt::format("{} days, mean lambda-sum {:.4f}\n", days.size(),
                     days.empty() ? 0.0 : sum / static_cast<double>(days.size()));
  return kOk;
}

int cmd_opf(const std::string& net_path, const std::string& inputs_path, const std::string& dump_lp,
            double time_limit, const std::string& out_dir, std::ostream& out) {
  const PowerNetwork net = load_network(net_path);
  const StepInputs in = parse_step_inputs(load_json(inputs_path), net, inputs_path);
  const RestorationProblem p = build_problem(net, in);
  if (!dump_lp.empty()) {
    auto os = open_out(dump_lp);
    write_lp(os, p, "restoration step from " + inputs_path);
  }
  MipOptions mo;
  mo.time_limit_s = time_limit;
  const DispatchSolution s = solve(p, mo);
  json doc = to_json(s, net);
  if (s.status != SolveStatus::kInfeasible) {
    const RadialityReport rep = check_radiality(s, net);
    doc["radiality"] = {{"ok", rep.ok()},
                        {"detail", rep.detail},
                        {"islands", rep.islands},
                        {"energized_buses", rep.energized_buses},
                        {"energized_lines", rep.energized_lines}};
  }
  if (out_dir.empty()) {
    out << doc.dump(1) << "\n";
  } else {
    open_out(fs::path(out_dir) / "dispatch.json") << doc.dump(1) << "\n";
  }
  return s.status == SolveStatus::kInfeasible ? kRuntimeFailure : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-disaster distribution restoration with mobile units and multi-agent PPO", "gridmend"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GRIDMEND_VERSION);

  auto* net = app.add_subcommand("net", "Network file commands");
  net->require_subcommand(1);
  std::string net_path;
  auto* net_validate = net->add_subcommand("validate", "Parse and validate a network file");
  net_validate->add_option("path", net_path, "Network JSON")->required();

  auto* scen = app.add_subcommand("scenario", "Outage scenario commands");
  scen->require_subcommand(1);
  std::string sc_net, sc_file, sc_out;
  std::uint64_t sc_seed = 1;
  int sc_count = 1;
  auto* sample = scen->add_subcommand("sample", "Draw outage scenarios from the fragility model");
  sample->add_option("--net", sc_net, "Network JSON")->required();
  sample->add_option("--scenario", sc_file, "Scenario JSON (outage section)")->required();
  sample->add_option("--seed", sc_seed, "First seed");
  sample->add_option("--count", sc_count, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  sample->add_option("--out", sc_out, "Output directory (stdout when omitted)");

  auto* prof = app.add_subcommand("profiles", "Profile commands");
  prof->require_subcommand(1);
  std::string pr_net, pr_scen, pr_out;
  SynthOptions so;
  auto* synth = prof->add_subcommand("synth", "Write synthetic load, PV and traffic profiles");
  synth->add_option("--net", pr_net, "Network JSON")->required();
  synth->add_option("--scenario", pr_scen, "Scenario JSON, for road volumes");
  synth->add_option("--days", so.days, "Number of days")->check(CLI::PositiveNumber);
  synth->add_option("--seed", so.seed, "Generator seed");
  synth->add_option("--load-scale", so.load_scale, "Multiplier on nominal loads");
  synth->add_option("--out", pr_out, "Output directory (stdout when omitted)");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train policies from a run config");
  trn->add_option("--config", ta.config, "Run config (TOML)")->required();
  trn->add_option("--episodes", ta.episodes, "Override the episode count");
  trn->add_option("--seed", ta.seeds, "Override the seed list (repeatable)");
  trn->add_option("--algorithm", ta.algorithm, "h2mappo, ippo or mappo");
  trn->add_option("--out", ta.out, "Output directory");
  trn->add_option("--workers", ta.workers, "Seeds trained in parallel")->capture_default_str();

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "Greedy evaluation on test days");
  evl->add_option("--config", ea.config, "Run config (TOML)")->required();
  evl->add_option("--checkpoint", ea.checkpoint, "Checkpoint written by train")->required();
  evl->add_option("--days", ea.days, "Number of test days (default from config)");
  evl->add_option("--seed", ea.seed, "Outage seed");
  evl->add_option("--out", ea.out, "Output directory");
  evl->add_flag("--trace", ea.trace, "Also write a per-step trace.csv");
  evl->add_option("--workers", ea.workers, "Days evaluated in parallel")->capture_default_str();

  std::string opf_net, opf_in, opf_lp, opf_out;
  double opf_limit = 10.0;
  auto* opf = app.add_subcommand("opf", "Solve one restoration step");
  opf->add_option("--net", opf_net, "Network JSON")->required();
  opf->add_option("--inputs", opf_in, "Step inputs JSON")->required();
  opf->add_option("--dump-lp", opf_lp, "Write the model in LP format");
  opf->add_option("--time-limit", opf_limit, "Branch-and-bound budget in seconds");
  opf->add_option("--out", opf_out, "Output directory (stdout when omitted)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigFailure;
  }

  auto log = make_logger(err);
  try {
    if (net_validate->parsed()) return cmd_net_validate(net_path, out);
    if (sample->parsed()) return cmd_scenario_sample(sc_net, sc_file, sc_seed, sc_count, sc_out, out);
    if (synth->parsed()) return cmd_profiles_synth(pr_net, pr_scen, so, pr_out, out);
    if (trn->parsed()) return cmd_train(ta, *log, out);
    if (evl->parsed()) return cmd_eval(ea, *log, out);
    if (opf->parsed()) return cmd_opf(opf_net, opf_in, opf_lp, opf_limit, opf_out, out);
  } catch (const ConfigError& e) {
    log->error("{}", e.what());
    return kConfigFailure;
  } catch (const ParseError& e) {
    log->error("{}", e.what());
    return kConfigFailure;
  } catch (const ValidationError& e) {
    log->error("{}", e.what());
    return kConfigFailure;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace gridmend::cli
