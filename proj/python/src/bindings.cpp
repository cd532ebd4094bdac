// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "gridmend/env.hpp"
#include "gridmend/error.hpp"
#include "gridmend/marl.hpp"
#include "gridmend/ppo.hpp"
#include "gridmend/restoration.hpp"
#include "gridmend/run_config.hpp"

namespace py = pybind11;
using namespace gridmend;

namespace {

// Results cross the boundary as JSON text; the Python package decodes them.
std::string solve_step_json(const std::string& network_path, const std::string& inputs_json,
                            double time_limit_s) {
  const PowerNetwork net = load_network(network_path);
  const StepInputs in = parse_step_inputs(nlohmann::json::parse(inputs_json), net);
  MipOptions mo;
  mo.time_limit_s = time_limit_s;
  return to_json(solve_restoration(net, in, mo), net).dump();
}

std::string sample_outage_json(const std::string& network_path, const std::string& scenario_path,
                               std::uint64_t seed) {
  const PowerNetwork net = load_network(network_path);
  const ScenarioFile sc = load_scenario(scenario_path, net);
  return to_json(sample_outage(net, sc.outage, seed)).dump();
}

class PyEnv {
 public:
  PyEnv(const std::string& config_path, const std::string& split)
      : env_(make_env_config(load_run_config(config_path), parse_split_tag(split))) {}

  std::vector<std::vector<double>> reset(std::uint64_t seed) { return env_.reset(seed); }

  py::dict step(const std::vector<py::dict>& actions) {
    std::vector<AgentAction> acts;
    for (const auto& d : actions) {
      AgentAction a;
      if (d.contains("hl")) a.hl = d["hl"].cast<std::string>() == "transport" ? HlAction::kTransport : HlAction::kPower;
      if (d.contains("route")) a.route = d["route"].cast<int>();
      if (d.contains("magnitude")) a.magnitude = d["magnitude"].cast<double>();
      if (d.contains("repair")) a.repair = d["repair"].cast<int>();
      acts.push_back(a);
    }
    const StepResult r = env_.step(acts);
    py::dict out;
    out["observations"] = r.observations;
    out["reward"] = r.reward;
    out["xi"] = r.xi;
    out["restored_kw"] = r.restored_kw;
    out["status"] = to_string(r.status);
    out["hour"] = r.hour;
    out["done"] = r.done;
    return out;
  }

  int agent_count() const { return env_.agent_count(); }
  int observation_width() const { return env_.observation_width(); }
  std::vector<std::string> agent_kinds() const {
    std::vector<std::string> k;
    for (const auto& a : env_.agents()) k.emplace_back(to_string(a.kind));
    return k;
  }
  bool done() const { return env_.done(); }
  std::vector<double> soc() const {
    std::vector<double> s;
    for (const auto& a : env_.agents()) {
      if (a.kind == UnitKind::kMess) s.push_back(env_.soc(a.unit));
    }
    return s;
  }

 private:
  Environment env_;
};

std::vector<double> train_rewards(const std::string& config_path, int episodes, std::uint64_t seed,
                                  const std::string& algorithm) {
  RunConfig rc = load_run_config(config_path);
  TrainConfig tc = rc.train;
  if (episodes >= 0) tc.episodes = episodes;
  tc.seed = seed;
  if (!algorithm.empty()) tc.algorithm = parse_algorithm(algorithm);
  Environment env(make_env_config(rc, SplitTag::kTrain));
  py::gil_scoped_release release;
  const TrainResult res = train(env, tc);
  std::vector<double> out;
  for (const auto& m : res.metrics) out.push_back(m.reward);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Restoration MILP, coupled power/transport environment and MARL trainers";

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("solve_step_json", &solve_step_json, py::arg("network_path"), py::arg("inputs_json"),
        py::arg("time_limit_s") = 10.0);
  m.def("sample_outage_json", &sample_outage_json, py::arg("network_path"), py::arg("scenario_path"),
        py::arg("seed"));
  m.def("gae", [](const std::vector<double>& r, const std::vector<double>& v, double gamma, double lam) {
    const Advantages a = gae(r, v, gamma, lam);
    return py::make_tuple(a.advantage, a.reward_to_go);
  }, py::arg("rewards"), py::arg("values"), py::arg("gamma"), py::arg("lam") = 1.0);
  m.def("ppo_clip_loss", [](const std::vector<double>& n, const std::vector<double>& o,
                            const std::vector<double>& a, double eps) { return ppo_clip_loss(n, o, a, eps); },
        py::arg("logp_new"), py::arg("logp_old"), py::arg("advantages"), py::arg("eps") = 0.2);
  m.def("train_rewards", &train_rewards, py::arg("config_path"), py::arg("episodes") = -1,
        py::arg("seed") = 1, py::arg("algorithm") = "");

  py::class_<PyEnv>(m, "Environment")
      .def(py::init<const std::string&, const std::string&>(), py::arg("config_path"),
           py::arg("split") = "train")
      .def("reset", &PyEnv::reset, py::arg("seed"))
      .def("step", &PyEnv::step, py::arg("actions"))
      .def_property_readonly("agent_count", &PyEnv::agent_count)
      .def_property_readonly("observation_width", &PyEnv::observation_width)
      .def_property_readonly("agent_kinds", &PyEnv::agent_kinds)
      .def_property_readonly("done", &PyEnv::done)
      .def_property_readonly("soc", &PyEnv::soc);
}
