#include "apufdi/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apufdi/errors.hpp"

namespace apufdi {
namespace {

using nlohmann::json;

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

std::string mode_name(DegradationMode m) {
  return m == DegradationMode::Coupled ? "coupled" : "independent";
}

}  // namespace

std::filesystem::path ScenarioConfig::resolved_model_path() const {
  if (model_path.is_absolute() || base_dir.empty()) return model_path;
  return base_dir / model_path;
}

ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  c.base_dir = base_dir;
  try {
    const json doc = json::parse(json_text);
    read(doc, "case_id", c.case_id);
    if (!doc.contains("model")) throw ConfigError("config lacks 'model'");
    c.model_path = doc.at("model").get<std::string>();

    if (doc.contains("noise")) {
      const json& n = doc.at("noise");
      read(n, "process_pct", c.process_noise_pct);
      read(n, "measurement_pct", c.measurement_noise_pct);
      read(n, "health_std", c.health_noise_std);
    }
    if (doc.contains("estimators")) {
      const json& e = doc.at("estimators");
      if (e.contains("enabled")) {
        c.estimators.enabled.clear();
        for (const auto& name : e.at("enabled"))
          c.estimators.enabled.push_back(parse_estimator_type(name.get<std::string>()));
      }
      read(e, "pe_nominal", c.estimators.pe_nominal);
      read(e, "pe_nominal_variance", c.estimators.pe_nominal_variance);
      read(e, "nominal_variance_factor", c.estimators.nominal_variance_factor);
      read(e, "initial_state_std", c.estimators.initial_state_std);
      read(e, "initial_health_std", c.estimators.initial_health_std);
    }
    if (doc.contains("load")) {
      const json& l = doc.at("load");
      read(l, "change_rate", c.load_change_rate);
      read(l, "amplitude_frac", c.load_amplitude_frac);
      read(l, "jitter_frac", c.load_jitter_frac);
      read(l, "estimate_noise_frac", c.power_estimate_noise_frac);
    }
    if (doc.contains("controller")) {
      const json& p = doc.at("controller");
      read(p, "kp", c.controller.kp);
      read(p, "ki", c.controller.ki);
      read(p, "u_min", c.controller.u_min);
      read(p, "u_max", c.controller.u_max);
      read(p, "measured_output", c.controller.measured_output);
      read(p, "actuated_input", c.controller.actuated_input);
    }
    if (doc.contains("degradation")) {
      const json& d = doc.at("degradation");
      std::string mode = "independent";
      read(d, "mode", mode);
      if (mode == "independent")
        c.degradation = DegradationMode::Independent;
      else if (mode == "coupled")
        c.degradation = DegradationMode::Coupled;
      else
        throw ConfigError("degradation.mode must be 'independent' or 'coupled'");
      read(d, "k_c", c.coupling.k_compressor);
      read(d, "k_t", c.coupling.k_turbine);
    }
    if (doc.contains("runs")) {
      const json& r = doc.at("runs");
      read(r, "per_class", c.runs_per_class);
      read(r, "horizon", c.horizon);
      read(r, "ramp_start", c.ramp_start);
      read(r, "ramp_end", c.ramp_end);
      read(r, "window", c.window);
      read(r, "rmse_start", c.rmse_start);
      read(r, "seed", c.seed);
      read(r, "max_failure_fraction", c.max_failure_fraction);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  validate_scenario(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.parent_path());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json doc;
  doc["case_id"] = c.case_id;
  doc["model"] = c.model_path.string();
  doc["noise"] = {{"process_pct", c.process_noise_pct},
                  {"measurement_pct", c.measurement_noise_pct},
                  {"health_std", c.health_noise_std}};
  json enabled = json::array();
  for (EstimatorType t : c.estimators.enabled) enabled.push_back(std::string(to_string(t)));
  doc["estimators"] = {{"enabled", enabled},
                       {"pe_nominal", c.estimators.pe_nominal},
                       {"pe_nominal_variance", c.estimators.pe_nominal_variance},
                       {"nominal_variance_factor", c.estimators.nominal_variance_factor},
                       {"initial_state_std", c.estimators.initial_state_std},
                       {"initial_health_std", c.estimators.initial_health_std}};
  doc["load"] = {{"change_rate", c.load_change_rate},
                 {"amplitude_frac", c.load_amplitude_frac},
                 {"jitter_frac", c.load_jitter_frac},
                 {"estimate_noise_frac", c.power_estimate_noise_frac}};
  doc["controller"] = {{"kp", c.controller.kp},
                       {"ki", c.controller.ki},
                       {"u_min", c.controller.u_min},
                       {"u_max", c.controller.u_max},
                       {"measured_output", c.controller.measured_output},
                       {"actuated_input", c.controller.actuated_input}};
  doc["degradation"] = {{"mode", mode_name(c.degradation)},
                        {"k_c", c.coupling.k_compressor},
                        {"k_t", c.coupling.k_turbine}};
  doc["runs"] = {{"per_class", c.runs_per_class},
                 {"horizon", c.horizon},
                 {"ramp_start", c.ramp_start},
                 {"ramp_end", c.ramp_end},
                 {"window", c.window},
                 {"rmse_start", c.rmse_start},
                 {"seed", c.seed},
                 {"max_failure_fraction", c.max_failure_fraction}};
  return doc.dump(2);
}

void validate_scenario(const ScenarioConfig& c) {
  if (c.model_path.empty()) throw ConfigError("model path is empty");
  if (!std::filesystem::exists(c.resolved_model_path()))
    throw ConfigError("model file does not exist: " + c.resolved_model_path().string());
  if (!(c.process_noise_pct > 0)) throw ConfigError("noise.process_pct must be > 0");
  if (!(c.measurement_noise_pct > 0)) throw ConfigError("noise.measurement_pct must be > 0");
  if (!(c.health_noise_std >= 0)) throw ConfigError("noise.health_std must be >= 0");
  if (c.estimators.enabled.empty()) throw ConfigError("no estimators enabled");
  if (c.estimators.pe_nominal_variance < 0) throw ConfigError("pe_nominal_variance must be >= 0");
  if (!(c.estimators.nominal_variance_factor > 0))
    throw ConfigError("nominal_variance_factor must be > 0");
  if (!(c.estimators.initial_state_std >= 0) || !(c.estimators.initial_health_std >= 0))
    throw ConfigError("initial standard deviations must be >= 0");
  if (c.load_change_rate < 0 || c.load_amplitude_frac < 0 || c.load_jitter_frac < 0 ||
      c.power_estimate_noise_frac < 0)
    throw ConfigError("load parameters must be >= 0");
  if (!(c.controller.u_min < c.controller.u_max)) throw ConfigError("controller u_min >= u_max");
  if (c.runs_per_class == 0) throw ConfigError("runs.per_class must be > 0");
  if (c.ramp_end <= c.ramp_start) throw ConfigError("runs.ramp_end must exceed ramp_start");
  if (c.horizon < c.ramp_end) throw ConfigError("runs.horizon is shorter than the ramp");
  if (c.window == 0 || c.window > c.horizon) throw ConfigError("runs.window out of range");
  if (c.rmse_start >= c.horizon) throw ConfigError("runs.rmse_start out of range");
  if (!(c.max_failure_fraction >= 0)) throw ConfigError("max_failure_fraction must be >= 0");
}

GasGenModeld plant_model(const ScenarioConfig& c) {
  GasGenModeld m;
  try {
    m = load_model(c.resolved_model_path());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot load model: ") + e.what());
  }
  const Vector<double> q_std = m.ss.x.cwiseAbs() * (c.process_noise_pct / 100.0);
  const Vector<double> r_std = m.ss.y.cwiseAbs() * (c.measurement_noise_pct / 100.0);
  m.Q = q_std.cwiseAbs2().asDiagonal();
  m.R = r_std.cwiseAbs2().asDiagonal();
  m.Qh = Matrix<double>::Identity(m.ntheta(), m.ntheta()) * (c.health_noise_std * c.health_noise_std);
  return m;
}

GasGenModeld reduce_coupled(const GasGenModeld& m, const Coupling& k, double health_std) {
  if (m.ntheta() != 4) throw ConfigError("coupled mode needs health vector [ec, fc, et, ft]");
  GasGenModeld r = m;
  r.E.resize(m.nx(), 2);
  r.E.col(0) = m.E.col(0) + k.k_compressor * m.E.col(1);
  r.E.col(1) = m.E.col(2) + k.k_turbine * m.E.col(3);
  r.G.resize(m.ny(), 2);
  r.G.col(0) = m.G.col(0) + k.k_compressor * m.G.col(1);
  r.G.col(1) = m.G.col(2) + k.k_turbine * m.G.col(3);
  r.Qh = Matrix<double>::Identity(2, 2) * (health_std * health_std);
  r.ss.theta = Vector<double>::Ones(2);
  r.health_names = {m.health_names[0], m.health_names[2]};
  return r;
}

GasGenModeld estimator_model(const ScenarioConfig& c, const GasGenModeld& plant) {
  if (c.degradation == DegradationMode::Coupled)
    return reduce_coupled(plant, c.coupling, c.health_noise_std);
  return plant;
}

LoadConfig load_config(const ScenarioConfig& c, const GasGenModeld& plant) {
  const double pe_ss = std::abs(plant.ss.pe);
  LoadConfig l;
  l.change_rate = c.load_change_rate;
  l.amplitude = c.load_amplitude_frac * pe_ss;
  l.jitter_std = c.load_jitter_frac * pe_ss;
  l.estimate_std = c.power_estimate_noise_frac * pe_ss;
  return l;
}

PlantSimulationConfig plant_simulation_config(const ScenarioConfig& c, const GasGenModeld& plant) {
  PlantSimulationConfig p;
  p.horizon = c.horizon;
  p.ramp_start = c.ramp_start;
  p.ramp_end = c.ramp_end;
  p.load = load_config(c, plant);
  p.pi = c.controller;
  if (c.degradation == DegradationMode::Coupled) p.coupling = c.coupling;
  return p;
}

double nominal_variance(const ScenarioConfig& c, const GasGenModeld& plant) {
  if (c.estimators.pe_nominal_variance > 0) return c.estimators.pe_nominal_variance;
  return c.estimators.nominal_variance_factor * load_profile_variance(load_config(c, plant));
}

GaussianBeliefd initial_belief(const ScenarioConfig& c, const AugmentedModeld& aug) {
  GaussianBeliefd b;
  b.mean = Vector<double>::Zero(aug.size());
  Vector<double> var(aug.size());
  var.head(aug.nx).setConstant(c.estimators.initial_state_std * c.estimators.initial_state_std);
  var.tail(aug.ntheta).setConstant(c.estimators.initial_health_std * c.estimators.initial_health_std);
  b.cov = var.asDiagonal();
  return b;
}

RunRecord simulate_run(const ScenarioConfig& c, HealthClass health_class, std::uint64_t seed) {
  const GasGenModeld plant = plant_model(c);
  return simulate_run(plant, plant_simulation_config(c, plant), health_class, seed);
}

}  // namespace apufdi
