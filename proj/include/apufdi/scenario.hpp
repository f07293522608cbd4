#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apufdi/estimator.hpp"
#include "apufdi/model.hpp"
#include "apufdi/plant.hpp"

namespace apufdi {

enum class DegradationMode { Independent, Coupled };

struct EstimatorSettings {
  std::vector<EstimatorType> enabled{EstimatorType::Pes, EstimatorType::Pens};
  double pe_nominal = 0.0;            // PeT, W deviation
  double pe_nominal_variance = 0.0;   // P^PeT; 0 selects nominal_variance_factor * profile variance
  double nominal_variance_factor = 1e4;
  double initial_state_std = 100.0;
  double initial_health_std = 0.01;

  bool operator==(const EstimatorSettings&) const = default;
};

/// One Monte Carlo case. Percentages are of the steady-state references, fractions are of Pe_ss.
struct ScenarioConfig {
  std::string case_id = "case1";
  std::filesystem::path model_path;
  std::filesystem::path base_dir;  // directory relative model paths resolve against

  double process_noise_pct = 0.5;
  double measurement_noise_pct = 0.5;
  double health_noise_std = 2e-4;

  EstimatorSettings estimators;

  double load_change_rate = 1.0 / 300.0;
  double load_amplitude_frac = 0.15;
  double load_jitter_frac = 0.002;
  double power_estimate_noise_frac = 0.002;

  PIConfig controller;

  DegradationMode degradation = DegradationMode::Independent;
  Coupling coupling;

  std::size_t runs_per_class = 100;
  std::size_t horizon = 3000;
  std::size_t ramp_start = 200;
  std::size_t ramp_end = 2200;
  std::size_t window = 500;
  std::size_t rmse_start = 200;
  std::uint64_t seed = 42;
  double max_failure_fraction = 0.01;

  std::filesystem::path resolved_model_path() const;
  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioConfig& config);

/// Throws ConfigError describing the first invalid field.
void validate_scenario(const ScenarioConfig& config);

/// The model file with Q, R and Qh replaced by the configured noise levels.
GasGenModeld plant_model(const ScenarioConfig& config);

/// Model the filters use. Identical to the plant in independent mode; in coupled mode the flow
/// factors are folded into the efficiencies: E' = [E_ec + k_c E_fc, E_et + k_t E_ft], likewise G.
GasGenModeld estimator_model(const ScenarioConfig& config, const GasGenModeld& plant);

/// Fold f = 1 - k (1 - e) into a four-parameter [e_c, f_c, e_t, f_t] model.
GasGenModeld reduce_coupled(const GasGenModeld& model, const Coupling& coupling, double health_std);

LoadConfig load_config(const ScenarioConfig& config, const GasGenModeld& plant);
PlantSimulationConfig plant_simulation_config(const ScenarioConfig& config,
                                              const GasGenModeld& plant);

/// P^PeT actually used by PENS and MPES.
double nominal_variance(const ScenarioConfig& config, const GasGenModeld& plant);

GaussianBeliefd initial_belief(const ScenarioConfig& config, const AugmentedModeld& aug);

RunRecord simulate_run(const ScenarioConfig& config, HealthClass health_class, std::uint64_t seed);

}  // namespace apufdi
