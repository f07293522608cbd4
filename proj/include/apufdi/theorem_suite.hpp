#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apufdi/plant.hpp"
#include "apufdi/scenario.hpp"
#include "apufdi/theorems.hpp"

namespace apufdi {

struct TheoremSuiteOptions {
  std::size_t random_models = 100;
  std::size_t random_steps = 60;
  /// Seed for the randomized models; the config seed when unset.
  std::optional<std::uint64_t> seed;
  /// Degradation class of the simulated run the checks are driven by.
  HealthClass run_class = HealthClass::MediumFault;
};

struct RandomSweepReport {
  std::size_t models = 0;
  std::size_t passed = 0;
  double max_relative_gain_deviation = 0;
  double max_relative_cov_deviation = 0;
};

struct TheoremSuiteReport {
  bool pass = false;
  std::optional<Theorem1Report> theorem1;
  RandomSweepReport theorem1_random;
  std::optional<Theorem2Report> theorem2;
  std::optional<Theorem3Report> theorem3;
  std::vector<std::string> errors;
};

/// A random model that passes validate(): stable A, dense nonzero F, C and G, PD R.
GasGenModeld random_model(Engine& rng);

/// Random filter inputs for `model`, shaft-power variance `pe_variance`.
std::vector<StepInputd> random_inputs(const GasGenModeld& model, std::size_t steps,
                                      double pe_variance, Engine& rng);

/// {1e2, 1e3, ..., 1e14} times `profile_variance`.
std::vector<double> theorem2_ladder(double profile_variance);

TheoremSuiteReport run_theorem_suite(const ScenarioConfig& config,
                                     const TheoremSuiteOptions& options = {});

std::string theorem_report_json(const TheoremSuiteReport& report);

}  // namespace apufdi
