#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "apufdi/estimator.hpp"
#include "apufdi/fdi.hpp"
#include "apufdi/scenario.hpp"
#include "apufdi/trace.hpp"

namespace apufdi {

/// Models and settings shared by every run of a case.
struct CaseSetup {
  ScenarioConfig config;
  GasGenModeld plant;
  GasGenModeld estimator;
  AugmentedModeld aug;
  PlantSimulationConfig simulation;
  GaussianBeliefd init;
  double nominal_variance = 0;

  static CaseSetup build(const ScenarioConfig& config);
  EstimatorKindd kind(EstimatorType type) const;
  std::size_t total_runs() const { return 4 * config.runs_per_class; }
};

/// Class of run `index`: runs are grouped by class in the order healthy, minor, medium, severe.
HealthClass run_class(const ScenarioConfig& config, std::size_t run_index);

/// Simulates run `run_index` and runs every enabled estimator on it.
RunTrace execute_run(const CaseSetup& setup, std::size_t run_index);

struct EstimatorRunSummary {
  EstimatorType type = EstimatorType::Pes;
  Eigen::VectorXd squared_error_sum;  // per augmented variable over the RMSE window
  std::size_t samples = 0;
  std::vector<HealthClass> predicted; // per estimated health parameter
};

struct RunSummary {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  HealthClass health_class = HealthClass::Healthy;
  std::vector<EstimatorRunSummary> estimators;
};

struct SummaryWindows {
  std::size_t rmse_start = 200;
  std::size_t classification_window = 500;
};

/// Reduces one run to what the case aggregates need. Used for fresh runs and retained traces.
RunSummary summarize_run(const RunTrace& trace, const SummaryWindows& windows);

struct RunFailure {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  HealthClass health_class = HealthClass::Healthy;
  std::string message;
};

struct EstimatorMetrics {
  EstimatorType type = EstimatorType::Pes;
  Eigen::VectorXd rmse;                          // per augmented variable
  std::vector<ConfusionMatrix> confusion;        // per health parameter
  std::vector<ClassificationMetrics> classification;
  double macro_precision = 0;                    // means over health parameters
  double macro_recall = 0;
  double macro_f1 = 0;
  double severe_recall = 0;                      // pooled over health parameters
};

struct Provenance {
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::string version;
};

struct ExperimentResult {
  ScenarioConfig config;
  std::vector<std::string> variables;      // augmented variable names
  std::vector<std::string> health_names;   // estimated health parameters
  std::vector<EstimatorMetrics> estimators;
  /// PES over PENS per variable, in percent. Empty unless both ran.
  std::vector<double> improvement;
  std::size_t runs_total = 0;
  std::size_t runs_failed = 0;
  std::vector<RunFailure> failures;
  std::vector<RunSummary> summaries;       // successful runs, by run index
  Provenance provenance;

  const EstimatorMetrics* find(EstimatorType type) const;
  const EstimatorMetrics& at(EstimatorType type) const;
};

/// Deterministic fold of run summaries (any order in, run-index order used).
ExperimentResult aggregate(const ScenarioConfig& config, std::vector<std::string> variables,
                           std::vector<std::string> health_names,
                           std::vector<RunSummary> summaries, std::vector<RunFailure> failures,
                           std::size_t runs_total);

struct RunOptions {
  std::size_t jobs = 1;
  std::optional<std::filesystem::path> trace_dir;
  /// Execution order of run indices; empty means ascending. Must be a permutation.
  std::vector<std::size_t> execution_order;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Full Monte Carlo case. Throws FailureBudgetError when too many runs fail.
ExperimentResult run_case(const ScenarioConfig& config, const RunOptions& options = {});

/// Re-aggregates a case from retained trace files in `trace_dir`.
ExperimentResult report_from_traces(const ScenarioConfig& config,
                                    const std::filesystem::path& trace_dir);

/// SHA-256 of the serialized config and the model file it references.
std::string config_sha256(const ScenarioConfig& config);

std::string metrics_json(const ExperimentResult& result);
std::string render_tables(const ExperimentResult& result);
std::string confusion_csv(const ConfusionMatrix& cm);

/// Writes metrics.json, confusion_<param>_<estimator>.csv and tables.txt.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace apufdi
