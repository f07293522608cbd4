#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "apufdi/estimator.hpp"
#include "apufdi/fdi.hpp"
#include "apufdi/model.hpp"
#include "apufdi/plant.hpp"

namespace apufdi {

struct EstimatorTrace {
  EstimatorType type = EstimatorType::Pes;
  Eigen::MatrixXd mean;      // steps x augmented size; health columns absolute
  Eigen::MatrixXd variance;  // posterior diagonal
};

/**
 * Everything recorded for one run. States, outputs, inputs and power are deviations from the
 * steady state; every health column (truth and estimates) is absolute, 1 = healthy.
 */
struct RunTrace {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  HealthClass health_class = HealthClass::Healthy;
  std::vector<double> targets;

  std::vector<std::string> state_names;
  std::vector<std::string> plant_health_names;
  std::vector<std::string> estimator_health_names;
  std::vector<std::string> output_names;
  std::vector<std::string> input_names;

  Eigen::MatrixXd state;
  Eigen::MatrixXd theta;  // plant health, absolute
  Eigen::MatrixXd measurement;
  Eigen::MatrixXd input;
  std::vector<double> shaft_power;
  std::vector<double> shaft_power_reported;

  std::vector<EstimatorTrace> estimators;

  std::size_t steps() const { return static_cast<std::size_t>(state.rows()); }
  std::vector<std::string> augmented_names() const;
  /// True values of the estimator's augmented variables (health absolute).
  Eigen::MatrixXd truth_augmented() const;
};

RunTrace make_trace(const RunRecord& run, const GasGenModeld& plant,
                    const GasGenModeld& estimator, std::size_t run_index);

void add_estimator(RunTrace& trace, EstimatorType type, const std::vector<StepResultd>& steps);

void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
RunTrace read_trace_csv(std::istream& in);
RunTrace read_trace_csv(const std::filesystem::path& path);

std::string trace_file_name(std::size_t run_index);

}  // namespace apufdi
