#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "apufdi/estimator.hpp"
#include "apufdi/fdi.hpp"
#include "apufdi/model.hpp"

namespace apufdi {

// ---------------------------------------------------------------------------------------------
// Random streams
//
// Every run owns one std::mt19937_64 per noise source, seeded through std::seed_seq with
// {low 32 bits of the run seed, high 32 bits, stream id}. The run seed is master ^ run index.
// Distributions come from Boost.Random so draws do not depend on the standard library.

using Engine = std::mt19937_64;

enum class RngStream : std::uint32_t {
  Degradation = 1,
  Load = 2,
  Process = 3,
  Measurement = 4,
};

Engine make_engine(std::uint64_t seed, RngStream stream);

inline std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  return master_seed ^ run_index;
}

double standard_normal(Engine& rng);
double uniform(Engine& rng, double lo, double hi);

/// Draws from N(0, cov). The factor comes from an eigendecomposition, so singular PSD
/// covariances are fine.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix<double>& cov);
  Vector<double> operator()(Engine& rng) const;
  const Matrix<double>& factor() const { return factor_; }

 private:
  Matrix<double> factor_;
};

// ---------------------------------------------------------------------------------------------
// Degradation

/// Flow factor tied to efficiency: f = 1 - k (1 - e).
struct Coupling {
  double k_compressor = 1.0;
  double k_turbine = 1.0;

  bool operator==(const Coupling&) const = default;
};

/**
 * Degradation to inject in one run.
 *
 * Independent mode: one class per plant health parameter. Coupled mode: classes for
 * [e_c, e_t] only; the plant health vector must be ordered [e_c, f_c, e_t, f_t] and the flow
 * factors follow from the coupling at every step.
 */
struct DegradationPlan {
  std::vector<HealthClass> classes;
  std::size_t ramp_start = 200;
  std::size_t ramp_end = 2200;
  std::optional<Coupling> coupling;
};

struct DegradationTrajectory {
  std::vector<double> targets;  // absolute, one per class in the plan
  Eigen::MatrixXd theta;        // steps x plant health parameters, absolute
};

DegradationTrajectory make_degradation(const DegradationPlan& plan, std::size_t n_steps,
                                       Engine& rng);

/// Linear ramp from 1 at `ramp_start` to `target` at `ramp_end`, constant afterwards.
double ramp_value(double target, std::size_t step, std::size_t ramp_start, std::size_t ramp_end);

// ---------------------------------------------------------------------------------------------
// Shaft-power load

/// All quantities in watts (deviation from the steady-state power).
struct LoadConfig {
  double change_rate = 1.0 / 300.0;  // expected level changes per step
  double amplitude = 7500.0;         // new levels ~ U(-amplitude, amplitude)
  double jitter_std = 100.0;
  double estimate_std = 100.0;       // noise on the reported power estimate
  double initial_level = 0.0;
};

struct LoadProfile {
  std::vector<double> truth;
  std::vector<double> reported;
  double reported_variance = 0;
};

LoadProfile make_load_profile(const LoadConfig& config, std::size_t n_steps, Engine& rng);

/// Variance of the load profile's stationary distribution: amplitude^2 / 3 + jitter^2.
double load_profile_variance(const LoadConfig& config);

// ---------------------------------------------------------------------------------------------
// Speed regulator

struct PIController {
  double kp = 0;
  double ki = 0;
  double u_min = -std::numeric_limits<double>::infinity();
  double u_max = std::numeric_limits<double>::infinity();
  double setpoint = 0;
  double integral = 0;
};

/// u = -(kp e + ki sum(e)) with e = speed_dev - setpoint. The integrator only accumulates while
/// the output is inside [u_min, u_max].
double pi_control(PIController& controller, double speed_dev);

// ---------------------------------------------------------------------------------------------
// Plant

struct PlantStep {
  Vector<double> next_state;
  Vector<double> measurement;
};

/// One step of the deviation-form plant with the given noise realizations.
PlantStep step_plant(const Vector<double>& state, const GasGenModeld& model,
                     const Vector<double>& u, const Vector<double>& theta_dev, double pe_dev,
                     const Vector<double>& process_noise,
                     const Vector<double>& measurement_noise);

/// Process and measurement noise sources for one run.
class PlantNoise {
 public:
  PlantNoise(const GasGenModeld& model, std::uint64_t seed);
  Vector<double> process();
  Vector<double> measurement();

 private:
  GaussianSampler process_;
  GaussianSampler measurement_;
  Engine process_rng_;
  Engine measurement_rng_;
};

PlantStep step_plant(const Vector<double>& state, const GasGenModeld& model,
                     const Vector<double>& u, const Vector<double>& theta_dev, double pe_dev,
                     PlantNoise& noise);

struct PIConfig {
  double kp = 1e-4;
  double ki = 1e-5;
  double u_min = -2.0;
  double u_max = 2.0;
  Index measured_output = 0;
  Index actuated_input = 0;

  bool operator==(const PIConfig&) const = default;
};

struct PlantSimulationConfig {
  std::size_t horizon = 3000;
  std::size_t ramp_start = 200;
  std::size_t ramp_end = 2200;
  LoadConfig load;
  PIConfig pi;
  std::optional<Coupling> coupling;
  /// Abort when |x| exceeds this multiple of the steady-state reference.
  double divergence_factor = 10.0;
};

/// Ground truth, measurements and shaft-power reports of one closed-loop run (deviations).
struct RunRecord {
  std::uint64_t seed = 0;
  HealthClass health_class = HealthClass::Healthy;
  std::vector<double> targets;      // absolute degradation targets
  Eigen::MatrixXd state;            // steps x nx
  Eigen::MatrixXd theta;            // steps x plant health parameters
  Eigen::MatrixXd measurement;      // steps x ny
  Eigen::MatrixXd input;            // steps x nu
  std::vector<double> shaft_power;
  std::vector<double> shaft_power_reported;
  double shaft_power_variance = 0;

  std::size_t steps() const { return static_cast<std::size_t>(state.rows()); }
};

RunRecord simulate_run(const GasGenModeld& plant, const PlantSimulationConfig& config,
                       HealthClass health_class, std::uint64_t seed);

/// Filter inputs for a run: step k is driven by (u[k-1], reported Pe[k-1]) and updated with
/// (u[k], y[k]). Step 0 is driven by zero input and zero power.
std::vector<StepInputd> estimator_inputs(const RunRecord& run);

}  // namespace apufdi
