#include "apufdi/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "apufdi/errors.hpp"

namespace apufdi {

Engine make_engine(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Engine(seq);
}

double standard_normal(Engine& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double uniform(Engine& rng, double lo, double hi) {
  if (lo == hi) return lo;
  boost::random::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

GaussianSampler::GaussianSampler(const Matrix<double>& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("noise covariance must be square");
  if (!is_symmetric_psd(cov)) throw ModelError("noise covariance is not symmetric PSD");
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es((cov + cov.transpose()) / 2.0);
  const Vector<double> root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = es.eigenvectors() * root.asDiagonal();
  // Diagonal covariances (the common case) get an exactly diagonal factor.
  if (cov.isDiagonal(0.0)) factor_ = cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector<double> GaussianSampler::operator()(Engine& rng) const {
  Vector<double> z(factor_.cols());
  for (Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  return factor_ * z;
}

double ramp_value(double target, std::size_t step, std::size_t ramp_start, std::size_t ramp_end) {
  if (step <= ramp_start) return 1.0;
  if (step >= ramp_end) return target;
  const double frac = static_cast<double>(step - ramp_start) /
                      static_cast<double>(ramp_end - ramp_start);
  return 1.0 + (target - 1.0) * frac;
}

DegradationTrajectory make_degradation(const DegradationPlan& plan, std::size_t n_steps,
                                       Engine& rng) {
  if (plan.ramp_end <= plan.ramp_start)
    throw std::invalid_argument("degradation ramp must end after it starts");
  if (n_steps < plan.ramp_end)
    throw std::invalid_argument("horizon is shorter than the degradation ramp");
  if (plan.coupling && plan.classes.size() != 2)
    throw std::invalid_argument("coupled degradation takes exactly two classes (e_c, e_t)");

  DegradationTrajectory out;
  for (HealthClass c : plan.classes) {
    const ClassInterval range = sampling_interval(c);
    if (!(range.lower < range.upper) || range.lower < 0.0 || range.upper > 1.0)
      throw std::invalid_argument("invalid class interval");
    out.targets.push_back(uniform(rng, range.lower, range.upper));
  }

  const auto n = static_cast<Index>(n_steps);
  if (plan.coupling) {
    out.theta.resize(n, 4);
    const double kc = plan.coupling->k_compressor;
    const double kt = plan.coupling->k_turbine;
    for (Index k = 0; k < n; ++k) {
      const auto step = static_cast<std::size_t>(k);
      const double ec = ramp_value(out.targets[0], step, plan.ramp_start, plan.ramp_end);
      const double et = ramp_value(out.targets[1], step, plan.ramp_start, plan.ramp_end);
      out.theta(k, 0) = ec;
      out.theta(k, 1) = 1.0 - kc * (1.0 - ec);
      out.theta(k, 2) = et;
      out.theta(k, 3) = 1.0 - kt * (1.0 - et);
    }
  } else {
    const auto m = static_cast<Index>(plan.classes.size());
    out.theta.resize(n, m);
    for (Index k = 0; k < n; ++k)
      for (Index j = 0; j < m; ++j)
        out.theta(k, j) = ramp_value(out.targets[static_cast<std::size_t>(j)],
                                     static_cast<std::size_t>(k), plan.ramp_start, plan.ramp_end);
  }
  return out;
}

LoadProfile make_load_profile(const LoadConfig& config, std::size_t n_steps, Engine& rng) {
  if (config.change_rate < 0 || config.amplitude < 0 || config.jitter_std < 0 ||
      config.estimate_std < 0)
    throw std::invalid_argument("load profile parameters must be non-negative");

  LoadProfile out;
  out.truth.resize(n_steps);
  out.reported.resize(n_steps);
  out.reported_variance = config.estimate_std * config.estimate_std;

  double level = config.initial_level;
  const bool changes = config.change_rate > 0;
  boost::random::exponential_distribution<double> gap(changes ? config.change_rate : 1.0);
  double next_change = changes ? gap(rng) : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_steps; ++k) {
    while (static_cast<double>(k) >= next_change) {
      level = uniform(rng, -config.amplitude, config.amplitude);
      next_change += gap(rng);
    }
    const double jitter = config.jitter_std > 0 ? config.jitter_std * standard_normal(rng) : 0.0;
    out.truth[k] = level + jitter;
    const double noise = config.estimate_std > 0 ? config.estimate_std * standard_normal(rng) : 0.0;
    out.reported[k] = out.truth[k] + noise;
  }
  return out;
}

double load_profile_variance(const LoadConfig& config) {
  return config.amplitude * config.amplitude / 3.0 + config.jitter_std * config.jitter_std;
}

double pi_control(PIController& c, double speed_dev) {
  const double err = speed_dev - c.setpoint;
  const double candidate_integral = c.integral + err;
  const double u = -(c.kp * err + c.ki * candidate_integral);
  if (u > c.u_max) return c.u_max;
  if (u < c.u_min) return c.u_min;
  c.integral = candidate_integral;
  return u;
}

PlantStep step_plant(const Vector<double>& state, const GasGenModeld& model,
                     const Vector<double>& u, const Vector<double>& theta_dev, double pe_dev,
                     const Vector<double>& process_noise,
                     const Vector<double>& measurement_noise) {
  if (state.size() != model.nx() || u.size() != model.nu() || theta_dev.size() != model.ntheta() ||
      process_noise.size() != model.nx() || measurement_noise.size() != model.ny())
    throw DimensionError("step_plant: argument sizes do not match the model");
  if (!state.allFinite() || !u.allFinite() || !theta_dev.allFinite() || !std::isfinite(pe_dev))
    throw NonFiniteError("step_plant: non-finite input");

  PlantStep out;
  out.measurement = model.C * state + model.D * u + model.G * theta_dev + measurement_noise;
  out.next_state =
      model.A * state + model.B * u + model.E * theta_dev + model.F * pe_dev + process_noise;
  return out;
}

PlantNoise::PlantNoise(const GasGenModeld& model, std::uint64_t seed)
    : process_(model.Q),
      measurement_(model.R),
      process_rng_(make_engine(seed, RngStream::Process)),
      measurement_rng_(make_engine(seed, RngStream::Measurement)) {}

Vector<double> PlantNoise::process() { return process_(process_rng_); }
Vector<double> PlantNoise::measurement() { return measurement_(measurement_rng_); }

PlantStep step_plant(const Vector<double>& state, const GasGenModeld& model,
                     const Vector<double>& u, const Vector<double>& theta_dev, double pe_dev,
                     PlantNoise& noise) {
  const Vector<double> v = noise.measurement();
  const Vector<double> w = noise.process();
  return step_plant(state, model, u, theta_dev, pe_dev, w, v);
}

RunRecord simulate_run(const GasGenModeld& plant, const PlantSimulationConfig& config,
                       HealthClass health_class, std::uint64_t seed) {
  const PIConfig& pi = config.pi;
  if (pi.measured_output < 0 || pi.measured_output >= plant.ny() || pi.actuated_input < 0 ||
      pi.actuated_input >= plant.nu())
    throw ConfigError("PI controller channels are out of range");
  if ((plant.D.row(pi.measured_output).array() != 0.0).any())
    throw ConfigError("the speed channel used for control must have no feedthrough");
  if (config.coupling && plant.ntheta() != 4)
    throw ConfigError("coupled degradation needs the four-parameter health vector");

  const std::size_t n = config.horizon;
  RunRecord run;
  run.seed = seed;
  run.health_class = health_class;

  DegradationPlan plan;
  plan.ramp_start = config.ramp_start;
  plan.ramp_end = config.ramp_end;
  plan.coupling = config.coupling;
  plan.classes.assign(config.coupling ? 2 : static_cast<std::size_t>(plant.ntheta()), health_class);
  Engine degradation_rng = make_engine(seed, RngStream::Degradation);
  const DegradationTrajectory degradation = make_degradation(plan, n, degradation_rng);
  run.targets = degradation.targets;

  Engine load_rng = make_engine(seed, RngStream::Load);
  LoadProfile load = make_load_profile(config.load, n, load_rng);
  run.shaft_power = std::move(load.truth);
  run.shaft_power_reported = std::move(load.reported);
  run.shaft_power_variance = load.reported_variance;

  const auto steps = static_cast<Index>(n);
  run.state.resize(steps, plant.nx());
  run.theta.resize(steps, plant.ntheta());
  run.measurement.resize(steps, plant.ny());
  run.input.resize(steps, plant.nu());

  PlantNoise noise(plant, seed);
  PIController controller{pi.kp, pi.ki, pi.u_min, pi.u_max, 0.0, 0.0};
  const double limit = config.divergence_factor * plant.ss.x.cwiseAbs().maxCoeff();

  Vector<double> x = Vector<double>::Zero(plant.nx());
  Vector<double> u = Vector<double>::Zero(plant.nu());
  for (Index k = 0; k < steps; ++k) {
    const Vector<double> theta_dev = degradation.theta.row(k).transpose().array() - 1.0;
    const Vector<double> v = noise.measurement();
    const Vector<double> w = noise.process();
    // The regulated channel has no feedthrough, so it can be read before u is chosen.
    const double speed = plant.C.row(pi.measured_output).dot(x) +
                         plant.G.row(pi.measured_output).dot(theta_dev) + v(pi.measured_output);
    u.setZero();
    u(pi.actuated_input) = pi_control(controller, speed);

    PlantStep s;
    try {
      s = step_plant(x, plant, u, theta_dev, run.shaft_power[static_cast<std::size_t>(k)], w, v);
    } catch (const std::exception& e) {
      throw StepError(static_cast<std::size_t>(k), e.what());
    }
    run.state.row(k) = x.transpose();
    run.theta.row(k) = theta_dev.transpose();
    run.measurement.row(k) = s.measurement.transpose();
    run.input.row(k) = u.transpose();

    x = s.next_state;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > limit)
      throw DivergenceError(static_cast<std::size_t>(k), "plant state diverged");
  }
  return run;
}

std::vector<StepInputd> estimator_inputs(const RunRecord& run) {
  const std::size_t n = run.steps();
  std::vector<StepInputd> out(n);
  const Index nu = run.input.cols();
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = static_cast<Index>(k);
    StepInputd& in = out[k];
    if (k == 0) {
      in.transition_input = Vector<double>::Zero(nu);
      in.shaft_power = {0.0, run.shaft_power_variance};
    } else {
      in.transition_input = run.input.row(row - 1).transpose();
      in.shaft_power = {run.shaft_power_reported[k - 1], run.shaft_power_variance};
    }
    in.input = run.input.row(row).transpose();
    in.measurement = run.measurement.row(row).transpose();
  }
  return out;
}

}  // namespace apufdi
