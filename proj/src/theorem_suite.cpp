#include "apufdi/theorem_suite.hpp"

#include <cmath>

#include <json.hpp>

#include "apufdi/errors.hpp"

namespace apufdi {
namespace {

Matrix<double> random_matrix(Index rows, Index cols, Engine& rng) {
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      double v = 0;
      while (std::abs(v) < 0.05) v = uniform(rng, -1.0, 1.0);
      m(i, j) = v;
    }
  return m;
}

Matrix<double> random_spd(Index n, double floor, Engine& rng) {
  const Matrix<double> a = random_matrix(n, n, rng);
  return a * a.transpose() + floor * Matrix<double>::Identity(n, n);
}

std::size_t pick(Engine& rng, std::size_t lo, std::size_t hi) {
  return std::min(hi, lo + static_cast<std::size_t>(uniform(rng, 0.0, 1.0) *
                                                    static_cast<double>(hi - lo + 1)));
}

}  // namespace

GasGenModeld random_model(Engine& rng) {
  const auto nx = static_cast<Index>(pick(rng, 1, 3));
  const auto nu = static_cast<Index>(pick(rng, 1, 2));
  const auto ny = static_cast<Index>(pick(rng, 1, 4));
  const auto nt = static_cast<Index>(pick(rng, 1, 4));

  GasGenModeld m;
  m.A = random_matrix(nx, nx, rng);
  const double radius = Eigen::EigenSolver<Matrix<double>>(m.A, false).eigenvalues().cwiseAbs().maxCoeff();
  m.A *= uniform(rng, 0.3, 0.98) / std::max(radius, 1e-6);
  m.B = random_matrix(nx, nu, rng);
  m.C = random_matrix(ny, nx, rng);
  m.D = random_matrix(ny, nu, rng);
  m.E = random_matrix(nx, nt, rng);
  m.F = random_matrix(nx, 1, rng).col(0);
  m.G = random_matrix(ny, nt, rng);
  m.Q = random_spd(nx, 0.01, rng) * uniform(rng, 0.01, 1.0);
  m.R = random_spd(ny, 0.05, rng) * uniform(rng, 0.01, 1.0);
  m.Qh = random_spd(nt, 1e-4, rng) * 1e-4;
  m.ss.x = Vector<double>::Ones(nx);
  m.ss.u = Vector<double>::Ones(nu);
  m.ss.y = Vector<double>::Ones(ny);
  m.ss.theta = Vector<double>::Ones(nt);
  m.ss.pe = 1.0;
  for (Index i = 0; i < nx; ++i) m.state_names.push_back("x" + std::to_string(i));
  for (Index i = 0; i < nu; ++i) m.input_names.push_back("u" + std::to_string(i));
  for (Index i = 0; i < ny; ++i) m.output_names.push_back("y" + std::to_string(i));
  for (Index i = 0; i < nt; ++i) m.health_names.push_back("h" + std::to_string(i));
  validate(m);
  return m;
}

std::vector<StepInputd> random_inputs(const GasGenModeld& m, std::size_t steps, double pe_variance,
                                      Engine& rng) {
  std::vector<StepInputd> out(steps);
  for (auto& in : out) {
    in.transition_input.resize(m.nu());
    in.input.resize(m.nu());
    in.measurement.resize(m.ny());
    for (Index i = 0; i < m.nu(); ++i) {
      in.transition_input(i) = standard_normal(rng);
      in.input(i) = standard_normal(rng);
    }
    for (Index i = 0; i < m.ny(); ++i) in.measurement(i) = 3.0 * standard_normal(rng);
    in.shaft_power = {2.0 * standard_normal(rng), pe_variance};
  }
  return out;
}

std::vector<double> theorem2_ladder(double profile_variance) {
  std::vector<double> out;
  for (int e = 2; e <= 14; ++e) out.push_back(std::pow(10.0, e) * profile_variance);
  return out;
}

TheoremSuiteReport run_theorem_suite(const ScenarioConfig& config,
                                     const TheoremSuiteOptions& options) {
  TheoremSuiteReport rep;
  const GasGenModeld plant = plant_model(config);
  const GasGenModeld est = estimator_model(config, plant);
  const AugmentedModeld aug = augment(est);
  const GaussianBeliefd init = initial_belief(config, aug);
  const double nominal = nominal_variance(config, plant);
  const LoadConfig load = load_config(config, plant);

  std::vector<StepInputd> inputs;
  try {
    const RunRecord run = simulate_run(plant, plant_simulation_config(config, plant),
                                       options.run_class, config.seed);
    inputs = estimator_inputs(run);
  } catch (const std::exception& e) {
    rep.errors.push_back(std::string("simulation: ") + e.what());
    return rep;
  }
  const std::span<const StepInputd> span(inputs);

  try {
    rep.theorem1 = check_theorem1(aug, init, span, {config.estimators.pe_nominal, nominal});
  } catch (const std::exception& e) {
    rep.errors.push_back(std::string("theorem 1: ") + e.what());
  }

  Engine rng = make_engine(options.seed.value_or(config.seed), RngStream::Degradation);
  for (std::size_t i = 0; i < options.random_models; ++i) {
    try {
      const GasGenModeld m = random_model(rng);
      const AugmentedModeld a = augment(m);
      const double pe_var = uniform(rng, 0.01, 1.0);
      const ShaftPowerInputd nom{uniform(rng, -1.0, 1.0), pe_var * uniform(rng, 2.0, 1e4)};
      const auto in = random_inputs(m, options.random_steps, pe_var, rng);
      GaussianBeliefd b0{Vector<double>::Zero(a.size()), Matrix<double>::Identity(a.size(), a.size())};
      const Theorem1Report r = check_theorem1(a, b0, std::span<const StepInputd>(in), nom);
      ++rep.theorem1_random.models;
      if (r.pass) ++rep.theorem1_random.passed;
      rep.theorem1_random.max_relative_gain_deviation =
          std::max(rep.theorem1_random.max_relative_gain_deviation, r.max_relative_gain_deviation);
      rep.theorem1_random.max_relative_cov_deviation =
          std::max(rep.theorem1_random.max_relative_cov_deviation, r.max_relative_cov_deviation);
    } catch (const std::exception& e) {
      ++rep.theorem1_random.models;
      rep.errors.push_back("random model " + std::to_string(i) + ": " + e.what());
    }
  }

  try {
    const std::vector<double> ladder = theorem2_ladder(load_profile_variance(load));
    rep.theorem2 = check_theorem2(aug, init, span, config.estimators.pe_nominal,
                                  std::span<const double>(ladder));
  } catch (const std::exception& e) {
    rep.errors.push_back(std::string("theorem 2: ") + e.what());
  }

  try {
    rep.theorem3 = check_theorem3(aug, init, span, nominal);
  } catch (const std::exception& e) {
    rep.errors.push_back(std::string("theorem 3: ") + e.what());
  }

  rep.pass = rep.errors.empty() && rep.theorem1 && rep.theorem1->pass &&
             rep.theorem1_random.passed == rep.theorem1_random.models && rep.theorem2 &&
             rep.theorem2->pass && rep.theorem3 && rep.theorem3->pass;
  return rep;
}

std::string theorem_report_json(const TheoremSuiteReport& r) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["pass"] = r.pass;
  doc["errors"] = r.errors;
  if (r.theorem1) {
    const auto& t = *r.theorem1;
    doc["theorem1"] = {{"pass", t.pass},
                       {"max_gain_deviation", t.max_gain_deviation},
                       {"max_cov_deviation", t.max_cov_deviation},
                       {"max_relative_gain_deviation", t.max_relative_gain_deviation},
                       {"max_relative_cov_deviation", t.max_relative_cov_deviation},
                       {"tolerance", t.tolerance},
                       {"gain_deviation", t.gain_deviation},
                       {"cov_deviation", t.cov_deviation}};
  }
  doc["theorem1_random"] = {{"models", r.theorem1_random.models},
                            {"passed", r.theorem1_random.passed},
                            {"max_relative_gain_deviation", r.theorem1_random.max_relative_gain_deviation},
                            {"max_relative_cov_deviation", r.theorem1_random.max_relative_cov_deviation}};
  if (r.theorem2) {
    const auto& t = *r.theorem2;
    doc["theorem2"] = {{"pass", t.pass},
                       {"monotone", t.monotone},
                       {"final_below_tolerance", t.final_below_tolerance},
                       {"bounded", t.bounded},
                       {"ladder", t.ladder},
                       {"delta", t.delta},
                       {"residual_gain_norm", t.residual_gain_norm},
                       {"max_posterior_variance", t.max_posterior_variance},
                       {"scale", t.scale},
                       {"final_tolerance", t.final_tolerance},
                       {"monotone_slack", t.monotone_slack}};
  }
  if (r.theorem3) {
    const auto& t = *r.theorem3;
    ordered_json last_pes = ordered_json::array();
    ordered_json last_mpes = ordered_json::array();
    if (!t.cee_pes.empty()) {
      for (Index i = 0; i < t.cee_pes.back().rows(); ++i) {
        last_pes.push_back(t.cee_pes.back()(i, i));
        last_mpes.push_back(t.cee_mpes.back()(i, i));
      }
    }
    doc["theorem3"] = {{"pass", t.pass},
                       {"ordering_ok", t.ordering_ok},
                       {"strict_ok", t.strict_ok},
                       {"psd_ordering_ok", t.psd_ordering_ok},
                       {"burn_in", t.burn_in},
                       {"diag_tolerance", t.diag_tolerance},
                       {"final_cee_pes_diagonal", last_pes},
                       {"final_cee_mpes_diagonal", last_mpes},
                       {"min_diag_difference", t.min_diag_difference},
                       {"min_eigen_difference", t.min_eigen_difference}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace apufdi
