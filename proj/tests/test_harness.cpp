#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "apufdi/errors.hpp"
#include "apufdi/harness.hpp"
#include "apufdi/scenario.hpp"
#include "apufdi/theorem_suite.hpp"
#include "apufdi/trace.hpp"
#include "test_support.hpp"

using namespace apufdi;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

ScenarioConfig small_case(int n, std::size_t per_class) {
  ScenarioConfig c = ts::case_config(n);
  c.runs_per_class = per_class;
  c.horizon = 1200;
  c.ramp_start = 100;
  c.ramp_end = 800;
  c.window = 200;
  c.rmse_start = 100;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("apufdi_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void expect_same_result(const ExperimentResult& a, const ExperimentResult& b) {
  EXPECT_EQ(metrics_json(a), metrics_json(b));
  ASSERT_EQ(a.summaries.size(), b.summaries.size());
  for (std::size_t i = 0; i < a.summaries.size(); ++i) {
    EXPECT_EQ(a.summaries[i].run_index, b.summaries[i].run_index);
    for (std::size_t e = 0; e < a.summaries[i].estimators.size(); ++e)
      EXPECT_EQ(a.summaries[i].estimators[e].squared_error_sum,
                b.summaries[i].estimators[e].squared_error_sum);
  }
}

}  // namespace

TEST(Scenario, ShippedCasesDifferAsDescribed) {
  const ScenarioConfig c1 = ts::case_config(1);
  const ScenarioConfig c2 = ts::case_config(2);
  const ScenarioConfig c3 = ts::case_config(3);
  EXPECT_EQ(c1.process_noise_pct, 0.5);
  EXPECT_EQ(c1.measurement_noise_pct, 0.5);
  EXPECT_EQ(c2.process_noise_pct, 0.1);
  EXPECT_EQ(c2.measurement_noise_pct, 0.5);
  EXPECT_EQ(c3.process_noise_pct, 0.1);
  EXPECT_EQ(c1.degradation, DegradationMode::Independent);
  EXPECT_EQ(c3.degradation, DegradationMode::Coupled);
  ScenarioConfig c2_as_c1 = c2;
  c2_as_c1.process_noise_pct = c1.process_noise_pct;
  c2_as_c1.case_id = c1.case_id;
  EXPECT_EQ(c2_as_c1, c1);
  EXPECT_EQ(c1.runs_per_class, 100u);
}

TEST(Scenario, JsonRoundTrip) {
  for (int n : {1, 2, 3}) {
    const ScenarioConfig c = ts::case_config(n);
    const ScenarioConfig back = parse_scenario(scenario_to_json(c), c.base_dir);
    EXPECT_EQ(back, c);
    EXPECT_EQ(scenario_to_json(back), scenario_to_json(c));
  }
}

TEST(Scenario, RejectsInvalidConfigs) {
  const ScenarioConfig base = ts::case_config(1);
  auto broken = [&](auto&& edit) {
    ScenarioConfig c = base;
    edit(c);
    return c;
  };
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.process_noise_pct = 0; })), ConfigError);
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.measurement_noise_pct = -1; })), ConfigError);
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.runs_per_class = 0; })), ConfigError);
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.horizon = 1000; })), ConfigError);
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.window = 0; })), ConfigError);
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.estimators.enabled.clear(); })), ConfigError);
  EXPECT_THROW(validate_scenario(broken([](auto& c) { c.model_path = "nowhere.json"; })), ConfigError);
  EXPECT_THROW(parse_scenario("{\"case_id\": \"x\"}", ts::source_dir()), ConfigError);
  EXPECT_THROW(parse_scenario("{not json", ts::source_dir()), ConfigError);
  nlohmann::json doc = nlohmann::json::parse(scenario_to_json(base));
  doc["degradation"]["mode"] = "sideways";
  EXPECT_THROW(parse_scenario(doc.dump(), base.base_dir), ConfigError);
  EXPECT_THROW(load_scenario(ts::source_dir() / "cases" / "missing.json"), ConfigError);
}

TEST(Scenario, NoiseLevelsFollowPercentages) {
  const ScenarioConfig c = ts::case_config(2);
  const GasGenModeld m = plant_model(c);
  EXPECT_NEAR(m.Q(0, 0), std::pow(0.001 * 24000.0, 2), 1e-9);
  EXPECT_NEAR(m.R(1, 1), std::pow(0.005 * 600.0, 2), 1e-12);
  EXPECT_NEAR(m.Qh(2, 2), c.health_noise_std * c.health_noise_std, 1e-20);
  EXPECT_NEAR(nominal_variance(c, m), 1e4 * load_profile_variance(load_config(c, m)), 1e-3);
}

TEST(Scenario, CoupledEstimatorUsesReducedHealthVector) {
  const ScenarioConfig c = ts::case_config(3);
  const GasGenModeld plant = plant_model(c);
  const GasGenModeld est = estimator_model(c, plant);
  ASSERT_EQ(est.ntheta(), 2);
  EXPECT_EQ(est.health_names, (std::vector<std::string>{"ec", "et"}));
  const double kc = c.coupling.k_compressor, kt = c.coupling.k_turbine;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.08, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double dec = u(rng), det = u(rng);
    Eigen::VectorXd full(4), reduced(2);
    full << dec, kc * dec, det, kt * det;
    reduced << dec, det;
    EXPECT_NEAR((plant.E * full - est.E * reduced).norm(), 0.0, 1e-10);
    EXPECT_NEAR((plant.G * full - est.G * reduced).norm(), 0.0, 1e-10);
  }
  const RunRecord r = simulate_run(c, HealthClass::MediumFault, 4);
  for (Eigen::Index k = 0; k < r.theta.rows(); ++k) {
    EXPECT_NEAR(r.theta(k, 1), kc * r.theta(k, 0), 1e-15);
    EXPECT_NEAR(r.theta(k, 3), kt * r.theta(k, 2), 1e-15);
  }
}

TEST(Harness, RunLayoutGroupsByClass) {
  const ScenarioConfig c = small_case(1, 3);
  EXPECT_EQ(run_class(c, 0), HealthClass::Healthy);
  EXPECT_EQ(run_class(c, 3), HealthClass::MinorFault);
  EXPECT_EQ(run_class(c, 8), HealthClass::MediumFault);
  EXPECT_EQ(run_class(c, 11), HealthClass::SevereFault);
}

TEST(Harness, SingleRunPerClassMatchesManualPipeline) {
  const ScenarioConfig c = small_case(1, 1);
  const ExperimentResult r = run_case(c);

  const GasGenModeld plant = plant_model(c);
  const AugmentedModeld aug = augment(estimator_model(c, plant));
  const GaussianBeliefd init = initial_belief(c, aug);
  const double nominal = nominal_variance(c, plant);
  const std::vector<EstimatorKindd> kinds{EstimatorKindd::pes(),
                                          EstimatorKindd::pens(c.estimators.pe_nominal, nominal)};
  std::vector<Eigen::VectorXd> sq(2, Eigen::VectorXd::Zero(aug.size()));
  std::vector<std::vector<ConfusionMatrix>> cms(2, std::vector<ConfusionMatrix>(4));
  std::size_t samples = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const HealthClass cls = kHealthClasses[i];
    const RunRecord rec = simulate_run(c, cls, run_seed(c.seed, i));
    const auto inputs = estimator_inputs(rec);
    samples += rec.steps() - c.rmse_start;
    for (std::size_t e = 0; e < kinds.size(); ++e) {
      const auto steps = run_estimator(kinds[e], aug, init, inputs);
      for (std::size_t k = c.rmse_start; k < steps.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        Eigen::VectorXd truth(aug.size());
        truth << rec.state.row(row).transpose(), rec.theta.row(row).transpose();
        sq[e] += (steps[k].posterior.mean - truth).array().square().matrix();
      }
      for (Eigen::Index j = 0; j < aug.ntheta; ++j) {
        double sum = 0;
        for (std::size_t k = steps.size() - c.window; k < steps.size(); ++k)
          sum += 1.0 + steps[k].posterior.mean(aug.nx + j);
        cms[e][static_cast<std::size_t>(j)].add(cls, classify_value(sum / static_cast<double>(c.window)));
      }
    }
  }
  for (std::size_t e = 0; e < 2; ++e) {
    const EstimatorMetrics& m = r.at(kinds[e].type);
    const Eigen::VectorXd rmse = (sq[e] / static_cast<double>(samples)).cwiseSqrt();
    for (Eigen::Index v = 0; v < rmse.size(); ++v) EXPECT_NEAR(m.rmse(v), rmse(v), 1e-9 * rmse(v));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(m.confusion[j].counts, cms[e][j].counts);
  }
  ASSERT_EQ(r.improvement.size(), 5u);
  for (std::size_t v = 0; v < 5; ++v)
    EXPECT_NEAR(r.improvement[v],
                100.0 * (r.at(EstimatorType::Pens).rmse(static_cast<Eigen::Index>(v)) -
                         r.at(EstimatorType::Pes).rmse(static_cast<Eigen::Index>(v))) /
                    r.at(EstimatorType::Pens).rmse(static_cast<Eigen::Index>(v)),
                1e-9);
  EXPECT_EQ(r.runs_total, 4u);
  EXPECT_EQ(r.runs_failed, 0u);
}

TEST(Harness, ExecutionOrderAndThreadsDoNotChangeResults) {
  const ScenarioConfig c = small_case(1, 3);
  const ExperimentResult serial = run_case(c);
  RunOptions shuffled;
  shuffled.execution_order.resize(c.runs_per_class * 4);
  std::iota(shuffled.execution_order.begin(), shuffled.execution_order.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.execution_order.begin(), shuffled.execution_order.end(), rng);
  expect_same_result(serial, run_case(c, shuffled));
  RunOptions parallel;
  parallel.jobs = 4;
  expect_same_result(serial, run_case(c, parallel));
}

TEST(Harness, RejectsBadExecutionOrder) {
  const ScenarioConfig c = small_case(1, 1);
  RunOptions o;
  o.execution_order = {0, 1, 1, 3};
  EXPECT_THROW(run_case(c, o), std::invalid_argument);
}

TEST(Harness, MetricsAreByteDeterministic) {
  const ScenarioConfig c = small_case(2, 2);
  const std::string a = metrics_json(run_case(c));
  const std::string b = metrics_json(run_case(c));
  EXPECT_EQ(a, b);
  ScenarioConfig other = c;
  other.seed = 43;
  EXPECT_NE(metrics_json(run_case(other)), a);
  const nlohmann::json doc = nlohmann::json::parse(a);
  EXPECT_EQ(doc["provenance"]["seed"], 42);
  EXPECT_EQ(doc["provenance"]["config_sha256"].get<std::string>().size(), 64u);
}

TEST(Harness, TraceRoundTripIsExact) {
  const CaseSetup s = CaseSetup::build(small_case(1, 1));
  const RunTrace t = execute_run(s, 2);
  std::stringstream buf;
  write_trace_csv(t, buf);
  const RunTrace back = read_trace_csv(buf);
  EXPECT_EQ(back.run_index, t.run_index);
  EXPECT_EQ(back.seed, t.seed);
  EXPECT_EQ(back.health_class, t.health_class);
  EXPECT_EQ(back.targets, t.targets);
  EXPECT_EQ(back.state, t.state);
  EXPECT_EQ(back.theta, t.theta);
  EXPECT_EQ(back.measurement, t.measurement);
  EXPECT_EQ(back.input, t.input);
  EXPECT_EQ(back.shaft_power, t.shaft_power);
  EXPECT_EQ(back.shaft_power_reported, t.shaft_power_reported);
  ASSERT_EQ(back.estimators.size(), t.estimators.size());
  for (std::size_t e = 0; e < t.estimators.size(); ++e) {
    EXPECT_EQ(back.estimators[e].type, t.estimators[e].type);
    EXPECT_EQ(back.estimators[e].mean, t.estimators[e].mean);
    EXPECT_EQ(back.estimators[e].variance, t.estimators[e].variance);
  }
  EXPECT_EQ(back.augmented_names(), t.augmented_names());
  EXPECT_EQ(trace_file_name(7), "trace_00007.csv");
}

TEST(Harness, ReportFromTracesMatchesRun) {
  const ScenarioConfig c = small_case(3, 2);
  const fs::path dir = scratch("traces");
  RunOptions o;
  o.trace_dir = dir;
  o.jobs = 2;
  const ExperimentResult live = run_case(c, o);
  const ExperimentResult replay = report_from_traces(c, dir);
  EXPECT_EQ(metrics_json(replay), metrics_json(live));
  EXPECT_EQ(live.health_names, (std::vector<std::string>{"ec", "et"}));

  fs::remove(dir / trace_file_name(5));
  EXPECT_THROW(report_from_traces(c, dir), FailureBudgetError);
  ScenarioConfig lenient = c;
  lenient.max_failure_fraction = 0.2;
  const ExperimentResult partial = report_from_traces(lenient, dir);
  EXPECT_EQ(partial.runs_failed, 1u);
  ASSERT_EQ(partial.failures.size(), 1u);
  EXPECT_EQ(partial.failures[0].run_index, 5u);
  fs::remove_all(dir);
}

TEST(Harness, FailureBudgetIsEnforced) {
  ScenarioConfig c = small_case(1, 1);
  c.controller.kp = -1.0;
  try {
    run_case(c);
    FAIL() << "expected FailureBudgetError";
  } catch (const FailureBudgetError& e) {
    EXPECT_EQ(e.failed(), 4u);
    EXPECT_EQ(e.total(), 4u);
  }
  c.max_failure_fraction = 1.0;
  const ExperimentResult r = run_case(c);
  EXPECT_EQ(r.runs_failed, 4u);
  for (const RunFailure& f : r.failures) EXPECT_FALSE(f.message.empty());
}

TEST(Harness, OutputsAreWritten) {
  const ScenarioConfig c = small_case(1, 1);
  const ExperimentResult r = run_case(c);
  const fs::path dir = scratch("outputs");
  write_outputs(r, dir);
  EXPECT_TRUE(fs::exists(dir / "metrics.json"));
  EXPECT_TRUE(fs::exists(dir / "tables.txt"));
  for (const char* p : {"ec", "fc", "et", "ft"})
    for (const char* e : {"pes", "pens"})
      EXPECT_TRUE(fs::exists(dir / (std::string("confusion_") + p + "_" + e + ".csv"))) << p << e;
  std::ifstream csv(dir / "confusion_ec_pes.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "actual,healthy,minor,medium,severe,samples");
  fs::remove_all(dir);
}

TEST(Harness, MpesCanBeEnabled) {
  ScenarioConfig c = small_case(1, 1);
  c.estimators.enabled = {EstimatorType::Pes, EstimatorType::Pens, EstimatorType::Mpes};
  const ExperimentResult r = run_case(c);
  ASSERT_NE(r.find(EstimatorType::Mpes), nullptr);
  c.estimators.enabled = {EstimatorType::Mpes};
  const ExperimentResult only = run_case(c);
  EXPECT_TRUE(only.improvement.empty());
}

TEST(TheoremSuite, PassesOnCase1) {
  TheoremSuiteOptions o;
  o.random_models = 10;
  const TheoremSuiteReport r = run_theorem_suite(ts::case_config(1), o);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.theorem1_random.passed, 10u);
  const nlohmann::json doc = nlohmann::json::parse(theorem_report_json(r));
  EXPECT_EQ(doc["pass"], true);
}

TEST(TheoremSuite, RandomModelsAreValid) {
  Engine rng = make_engine(1, RngStream::Degradation);
  for (int i = 0; i < 50; ++i) {
    const GasGenModeld m = random_model(rng);
    EXPECT_TRUE(structural_report(m).ok());
  }
  const auto ladder = theorem2_ladder(2.0);
  ASSERT_EQ(ladder.size(), 13u);
  EXPECT_EQ(ladder.front(), 200.0);
  EXPECT_NEAR(ladder.back(), 2e14, 1.0);
}

TEST(TheoremSuite, SmallNominalVarianceIsAHypothesisViolation) {
  ScenarioConfig c = ts::case_config(1);
  c.estimators.pe_nominal_variance = 1.0;
  TheoremSuiteOptions o;
  o.random_models = 0;
  const TheoremSuiteReport r = run_theorem_suite(c, o);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.theorem3.has_value());
  ASSERT_FALSE(r.errors.empty());
  EXPECT_NE(r.errors.back().find("theorem 3"), std::string::npos);
}
