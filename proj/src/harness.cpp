#include "apufdi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "apufdi/errors.hpp"

namespace apufdi {

CaseSetup CaseSetup::build(const ScenarioConfig& config) {
  validate_scenario(config);
  CaseSetup s;
  s.config = config;
  s.plant = plant_model(config);
  s.estimator = estimator_model(config, s.plant);
  s.aug = augment(s.estimator);
  s.simulation = plant_simulation_config(config, s.plant);
  s.init = initial_belief(config, s.aug);
  s.nominal_variance = apufdi::nominal_variance(config, s.plant);
  return s;
}

EstimatorKindd CaseSetup::kind(EstimatorType type) const {
  switch (type) {
    case EstimatorType::Pes: return EstimatorKindd::pes();
    case EstimatorType::Pens:
      return EstimatorKindd::pens(config.estimators.pe_nominal, nominal_variance);
    case EstimatorType::Mpes: return EstimatorKindd::mpes(nominal_variance);
  }
  throw std::logic_error("unhandled estimator type");
}

HealthClass run_class(const ScenarioConfig& config, std::size_t run_index) {
  const std::size_t c = run_index / config.runs_per_class;
  if (c >= kHealthClasses.size()) throw std::out_of_range("run index beyond the case");
  return kHealthClasses[c];
}

RunTrace execute_run(const CaseSetup& setup, std::size_t run_index) {
  const HealthClass cls = run_class(setup.config, run_index);
  const std::uint64_t seed = run_seed(setup.config.seed, run_index);
  const RunRecord run = simulate_run(setup.plant, setup.simulation, cls, seed);
  RunTrace trace = make_trace(run, setup.plant, setup.estimator, run_index);
  const std::vector<StepInputd> inputs = estimator_inputs(run);
  for (EstimatorType type : setup.config.estimators.enabled) {
    try {
      add_estimator(trace, type, run_estimator(setup.kind(type), setup.aug, setup.init, inputs));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(to_string(type)) + ": " + e.what());
    }
  }
  return trace;
}

RunSummary summarize_run(const RunTrace& trace, const SummaryWindows& w) {
  const std::size_t n = trace.steps();
  if (w.rmse_start >= n) throw std::invalid_argument("RMSE window starts after the run ends");
  if (w.classification_window == 0 || w.classification_window > n)
    throw std::invalid_argument("classification window does not fit the run");

  RunSummary s;
  s.run_index = trace.run_index;
  s.seed = trace.seed;
  s.health_class = trace.health_class;

  const Eigen::MatrixXd truth = trace.truth_augmented();
  const auto first = static_cast<Index>(w.rmse_start);
  const auto count = static_cast<Index>(n) - first;
  const auto nx = static_cast<Index>(trace.state_names.size());
  const StepWindow window{n - w.classification_window, n};

  for (const EstimatorTrace& e : trace.estimators) {
    EstimatorRunSummary r;
    r.type = e.type;
    r.samples = static_cast<std::size_t>(count);
    r.squared_error_sum =
        (e.mean.bottomRows(count) - truth.bottomRows(count)).array().square().colwise().sum().transpose();
    for (Index j = nx; j < e.mean.cols(); ++j) {
      const Eigen::VectorXd col = e.mean.col(j);
      r.predicted.push_back(classify(std::span<const double>(col.data(), n), window));
    }
    s.estimators.push_back(std::move(r));
  }
  return s;
}

const EstimatorMetrics* ExperimentResult::find(EstimatorType type) const {
  for (const auto& e : estimators)
    if (e.type == type) return &e;
  return nullptr;
}

const EstimatorMetrics& ExperimentResult::at(EstimatorType type) const {
  const EstimatorMetrics* e = find(type);
  if (!e) throw std::out_of_range("estimator " + std::string(to_string(type)) + " did not run");
  return *e;
}

ExperimentResult aggregate(const ScenarioConfig& config, std::vector<std::string> variables,
                           std::vector<std::string> health_names,
                           std::vector<RunSummary> summaries, std::vector<RunFailure> failures,
                           std::size_t runs_total) {
  std::sort(summaries.begin(), summaries.end(),
            [](const RunSummary& a, const RunSummary& b) { return a.run_index < b.run_index; });
  std::sort(failures.begin(), failures.end(),
            [](const RunFailure& a, const RunFailure& b) { return a.run_index < b.run_index; });

  ExperimentResult out;
  out.config = config;
  out.variables = std::move(variables);
  out.health_names = std::move(health_names);
  out.runs_total = runs_total;
  out.runs_failed = failures.size();
  out.failures = std::move(failures);

  const auto nv = static_cast<Index>(out.variables.size());
  const std::size_t nh = out.health_names.size();
  for (EstimatorType type : config.estimators.enabled) {
    EstimatorMetrics m;
    m.type = type;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(nv);
    std::size_t samples = 0;
    m.confusion.assign(nh, ConfusionMatrix{});
    for (const RunSummary& s : summaries) {
      for (const EstimatorRunSummary& e : s.estimators) {
        if (e.type != type) continue;
        if (e.squared_error_sum.size() != nv || e.predicted.size() != nh)
          throw DimensionError("run summary does not match the case variables");
        sq += e.squared_error_sum;
        samples += e.samples;
        for (std::size_t j = 0; j < nh; ++j) m.confusion[j].add(s.health_class, e.predicted[j]);
      }
    }
    m.rmse = samples > 0 ? (sq / static_cast<double>(samples)).cwiseSqrt().eval()
                         : Eigen::VectorXd::Constant(nv, std::nan(""));
    std::int64_t severe_hits = 0;
    std::int64_t severe_total = 0;
    for (const ConfusionMatrix& cm : m.confusion) {
      const ClassificationMetrics c = macro_metrics(cm);
      m.classification.push_back(c);
      m.macro_precision += c.macro_precision;
      m.macro_recall += c.macro_recall;
      m.macro_f1 += c.macro_f1;
      const int sev = static_cast<int>(HealthClass::SevereFault);
      severe_hits += cm.counts(sev, sev);
      severe_total += cm.row_total(HealthClass::SevereFault);
    }
    if (nh > 0) {
      m.macro_precision /= static_cast<double>(nh);
      m.macro_recall /= static_cast<double>(nh);
      m.macro_f1 /= static_cast<double>(nh);
    }
    m.severe_recall =
        severe_total > 0 ? static_cast<double>(severe_hits) / static_cast<double>(severe_total) : 0.0;
    out.estimators.push_back(std::move(m));
  }

  const EstimatorMetrics* pes = out.find(EstimatorType::Pes);
  const EstimatorMetrics* pens = out.find(EstimatorType::Pens);
  if (pes && pens && !summaries.empty())
    for (Index i = 0; i < nv; ++i) out.improvement.push_back(improvement(pens->rmse(i), pes->rmse(i)));

  out.summaries = std::move(summaries);
  out.provenance.config_sha256 = config_sha256(config);
  out.provenance.seed = config.seed;
  out.provenance.version = APUFDI_VERSION;
  return out;
}

namespace {

SummaryWindows windows_of(const ScenarioConfig& c) { return {c.rmse_start, c.window}; }

void enforce_budget(const ScenarioConfig& c, std::size_t failed, std::size_t total) {
  if (static_cast<double>(failed) > c.max_failure_fraction * static_cast<double>(total))
    throw FailureBudgetError(failed, total);
}

}  // namespace

ExperimentResult run_case(const ScenarioConfig& config, const RunOptions& options) {
  const CaseSetup setup = CaseSetup::build(config);
  const std::size_t total = setup.total_runs();

  std::vector<std::size_t> order = options.execution_order;
  if (order.empty()) {
    order.resize(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i || sorted.size() != total)
        throw std::invalid_argument("execution order is not a permutation of the runs");
  }
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  std::vector<std::optional<RunSummary>> summaries(total);
  std::vector<std::optional<RunFailure>> failures(total);
  std::vector<std::string> variables;
  std::mutex names_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t pos = next++; pos < total; pos = next++) {
      const std::size_t idx = order[pos];
      try {
        const RunTrace trace = execute_run(setup, idx);
        if (options.trace_dir) write_trace_csv(trace, *options.trace_dir / trace_file_name(idx));
        summaries[idx] = summarize_run(trace, windows_of(config));
        std::lock_guard lock(names_mutex);
        if (variables.empty()) variables = trace.augmented_names();
      } catch (const std::exception& e) {
        failures[idx] = RunFailure{idx, run_seed(config.seed, idx), run_class(config, idx), e.what()};
      }
      const std::size_t d = ++done;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(d, total);
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, total));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<RunSummary> ok;
  std::vector<RunFailure> failed;
  for (std::size_t i = 0; i < total; ++i) {
    if (summaries[i]) ok.push_back(std::move(*summaries[i]));
    if (failures[i]) failed.push_back(std::move(*failures[i]));
  }
  enforce_budget(config, failed.size(), total);
  if (variables.empty()) {
    variables = setup.estimator.state_names;
    variables.insert(variables.end(), setup.estimator.health_names.begin(),
                     setup.estimator.health_names.end());
  }
  return aggregate(config, std::move(variables), setup.estimator.health_names, std::move(ok),
                   std::move(failed), total);
}

ExperimentResult report_from_traces(const ScenarioConfig& config,
                                    const std::filesystem::path& trace_dir) {
  validate_scenario(config);
  if (!std::filesystem::is_directory(trace_dir))
    throw ConfigError("trace directory does not exist: " + trace_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(trace_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no retained traces in " + trace_dir.string());

  const std::size_t total = 4 * config.runs_per_class;
  std::vector<bool> seen(total, false);
  std::vector<RunSummary> ok;
  std::vector<std::string> variables;
  std::vector<std::string> health;
  for (const auto& f : files) {
    const RunTrace t = read_trace_csv(f);
    if (t.run_index >= total) throw ConfigError(f.string() + " does not belong to this case");
    if (variables.empty()) {
      variables = t.augmented_names();
      health = t.estimator_health_names;
    }
    seen[t.run_index] = true;
    ok.push_back(summarize_run(t, windows_of(config)));
  }
  std::vector<RunFailure> failed;
  for (std::size_t i = 0; i < total; ++i)
    if (!seen[i])
      failed.push_back({i, run_seed(config.seed, i), run_class(config, i), "no retained trace"});
  enforce_budget(config, failed.size(), total);
  return aggregate(config, std::move(variables), std::move(health), std::move(ok),
                   std::move(failed), total);
}

std::string config_sha256(const ScenarioConfig& config) {
  std::string payload = scenario_to_json(config);
  std::ifstream model(config.resolved_model_path(), std::ios::binary);
  if (model) {
    std::ostringstream bytes;
    bytes << model.rdbuf();
    payload += '\n';
    payload += bytes.str();
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Eigen::Matrix4d& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < 4; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
  return rows;
}

ordered_json counts_json(const ConfusionMatrix& cm) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < 4; ++i)
    rows.push_back({cm.counts(i, 0), cm.counts(i, 1), cm.counts(i, 2), cm.counts(i, 3)});
  return rows;
}

}  // namespace

std::string metrics_json(const ExperimentResult& r) {
  ordered_json doc;
  doc["case_id"] = r.config.case_id;
  doc["provenance"] = {{"config_sha256", r.provenance.config_sha256},
                       {"seed", r.provenance.seed},
                       {"version", r.provenance.version}};
  doc["runs"] = {{"per_class", r.config.runs_per_class},
                 {"total", r.runs_total},
                 {"failed", r.runs_failed}};
  ordered_json failures = ordered_json::array();
  for (const auto& f : r.failures)
    failures.push_back({{"run", f.run_index},
                        {"seed", f.seed},
                        {"class", std::string(to_string(f.health_class))},
                        {"error", f.message}});
  doc["failures"] = failures;
  doc["variables"] = r.variables;

  ordered_json classes = ordered_json::array();
  for (HealthClass c : kHealthClasses) classes.push_back(std::string(to_string(c)));
  doc["classes"] = classes;

  ordered_json ests = ordered_json::object();
  for (const EstimatorMetrics& m : r.estimators) {
    ordered_json e;
    ordered_json rmse = ordered_json::object();
    for (std::size_t i = 0; i < r.variables.size(); ++i)
      rmse[r.variables[i]] = m.rmse(static_cast<Index>(i));
    e["rmse"] = rmse;
    e["macro_precision"] = m.macro_precision;
    e["macro_recall"] = m.macro_recall;
    e["macro_f1"] = m.macro_f1;
    e["severe_recall"] = m.severe_recall;
    ordered_json per = ordered_json::object();
    for (std::size_t j = 0; j < r.health_names.size(); ++j) {
      const ClassificationMetrics& c = m.classification[j];
      ordered_json p;
      p["macro_precision"] = c.macro_precision;
      p["macro_recall"] = c.macro_recall;
      p["macro_f1"] = c.macro_f1;
      p["accuracy"] = c.accuracy;
      p["precision"] = c.precision;
      p["recall"] = c.recall;
      p["f1"] = c.f1;
      p["confusion_counts"] = counts_json(m.confusion[j]);
      p["confusion_rates"] = matrix_json(m.confusion[j].rates());
      per[r.health_names[j]] = p;
    }
    e["health"] = per;
    ests[std::string(to_string(m.type))] = e;
  }
  doc["estimators"] = ests;

  if (!r.improvement.empty()) {
    ordered_json imp = ordered_json::object();
    for (std::size_t i = 0; i < r.variables.size(); ++i) imp[r.variables[i]] = r.improvement[i];
    doc["improvement_pct"] = imp;
  }
  return doc.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "actual";
  for (HealthClass c : kHealthClasses) out += fmt::format(",{}", to_string(c));
  out += ",samples\n";
  const Eigen::Matrix4d rates = cm.rates();
  for (int i = 0; i < 4; ++i) {
    out += std::string(to_string(kHealthClasses[static_cast<std::size_t>(i)]));
    for (int j = 0; j < 4; ++j) out += fmt::format(",{:.4f}", rates(i, j));
    out += fmt::format(",{}\n", cm.counts.row(i).sum());
  }
  return out;
}

std::string render_tables(const ExperimentResult& r) {
  std::string out;
  out += fmt::format("case {}  runs {}/{} ok  seed {}\n\n", r.config.case_id,
                     r.runs_total - r.runs_failed, r.runs_total, r.config.seed);

  out += "RMSE\n";
  out += fmt::format("{:<10}", "variable");
  for (const auto& m : r.estimators) out += fmt::format("{:>14}", to_string(m.type));
  if (!r.improvement.empty()) out += fmt::format("{:>16}", "improvement %");
  out += '\n';
  for (std::size_t i = 0; i < r.variables.size(); ++i) {
    out += fmt::format("{:<10}", r.variables[i]);
    for (const auto& m : r.estimators) out += fmt::format("{:>14.4e}", m.rmse(static_cast<Index>(i)));
    if (!r.improvement.empty()) out += fmt::format("{:>16.2f}", r.improvement[i]);
    out += '\n';
  }

  for (std::size_t j = 0; j < r.health_names.size(); ++j) {
    out += fmt::format("\nconfusion for {} (rows actual, columns estimated)\n", r.health_names[j]);
    out += fmt::format("{:<10}", "");
    for (HealthClass c : kHealthClasses) out += fmt::format("{:>16}", to_string(c));
    out += '\n';
    std::vector<Eigen::Matrix4d> rates;
    std::string names;
    for (const auto& m : r.estimators) {
      rates.push_back(m.confusion[j].rates());
      names += (names.empty() ? "" : "/") + std::string(to_string(m.type));
    }
    for (int a = 0; a < 4; ++a) {
      out += fmt::format("{:<10}", to_string(kHealthClasses[static_cast<std::size_t>(a)]));
      for (int e = 0; e < 4; ++e) {
        std::string cell;
        for (std::size_t k = 0; k < rates.size(); ++k)
          cell += fmt::format("{}{:.2f}", k ? "/" : "", rates[k](a, e));
        out += fmt::format("{:>16}", cell);
      }
      out += '\n';
    }
    out += fmt::format("cells are {}\n", names);
  }

  out += "\nFDI metrics (macro, mean over health parameters)\n";
  out += fmt::format("{:<10}{:>12}{:>12}{:>12}{:>16}\n", "estimator", "precision", "recall", "f1",
                     "severe recall");
  for (const auto& m : r.estimators)
    out += fmt::format("{:<10}{:>12.4f}{:>12.4f}{:>12.4f}{:>16.4f}\n", to_string(m.type),
                       m.macro_precision, m.macro_recall, m.macro_f1, m.severe_recall);
  return out;
}

void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  write("metrics.json", metrics_json(r));
  write("tables.txt", render_tables(r));
  for (const auto& m : r.estimators)
    for (std::size_t j = 0; j < r.health_names.size(); ++j)
      write(fmt::format("confusion_{}_{}.csv", r.health_names[j], to_string(m.type)),
            confusion_csv(m.confusion[j]));
}

}  // namespace apufdi
