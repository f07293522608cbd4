#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "apufdi/errors.hpp"
#include "apufdi/harness.hpp"
#include "apufdi/model.hpp"
#include "apufdi/scenario.hpp"
#include "apufdi/theorem_suite.hpp"
#include "apufdi/trace.hpp"

namespace fs = std::filesystem;
using namespace apufdi;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

int fail(const std::string& kind, const std::string& message, int code,
         const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
  err.update(extra);
  std::cerr << err.dump() << std::endl;
  return code;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string estimators;
};

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = load_scenario(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.estimators.empty()) {
    cfg.estimators.enabled.clear();
    std::stringstream list(c.estimators);
    std::string name;
    try {
      while (std::getline(list, name, ','))
        if (!name.empty()) cfg.estimators.enabled.push_back(parse_estimator_type(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    validate_scenario(cfg);
  }
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void print_summary(const ExperimentResult& r) {
  std::cout << render_tables(r);
  if (r.runs_failed > 0) std::cout << fmt::format("\n{} runs failed\n", r.runs_failed);
}

int cmd_validate(const std::string& path) {
  GasGenModeld m = load_model(path, false);
  const StructuralReport rep = structural_report(m);
  auto flag = [](bool ok) { return ok ? "ok" : "FAIL"; };
  std::cout << fmt::format("model {}\n", path);
  std::cout << fmt::format("  dimensions nx={} nu={} ny={} ntheta={}  {}\n", m.nx(), m.nu(), m.ny(),
                           m.ntheta(), rep.dimensions_ok ? "ok" : rep.dimension_error);
  if (rep.dimensions_ok) {
    std::cout << fmt::format("  finite entries          {}\n", flag(rep.finite));
    std::cout << fmt::format("  F entries nonzero       {}\n", flag(rep.f_all_nonzero));
    std::cout << fmt::format("  C rows nonzero          {}\n", flag(rep.c_rows_nonzero));
    std::cout << fmt::format("  G columns nonzero       {}\n", flag(rep.g_columns_nonzero));
    std::cout << fmt::format("  Q symmetric PSD         {}\n", flag(rep.q_psd));
    std::cout << fmt::format("  R symmetric PSD         {}\n", flag(rep.r_psd));
    std::cout << fmt::format("  Qh symmetric PSD        {}\n", flag(rep.qh_psd));
  }
  std::cout << (rep.ok() ? "OK\n" : "INVALID\n");
  if (!rep.ok()) return fail("model", "model failed structural checks", kExitFailure);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shaft-power-informed health estimation and fault diagnosis for an APU gas generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", APUFDI_VERSION);

  Common common;
  std::size_t jobs = 1;
  bool retain = false;
  std::string health_class = "medium";
  std::size_t run_index = 0;
  std::size_t random_models = 100;
  std::string traces;
  std::string model_path;

  auto add_common = [&](CLI::App* sub, bool with_estimators) {
    sub->add_option("--config", common.config, "Scenario config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--out", common.out, "Output directory");
    if (with_estimators)
      sub->add_option("--estimators", common.estimators, "Comma-separated subset of pes,pens,mpes");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate one run and write its trace");
  add_common(simulate, true);
  simulate->add_option("--class", health_class, "healthy, minor, medium or severe");
  simulate->add_option("--run", run_index, "Run index within the class (selects the seed)");

  CLI::App* run_case_cmd = app.add_subcommand("case", "Run a full Monte Carlo case");
  add_common(run_case_cmd, true);
  run_case_cmd->add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)");
  run_case_cmd->add_flag("--retain-traces", retain, "Write a trace CSV per run to <out>/traces");

  CLI::App* theorems = app.add_subcommand("theorems", "Run the theorem checks");
  add_common(theorems, false);
  theorems->add_option("--random-models", random_models, "Randomized models for the equivalence sweep");

  CLI::App* report = app.add_subcommand("report", "Re-aggregate a case from retained traces");
  add_common(report, false);
  report->add_option("--traces", traces, "Trace directory (default <out>/traces)");

  CLI::App* validate = app.add_subcommand("validate-model", "Structural checks of a model file");
  validate->add_option("path", model_path, "Model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitConfig);
  }

  try {
    if (*validate) return cmd_validate(model_path);

    const ScenarioConfig cfg = load(common);
    const fs::path out = common.out;
    fs::create_directories(out);

    if (*simulate) {
      const CaseSetup setup = CaseSetup::build(cfg);
      const HealthClass cls = parse_health_class(health_class);
      if (run_index >= cfg.runs_per_class) throw ConfigError("--run exceeds runs per class");
      const std::size_t index = static_cast<std::size_t>(cls) * cfg.runs_per_class + run_index;
      const RunTrace trace = execute_run(setup, index);
      const fs::path file = out / trace_file_name(index);
      write_trace_csv(trace, file);
      std::cout << file.string() << '\n';
      return 0;
    }

    if (*run_case_cmd) {
      RunOptions opts;
      opts.jobs = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
      if (retain) opts.trace_dir = out / "traces";
      const ExperimentResult r = run_case(cfg, opts);
      write_outputs(r, out);
      print_summary(r);
      return 0;
    }

    if (*theorems) {
      TheoremSuiteOptions opts;
      opts.random_models = random_models;
      const TheoremSuiteReport r = run_theorem_suite(cfg, opts);
      write_file(out / "theorem_report.json", theorem_report_json(r));
      std::cout << fmt::format("theorem 1 {}  random {}/{}  theorem 2 {}  theorem 3 {}\n",
                               r.theorem1 && r.theorem1->pass ? "pass" : "FAIL",
                               r.theorem1_random.passed, r.theorem1_random.models,
                               r.theorem2 && r.theorem2->pass ? "pass" : "FAIL",
                               r.theorem3 && r.theorem3->pass ? "pass" : "FAIL");
      if (!r.pass) return fail("theorems", "theorem checks failed", kExitFailure, {{"errors", r.errors}});
      return 0;
    }

    if (*report) {
      const fs::path dir = traces.empty() ? out / "traces" : fs::path(traces);
      const ExperimentResult r = report_from_traces(cfg, dir);
      write_outputs(r, out);
      print_summary(r);
      return 0;
    }
  } catch (const FailureBudgetError& e) {
    return fail("run_failure_budget", e.what(), kExitBudget,
                {{"failed", e.failed()}, {"total", e.total()}});
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const ModelError& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const DimensionError& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kExitFailure);
  }
  return 0;
}
