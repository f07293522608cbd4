#include "apufdi/trace.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "apufdi/errors.hpp"

namespace apufdi {
namespace {

std::string join(const std::vector<std::string>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("bad number '" + s + "' in trace");
  return v;
}

void put(std::string& line, double v) {
  line += ',';
  line += fmt::format("{:.17g}", v);
}

std::vector<std::string> header(const RunTrace& t) {
  std::vector<std::string> h{"step"};
  for (const auto& n : t.augmented_names()) h.push_back("truth_" + n);
  for (const auto& n : t.plant_health_names) h.push_back("truth_theta_" + n);
  for (const auto& n : t.output_names) h.push_back("y_" + n);
  for (const auto& n : t.input_names) h.push_back("u_" + n);
  h.push_back("pe");
  h.push_back("pe_reported");
  for (const auto& e : t.estimators) {
    const std::string p(to_string(e.type));
    for (const auto& n : t.augmented_names()) h.push_back(p + "_mean_" + n);
    for (const auto& n : t.augmented_names()) h.push_back(p + "_var_" + n);
  }
  return h;
}

}  // namespace

std::vector<std::string> RunTrace::augmented_names() const {
  std::vector<std::string> out = state_names;
  out.insert(out.end(), estimator_health_names.begin(), estimator_health_names.end());
  return out;
}

Eigen::MatrixXd RunTrace::truth_augmented() const {
  const Index nx = state.cols();
  const auto nh = static_cast<Index>(estimator_health_names.size());
  Eigen::MatrixXd out(state.rows(), nx + nh);
  out.leftCols(nx) = state;
  for (Index j = 0; j < nh; ++j) {
    Index col = -1;
    for (std::size_t i = 0; i < plant_health_names.size(); ++i)
      if (plant_health_names[i] == estimator_health_names[static_cast<std::size_t>(j)])
        col = static_cast<Index>(i);
    if (col < 0)
      throw std::runtime_error("estimated health parameter '" +
                               estimator_health_names[static_cast<std::size_t>(j)] +
                               "' has no plant counterpart");
    out.col(nx + j) = theta.col(col);
  }
  return out;
}

RunTrace make_trace(const RunRecord& run, const GasGenModeld& plant,
                    const GasGenModeld& estimator, std::size_t run_index) {
  RunTrace t;
  t.run_index = run_index;
  t.seed = run.seed;
  t.health_class = run.health_class;
  t.targets = run.targets;
  t.state_names = plant.state_names;
  t.plant_health_names = plant.health_names;
  t.estimator_health_names = estimator.health_names;
  t.output_names = plant.output_names;
  t.input_names = plant.input_names;
  t.state = run.state;
  t.theta = run.theta.array() + 1.0;
  t.measurement = run.measurement;
  t.input = run.input;
  t.shaft_power = run.shaft_power;
  t.shaft_power_reported = run.shaft_power_reported;
  return t;
}

void add_estimator(RunTrace& t, EstimatorType type, const std::vector<StepResultd>& steps) {
  if (steps.size() != t.steps()) throw DimensionError("estimator run length differs from trace");
  const auto n = static_cast<Index>(steps.size());
  const auto nx = static_cast<Index>(t.state_names.size());
  const auto na = static_cast<Index>(t.augmented_names().size());
  EstimatorTrace e;
  e.type = type;
  e.mean.resize(n, na);
  e.variance.resize(n, na);
  for (Index k = 0; k < n; ++k) {
    const auto& post = steps[static_cast<std::size_t>(k)].posterior;
    if (post.mean.size() != na) throw DimensionError("estimator state size differs from trace");
    e.mean.row(k) = post.mean.transpose();
    e.variance.row(k) = post.cov.diagonal().transpose();
  }
  e.mean.rightCols(na - nx).array() += 1.0;
  t.estimators.push_back(std::move(e));
}

void write_trace_csv(const RunTrace& t, std::ostream& out) {
  out << "# run_index=" << t.run_index << '\n';
  out << "# seed=" << t.seed << '\n';
  out << "# class=" << to_string(t.health_class) << '\n';
  std::vector<std::string> targets;
  for (double v : t.targets) targets.push_back(fmt::format("{:.17g}", v));
  out << "# targets=" << join(targets) << '\n';
  out << "# state=" << join(t.state_names) << '\n';
  out << "# plant_health=" << join(t.plant_health_names) << '\n';
  out << "# estimator_health=" << join(t.estimator_health_names) << '\n';
  out << "# outputs=" << join(t.output_names) << '\n';
  out << "# inputs=" << join(t.input_names) << '\n';
  out << join(header(t)) << '\n';

  const Eigen::MatrixXd truth = t.truth_augmented();
  std::string line;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const auto r = static_cast<Index>(k);
    line = std::to_string(k);
    for (Index j = 0; j < truth.cols(); ++j) put(line, truth(r, j));
    for (Index j = 0; j < t.theta.cols(); ++j) put(line, t.theta(r, j));
    for (Index j = 0; j < t.measurement.cols(); ++j) put(line, t.measurement(r, j));
    for (Index j = 0; j < t.input.cols(); ++j) put(line, t.input(r, j));
    put(line, t.shaft_power[k]);
    put(line, t.shaft_power_reported[k]);
    for (const auto& e : t.estimators) {
      for (Index j = 0; j < e.mean.cols(); ++j) put(line, e.mean(r, j));
      for (Index j = 0; j < e.variance.cols(); ++j) put(line, e.variance(r, j));
    }
    line += '\n';
    out << line;
  }
}

void write_trace_csv(const RunTrace& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trace_csv(t, out);
  if (!out) throw std::runtime_error("error writing " + path.string());
}

RunTrace read_trace_csv(std::istream& in) {
  RunTrace t;
  std::string line;
  std::vector<std::string> head;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "run_index") t.run_index = std::stoull(value);
      else if (key == "seed") t.seed = std::stoull(value);
      else if (key == "class") t.health_class = parse_health_class(value);
      else if (key == "targets") for (const auto& v : split(value)) t.targets.push_back(parse_double(v));
      else if (key == "state") t.state_names = split(value);
      else if (key == "plant_health") t.plant_health_names = split(value);
      else if (key == "estimator_health") t.estimator_health_names = split(value);
      else if (key == "outputs") t.output_names = split(value);
      else if (key == "inputs") t.input_names = split(value);
      continue;
    }
    head = split(line);
    break;
  }
  if (head.empty() || head.front() != "step") throw std::runtime_error("trace has no header row");

  const std::size_t na = t.augmented_names().size();
  const std::size_t fixed = 1 + na + t.plant_health_names.size() + t.output_names.size() +
                            t.input_names.size() + 2;
  if (head.size() < fixed || (head.size() - fixed) % (2 * na) != 0)
    throw std::runtime_error("trace header does not match its metadata");
  const std::size_t n_est = (head.size() - fixed) / (2 * na);
  for (std::size_t e = 0; e < n_est; ++e) {
    const std::string& col = head[fixed + e * 2 * na];
    const auto pos = col.find("_mean_");
    if (pos == std::string::npos) throw std::runtime_error("bad estimator column '" + col + "'");
    EstimatorTrace et;
    et.type = parse_estimator_type(col.substr(0, pos));
    t.estimators.push_back(et);
  }
  if (header(t) != head) throw std::runtime_error("trace header does not match its metadata");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != head.size())
      throw std::runtime_error("trace row " + std::to_string(rows.size()) + " has wrong width");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_double(cells[i]);
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Index>(rows.size());
  const auto nx = static_cast<Index>(t.state_names.size());
  const auto np = static_cast<Index>(t.plant_health_names.size());
  const auto ny = static_cast<Index>(t.output_names.size());
  const auto nu = static_cast<Index>(t.input_names.size());
  t.state.resize(n, nx);
  t.theta.resize(n, np);
  t.measurement.resize(n, ny);
  t.input.resize(n, nu);
  t.shaft_power.resize(rows.size());
  t.shaft_power_reported.resize(rows.size());
  for (auto& e : t.estimators) {
    e.mean.resize(n, static_cast<Index>(na));
    e.variance.resize(n, static_cast<Index>(na));
  }
  for (Index k = 0; k < n; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    std::size_t c = 1;
    for (Index j = 0; j < nx; ++j) t.state(k, j) = row[c++];
    c += na - static_cast<std::size_t>(nx);
    for (Index j = 0; j < np; ++j) t.theta(k, j) = row[c++];
    for (Index j = 0; j < ny; ++j) t.measurement(k, j) = row[c++];
    for (Index j = 0; j < nu; ++j) t.input(k, j) = row[c++];
    t.shaft_power[static_cast<std::size_t>(k)] = row[c++];
    t.shaft_power_reported[static_cast<std::size_t>(k)] = row[c++];
    for (auto& e : t.estimators) {
      for (Index j = 0; j < e.mean.cols(); ++j) e.mean(k, j) = row[c++];
      for (Index j = 0; j < e.variance.cols(); ++j) e.variance(k, j) = row[c++];
    }
  }
  return t;
}

RunTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_trace_csv(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string trace_file_name(std::size_t run_index) {
  return fmt::format("trace_{:05d}.csv", run_index);
}

}  // namespace apufdi
