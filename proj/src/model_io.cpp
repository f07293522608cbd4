#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apufdi/model.hpp"

namespace apufdi {
namespace {

using nlohmann::json;

Matrix<double> read_matrix(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ModelError(std::string("model file lacks key '") + key + "'");
  const json& rows = doc.at(key);
  if (!rows.is_array()) throw ModelError(std::string("'") + key + "' must be a nested array");
  const auto nrows = static_cast<Index>(rows.size());
  Index ncols = 0;
  if (nrows > 0) {
    if (!rows.front().is_array())
      throw ModelError(std::string("'") + key + "' must be a nested array");
    ncols = static_cast<Index>(rows.front().size());
  }
  Matrix<double> m(nrows, ncols);
  for (Index i = 0; i < nrows; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != ncols)
      throw DimensionError(std::string("matrix ") + key + " has ragged rows");
    for (Index j = 0; j < ncols; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

Vector<double> read_vector(const json& obj, const char* key, Index expected) {
  if (!obj.contains(key)) throw ModelError(std::string("ss block lacks '") + key + "'");
  const auto values = obj.at(key).get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != expected)
    throw DimensionError(std::string("ss.") + key + " has length " +
                         std::to_string(values.size()) + ", expected " +
                         std::to_string(expected));
  return Eigen::Map<const Vector<double>>(values.data(), expected);
}

std::vector<std::string> default_names(const std::string& prefix, Index n) {
  std::vector<std::string> names;
  for (Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::vector<std::string> read_names(const json& doc, const char* key, const std::string& prefix,
                                    Index n) {
  if (doc.contains("names") && doc.at("names").contains(key)) {
    auto names = doc.at("names").at(key).get<std::vector<std::string>>();
    if (static_cast<Index>(names.size()) != n)
      throw DimensionError(std::string("names.") + key + " has wrong length");
    return names;
  }
  return default_names(prefix, n);
}

json matrix_to_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> to_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

GasGenModeld parse_model(const std::string& json_text, bool check) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }

  GasGenModeld m;
  try {
    m.A = read_matrix(doc, "A");
    m.B = read_matrix(doc, "B");
    m.C = read_matrix(doc, "C");
    m.D = read_matrix(doc, "D");
    m.E = read_matrix(doc, "E");
    const Matrix<double> f = read_matrix(doc, "F");
    if (f.cols() != 1) throw DimensionError("matrix F must be a single column");
    m.F = f.col(0);
    m.G = read_matrix(doc, "G");
    m.Q = read_matrix(doc, "Q");
    m.R = read_matrix(doc, "R");
    m.Qh = read_matrix(doc, "Qh");
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model matrix: ") + e.what());
  }

  if (doc.contains("dims")) {
    const json& dims = doc.at("dims");
    const auto want = [&](const char* key, Index got) {
      if (dims.contains(key) && dims.at(key).get<Index>() != got)
        throw DimensionError(std::string("dims.") + key + " = " +
                             std::to_string(dims.at(key).get<Index>()) +
                             " disagrees with matrices (" + std::to_string(got) + ")");
    };
    want("nx", m.A.rows());
    want("nu", m.B.cols());
    want("ny", m.C.rows());
    want("ntheta", m.E.cols());
  }
  check_dimensions(m);

  if (!doc.contains("ss")) throw ModelError("model file lacks key 'ss'");
  const json& ss = doc.at("ss");
  m.ss.x = read_vector(ss, "x", m.nx());
  m.ss.u = read_vector(ss, "u", m.nu());
  m.ss.y = read_vector(ss, "y", m.ny());
  m.ss.theta = ss.contains("theta") ? read_vector(ss, "theta", m.ntheta())
                                    : Vector<double>::Ones(m.ntheta());
  m.ss.pe = ss.value("pe", 0.0);

  m.state_names = read_names(doc, "state", "x", m.nx());
  m.input_names = read_names(doc, "input", "u", m.nu());
  m.output_names = read_names(doc, "output", "y", m.ny());
  m.health_names = read_names(doc, "health", "theta", m.ntheta());

  if (check) validate(m);
  return m;
}

GasGenModeld load_model(const std::filesystem::path& path, bool check) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model(text.str(), check);
}

std::string model_to_json(const GasGenModeld& m) {
  json doc;
  doc["format_version"] = 1;
  doc["dims"] = {{"nx", m.nx()}, {"nu", m.nu()}, {"ny", m.ny()}, {"ntheta", m.ntheta()}};
  doc["names"] = {{"state", m.state_names},
                  {"input", m.input_names},
                  {"output", m.output_names},
                  {"health", m.health_names}};
  doc["A"] = matrix_to_json(m.A);
  doc["B"] = matrix_to_json(m.B);
  doc["C"] = matrix_to_json(m.C);
  doc["D"] = matrix_to_json(m.D);
  doc["E"] = matrix_to_json(m.E);
  doc["F"] = matrix_to_json(Matrix<double>(m.F));
  doc["G"] = matrix_to_json(m.G);
  doc["Q"] = matrix_to_json(m.Q);
  doc["R"] = matrix_to_json(m.R);
  doc["Qh"] = matrix_to_json(m.Qh);
  doc["ss"] = {{"x", to_std(m.ss.x)},
               {"u", to_std(m.ss.u)},
               {"y", to_std(m.ss.y)},
               {"theta", to_std(m.ss.theta)},
               {"pe", m.ss.pe}};
  return doc.dump(2);
}

}  // namespace apufdi
