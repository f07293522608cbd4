#include "apufdi/fdi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "apufdi/errors.hpp"

namespace apufdi {

std::string_view to_string(HealthClass c) {
  switch (c) {
    case HealthClass::Healthy: return "healthy";
    case HealthClass::MinorFault: return "minor";
    case HealthClass::MediumFault: return "medium";
    case HealthClass::SevereFault: return "severe";
  }
  return "?";
}

HealthClass parse_health_class(std::string_view name) {
  for (HealthClass c : kHealthClasses)
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown health class '" + std::string(name) + "'");
}

ClassInterval decision_interval(HealthClass c) {
  constexpr double inf = INFINITY;
  switch (c) {
    case HealthClass::Healthy: return {0.98, inf};
    case HealthClass::MinorFault: return {0.96, 0.98};
    case HealthClass::MediumFault: return {0.94, 0.96};
    case HealthClass::SevereFault: return {-inf, 0.94};
  }
  throw std::logic_error("bad health class");
}

ClassInterval sampling_interval(HealthClass c) {
  switch (c) {
    case HealthClass::Healthy: return {0.98, 1.0};
    case HealthClass::MinorFault: return {0.96, 0.98};
    case HealthClass::MediumFault: return {0.94, 0.96};
    case HealthClass::SevereFault: return {0.92, 0.94};
  }
  throw std::logic_error("bad health class");
}

HealthClass classify_value(double health) {
  if (health < 0.94) return HealthClass::SevereFault;
  if (health < 0.96) return HealthClass::MediumFault;
  if (health < 0.98) return HealthClass::MinorFault;
  return HealthClass::Healthy;
}

HealthClass classify(std::span<const double> health_estimates, StepWindow window) {
  if (window.begin >= window.end) throw std::invalid_argument("classification window is empty");
  if (window.end > health_estimates.size())
    throw std::out_of_range("classification window extends past the trajectory");
  double sum = 0;
  for (std::size_t k = window.begin; k < window.end; ++k) sum += health_estimates[k];
  return classify_value(sum / static_cast<double>(window.end - window.begin));
}

double rmse(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size())
    throw DimensionError("rmse: estimate and truth lengths differ");
  if (estimates.empty()) throw std::invalid_argument("rmse of an empty sequence");
  double sum = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

double improvement(double rmse_pens, double rmse_pes) {
  if (!(rmse_pens > 0)) throw std::domain_error("improvement: PENS RMSE must be positive");
  return 100.0 * (rmse_pens - rmse_pes) / rmse_pens;
}

std::int64_t ConfusionMatrix::row_total(HealthClass actual) const {
  return counts.row(static_cast<int>(actual)).sum();
}

std::int64_t ConfusionMatrix::column_total(HealthClass estimated) const {
  return counts.col(static_cast<int>(estimated)).sum();
}

Eigen::Matrix4d ConfusionMatrix::rates() const {
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) {
    const auto row = counts.row(i).sum();
    if (row > 0) r.row(i) = counts.row(i).cast<double>() / static_cast<double>(row);
  }
  return r;
}

void ConfusionMatrix::add(HealthClass actual, HealthClass estimated, std::int64_t n) {
  counts(static_cast<int>(actual), static_cast<int>(estimated)) += n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  counts += other.counts;
  return *this;
}

ConfusionMatrix confusion(std::span<const HealthClass> actual,
                          std::span<const HealthClass> predicted) {
  if (actual.size() != predicted.size())
    throw DimensionError("confusion: label sequences differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < actual.size(); ++i) cm.add(actual[i], predicted[i]);
  return cm;
}

ClassificationMetrics macro_metrics(const ConfusionMatrix& cm) {
  ClassificationMetrics m;
  int represented = 0;
  for (int c = 0; c < 4; ++c) {
    const double tp = static_cast<double>(cm.counts(c, c));
    const double row = static_cast<double>(cm.counts.row(c).sum());
    const double col = static_cast<double>(cm.counts.col(c).sum());
    m.precision[c] = col > 0 ? tp / col : 0.0;
    m.recall[c] = row > 0 ? tp / row : 0.0;
    const double denom = m.precision[c] + m.recall[c];
    m.f1[c] = denom > 0 ? 2.0 * m.precision[c] * m.recall[c] / denom : 0.0;
    m.represented[c] = row > 0;
    if (m.represented[c]) {
      ++represented;
      m.macro_precision += m.precision[c];
      m.macro_recall += m.recall[c];
      m.macro_f1 += m.f1[c];
    }
  }
  if (represented > 0) {
    m.macro_precision /= represented;
    m.macro_recall /= represented;
    m.macro_f1 /= represented;
  }
  const auto total = cm.total();
  m.accuracy = total > 0 ? static_cast<double>(cm.counts.trace()) / static_cast<double>(total) : 0.0;
  return m;
}

}  // namespace apufdi
