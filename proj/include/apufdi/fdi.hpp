#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace apufdi {

enum class HealthClass : int { Healthy = 0, MinorFault = 1, MediumFault = 2, SevereFault = 3 };

inline constexpr std::array<HealthClass, 4> kHealthClasses = {
    HealthClass::Healthy, HealthClass::MinorFault, HealthClass::MediumFault,
    HealthClass::SevereFault};

std::string_view to_string(HealthClass c);
HealthClass parse_health_class(std::string_view name);

/// Half-open interval [lower, upper).
struct ClassInterval {
  double lower;
  double upper;
};

/// Decision region of a class. The four regions partition the real line:
/// Severe (-inf, 0.94), Medium [0.94, 0.96), Minor [0.96, 0.98), Healthy [0.98, inf).
ClassInterval decision_interval(HealthClass c);

/// Range that degradation targets of a class are drawn from: the tabulated condition ranges
/// 0.98-1, 0.96-0.98, 0.94-0.96, 0.92-0.94.
ClassInterval sampling_interval(HealthClass c);

HealthClass classify_value(double health);

struct StepWindow {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

/// Class of the mean health estimate (absolute, 1 = healthy) over `window`.
HealthClass classify(std::span<const double> health_estimates, StepWindow window);

double rmse(std::span<const double> estimates, std::span<const double> truth);

/// 100 * (rmse_pens - rmse_pes) / rmse_pens.
double improvement(double rmse_pens, double rmse_pes);

/// Counts indexed [actual][estimated].
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, 4, 4> counts = Eigen::Matrix<std::int64_t, 4, 4>::Zero();

  std::int64_t total() const { return counts.sum(); }
  std::int64_t row_total(HealthClass actual) const;
  std::int64_t column_total(HealthClass estimated) const;
  /// Rows normalized to rates; rows with no samples are zero.
  Eigen::Matrix4d rates() const;
  void add(HealthClass actual, HealthClass estimated, std::int64_t n = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(std::span<const HealthClass> actual,
                          std::span<const HealthClass> predicted);

struct ClassificationMetrics {
  std::array<double, 4> precision{};
  std::array<double, 4> recall{};
  std::array<double, 4> f1{};
  std::array<bool, 4> represented{};
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  double accuracy = 0;
};

/// Per-class precision/recall/F1 (0/0 taken as 0) and their unweighted means over the classes
/// present among the actual labels.
ClassificationMetrics macro_metrics(const ConfusionMatrix& cm);

}  // namespace apufdi
