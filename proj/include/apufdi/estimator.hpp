#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "apufdi/errors.hpp"
#include "apufdi/model.hpp"

namespace apufdi {

/// Mean and covariance of the augmented state [x; theta], in deviation coordinates.
template <typename Scalar>
struct GaussianBelief {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
};

/// A shaft-power value (deviation, W) together with the variance the filter should assume for it.
template <typename Scalar>
struct ShaftPowerInput {
  Scalar value = Scalar(0);
  Scalar variance = Scalar(0);
};

enum class EstimatorType { Pes, Pens, Mpes };

inline std::string_view to_string(EstimatorType t) {
  switch (t) {
    case EstimatorType::Pes: return "pes";
    case EstimatorType::Pens: return "pens";
    case EstimatorType::Mpes: return "mpes";
  }
  return "?";
}

inline EstimatorType parse_estimator_type(std::string_view name) {
  if (name == "pes") return EstimatorType::Pes;
  if (name == "pens") return EstimatorType::Pens;
  if (name == "mpes") return EstimatorType::Mpes;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

/**
 * Which shaft-power information a filter consumes.
 *
 * - PES uses the reported power and its reported variance.
 * - PENS ignores the report and uses the nominal power `nominal.value` with variance
 *   `nominal.variance` instead.
 * - MPES uses the reported power but the nominal variance.
 */
template <typename Scalar>
struct EstimatorKind {
  EstimatorType type = EstimatorType::Pes;
  ShaftPowerInput<Scalar> nominal;

  static EstimatorKind pes() { return {EstimatorType::Pes, {}}; }
  static EstimatorKind pens(Scalar pe_nominal, Scalar pe_nominal_variance) {
    return {EstimatorType::Pens, {pe_nominal, pe_nominal_variance}};
  }
  static EstimatorKind mpes(Scalar pe_nominal_variance) {
    return {EstimatorType::Mpes, {Scalar(0), pe_nominal_variance}};
  }
};

template <typename Scalar>
struct StepDiagnostics {
  Matrix<Scalar> gain;
  Matrix<Scalar> prior_cov;
  Matrix<Scalar> posterior_cov;
  Vector<Scalar> innovation;
  Scalar condition_number = Scalar(0);
};

/// Data consumed by one filter step.
///
/// `transition_input` and `shaft_power` drive the transition from the previous step into this
/// one; `input` is the input applied at measurement time (feedthrough through D).
template <typename Scalar>
struct StepInput {
  Vector<Scalar> transition_input;
  ShaftPowerInput<Scalar> shaft_power;
  Vector<Scalar> input;
  Vector<Scalar> measurement;
};

struct UpdateOptions {
  /// Upper bound on cond(S) of the innovation covariance. Infinity disables the check, but a
  /// failed factorization is always reported.
  double max_condition = 1e12;
};

template <typename Scalar>
struct UpdateResult {
  GaussianBelief<Scalar> posterior;
  StepDiagnostics<Scalar> diagnostics;
};

template <typename Scalar>
struct StepResult {
  GaussianBelief<Scalar> posterior;
  StepDiagnostics<Scalar> diagnostics;
};

namespace detail {

template <typename Scalar>
void check_belief(const GaussianBelief<Scalar>& b, Index n) {
  if (b.mean.size() != n || b.cov.rows() != n || b.cov.cols() != n)
    throw DimensionError("belief has size " + std::to_string(b.mean.size()) +
                         ", augmented model has " + std::to_string(n));
  if (!b.mean.allFinite() || !b.cov.allFinite()) throw NonFiniteError("belief is not finite");
}

template <typename Scalar>
void check_input(const Vector<Scalar>& u, Index nu, const char* what) {
  if (u.size() != nu)
    throw DimensionError(std::string(what) + " has length " + std::to_string(u.size()) +
                         ", expected " + std::to_string(nu));
  if (!u.allFinite()) throw NonFiniteError(std::string(what) + " is not finite");
}

template <typename Scalar>
Matrix<Scalar> symmetrized(const Matrix<Scalar>& p) {
  return (p + p.transpose()) / Scalar(2);
}

}  // namespace detail

/**
 * Time update shared by all three filters:
 *
 *   mean' = A mean + B u + F pe_mean
 *   cov'  = A cov A^T + F pe_var F^T + Q
 */
template <typename Scalar>
GaussianBelief<Scalar> predict(const GaussianBelief<Scalar>& belief,
                               const AugmentedModel<Scalar>& aug, const Vector<Scalar>& u,
                               Scalar pe_mean, Scalar pe_var) {
  detail::check_belief(belief, aug.size());
  detail::check_input(u, aug.nu(), "input u");
  if (!std::isfinite(pe_mean) || !std::isfinite(pe_var))
    throw NonFiniteError("shaft-power input is not finite");
  if (pe_var < Scalar(0)) throw std::invalid_argument("shaft-power variance is negative");

  GaussianBelief<Scalar> prior;
  prior.mean = aug.A * belief.mean + aug.B * u + aug.F * pe_mean;
  Matrix<Scalar> cov = aug.A * belief.cov * aug.A.transpose();
  cov.noalias() += (aug.F * pe_var) * aug.F.transpose();
  cov += aug.Q;
  prior.cov = detail::symmetrized(cov);
  return prior;
}

/// Prior with the reported shaft power and its reported variance.
template <typename Scalar>
GaussianBelief<Scalar> predict_pes(const GaussianBelief<Scalar>& belief,
                                   const AugmentedModel<Scalar>& aug, const Vector<Scalar>& u,
                                   const ShaftPowerInput<Scalar>& pe) {
  return predict(belief, aug, u, pe.value, pe.variance);
}

/// Prior with the nominal shaft power PeT and nominal variance P^PeT in place of a report.
template <typename Scalar>
GaussianBelief<Scalar> predict_pens(const GaussianBelief<Scalar>& belief,
                                    const AugmentedModel<Scalar>& aug, const Vector<Scalar>& u,
                                    const ShaftPowerInput<Scalar>& nominal) {
  return predict(belief, aug, u, nominal.value, nominal.variance);
}

/// Prior with the reported shaft power but the inflated nominal variance.
template <typename Scalar>
GaussianBelief<Scalar> predict_mpes(const GaussianBelief<Scalar>& belief,
                                    const AugmentedModel<Scalar>& aug, const Vector<Scalar>& u,
                                    const ShaftPowerInput<Scalar>& pe, Scalar nominal_variance) {
  if (!(nominal_variance > Scalar(0)))
    throw std::invalid_argument("MPES nominal variance must be positive");
  return predict(belief, aug, u, pe.value, nominal_variance);
}

/**
 * Measurement update with the Joseph-form covariance:
 *
 *   S = C P C^T + R,  K = P C^T S^-1
 *   mean = mean + K (y - C mean - D u)
 *   P    = (I - K C) P (I - K C)^T + K R K^T
 */
template <typename Scalar>
UpdateResult<Scalar> update(const GaussianBelief<Scalar>& prior,
                            const AugmentedModel<Scalar>& aug, const Vector<Scalar>& u,
                            const Vector<Scalar>& y, const UpdateOptions& options = {}) {
  const Index n = aug.size();
  detail::check_belief(prior, n);
  detail::check_input(u, aug.nu(), "input u");
  detail::check_input(y, aug.ny(), "measurement y");

  const Matrix<Scalar> pct = prior.cov * aug.C.transpose();
  const Matrix<Scalar> s = detail::symmetrized(Matrix<Scalar>(aug.C * pct + aug.R));
  Eigen::LDLT<Matrix<Scalar>> ldlt(s);
  const Scalar rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : Scalar(0);
  const Scalar pivot_min = ldlt.vectorD().minCoeff();
  const Scalar pivot_max = ldlt.vectorD().cwiseAbs().maxCoeff();
  Scalar cond = std::numeric_limits<Scalar>::infinity();
  if (rcond > Scalar(0) && pivot_min > Scalar(0))
    cond = std::max(Scalar(1) / rcond, pivot_max / pivot_min);
  if (!(cond < std::numeric_limits<Scalar>::infinity()) ||
      static_cast<double>(cond) > options.max_condition) {
    throw SingularInnovationError(
        "innovation covariance is singular or ill-conditioned (cond ~ " +
            std::to_string(static_cast<double>(cond)) + ")",
        static_cast<double>(cond));
  }

  UpdateResult<Scalar> out;
  StepDiagnostics<Scalar>& diag = out.diagnostics;
  // K = P C^T S^-1 = (S^-1 C P)^T since S and P are symmetric.
  diag.gain = ldlt.solve(pct.transpose()).transpose();
  diag.innovation = y - aug.C * prior.mean - aug.D * u;
  diag.prior_cov = prior.cov;
  diag.condition_number = cond;

  out.posterior.mean = prior.mean + diag.gain * diag.innovation;
  const Matrix<Scalar> ikc = Matrix<Scalar>::Identity(n, n) - diag.gain * aug.C;
  Matrix<Scalar> post = ikc * prior.cov * ikc.transpose();
  post.noalias() += diag.gain * aug.R * diag.gain.transpose();
  out.posterior.cov = detail::symmetrized(post);
  diag.posterior_cov = out.posterior.cov;
  return out;
}

/// Prior for one step of the given filter kind.
template <typename Scalar>
GaussianBelief<Scalar> predict_for(const EstimatorKind<Scalar>& kind,
                                   const GaussianBelief<Scalar>& belief,
                                   const AugmentedModel<Scalar>& aug, const Vector<Scalar>& u,
                                   const ShaftPowerInput<Scalar>& reported) {
  switch (kind.type) {
    case EstimatorType::Pes: return predict_pes(belief, aug, u, reported);
    case EstimatorType::Pens: return predict_pens(belief, aug, u, kind.nominal);
    case EstimatorType::Mpes: return predict_mpes(belief, aug, u, reported, kind.nominal.variance);
  }
  throw std::logic_error("unhandled estimator type");
}

/// Runs predict then update for every step. `init` is the posterior before the first step.
/// Failures are rethrown as StepError carrying the step index.
template <typename Scalar>
std::vector<StepResult<Scalar>> run_estimator(const EstimatorKind<Scalar>& kind,
                                              const AugmentedModel<Scalar>& aug,
                                              const GaussianBelief<Scalar>& init,
                                              std::span<const StepInput<Scalar>> inputs,
                                              const UpdateOptions& options = {}) {
  if (inputs.empty()) throw std::invalid_argument("run_estimator needs at least one step");
  if (kind.type != EstimatorType::Pes && !(kind.nominal.variance > Scalar(0)))
    throw std::invalid_argument("nominal shaft-power variance must be positive");
  detail::check_belief(init, aug.size());

  std::vector<StepResult<Scalar>> out;
  out.reserve(inputs.size());
  const GaussianBelief<Scalar>* current = &init;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const StepInput<Scalar>& in = inputs[k];
    try {
      const GaussianBelief<Scalar> prior =
          predict_for(kind, *current, aug, in.transition_input, in.shaft_power);
      UpdateResult<Scalar> upd = update(prior, aug, in.input, in.measurement, options);
      out.push_back({std::move(upd.posterior), std::move(upd.diagnostics)});
    } catch (const StepError&) {
      throw;
    } catch (const std::exception& e) {
      throw StepError(k, e.what());
    }
    current = &out.back().posterior;
  }
  return out;
}

template <typename Scalar>
std::vector<StepResult<Scalar>> run_estimator(const EstimatorKind<Scalar>& kind,
                                              const AugmentedModel<Scalar>& aug,
                                              const GaussianBelief<Scalar>& init,
                                              const std::vector<StepInput<Scalar>>& inputs,
                                              const UpdateOptions& options = {}) {
  return run_estimator(kind, aug, init, std::span<const StepInput<Scalar>>(inputs), options);
}

using GaussianBeliefd = GaussianBelief<double>;
using ShaftPowerInputd = ShaftPowerInput<double>;
using EstimatorKindd = EstimatorKind<double>;
using StepInputd = StepInput<double>;
using StepResultd = StepResult<double>;

}  // namespace apufdi
