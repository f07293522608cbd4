#pragma once

#include <span>
#include <vector>

#include "apufdi/estimator.hpp"

namespace apufdi {

/// Gain sequence recorded by a filter run.
template <typename Scalar>
std::vector<Matrix<Scalar>> gains_of(const std::vector<StepResult<Scalar>>& run) {
  std::vector<Matrix<Scalar>> out;
  out.reserve(run.size());
  for (const auto& step : run) out.push_back(step.diagnostics.gain);
  return out;
}

/**
 * Covariance of the estimation error of a linear filter that applies the recorded `gains`,
 * when the true shaft-power error variance at step k is `true_pe_variance[k]`:
 *
 *   P-(k) = A P(k-1) A^T + F var_k F^T + Q
 *   P(k)  = (I - K_k C) P-(k) (I - K_k C)^T + K_k R K_k^T
 *
 * `true_pe_variance` has one entry per gain, or a single entry used for every step. The result
 * holds P(k) for each step; P(-1) is `initial_cov`.
 */
template <typename Scalar>
std::vector<Matrix<Scalar>> error_covariance_recursion(const AugmentedModel<Scalar>& aug,
                                                       const Matrix<Scalar>& initial_cov,
                                                       std::span<const Matrix<Scalar>> gains,
                                                       std::span<const Scalar> true_pe_variance) {
  const Index n = aug.size();
  if (initial_cov.rows() != n || initial_cov.cols() != n)
    throw DimensionError("initial covariance does not match the augmented model");
  if (true_pe_variance.size() != gains.size() && true_pe_variance.size() != 1)
    throw DimensionError("need one shaft-power variance per gain (or a single one)");

  std::vector<Matrix<Scalar>> out;
  out.reserve(gains.size());
  Matrix<Scalar> p = initial_cov;
  const Matrix<Scalar> identity = Matrix<Scalar>::Identity(n, n);
  for (std::size_t k = 0; k < gains.size(); ++k) {
    const Matrix<Scalar>& gain = gains[k];
    if (gain.rows() != n || gain.cols() != aug.ny())
      throw DimensionError("gain " + std::to_string(k) + " has the wrong shape");
    const Scalar var = true_pe_variance.size() == 1 ? true_pe_variance[0] : true_pe_variance[k];
    Matrix<Scalar> prior = aug.A * p * aug.A.transpose();
    prior.noalias() += (aug.F * var) * aug.F.transpose();
    prior += aug.Q;
    const Matrix<Scalar> ikc = identity - gain * aug.C;
    Matrix<Scalar> post = ikc * prior * ikc.transpose();
    post.noalias() += gain * aug.R * gain.transpose();
    p = detail::symmetrized(post);
    out.push_back(p);
  }
  return out;
}

/// Error covariance of PES. With true noise statistics this equals the PES reported covariance.
template <typename Scalar>
std::vector<Matrix<Scalar>> cee_recursion_pes(const AugmentedModel<Scalar>& aug,
                                              const Matrix<Scalar>& initial_cov,
                                              std::span<const Matrix<Scalar>> pes_gains,
                                              std::span<const Scalar> pe_variance) {
  return error_covariance_recursion(aug, initial_cov, pes_gains, pe_variance);
}

/// Error covariance of MPES: gains come from the filter that assumed the inflated variance,
/// while the error is driven by the true shaft-power variance.
template <typename Scalar>
std::vector<Matrix<Scalar>> cee_recursion_mpes(const AugmentedModel<Scalar>& aug,
                                               const Matrix<Scalar>& initial_cov,
                                               std::span<const Matrix<Scalar>> mpes_gains,
                                               std::span<const Scalar> true_pe_variance) {
  return error_covariance_recursion(aug, initial_cov, mpes_gains, true_pe_variance);
}

}  // namespace apufdi
