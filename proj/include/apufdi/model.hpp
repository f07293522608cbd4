#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "apufdi/errors.hpp"

namespace apufdi {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Reference operating point of the linearization. Deviations are taken about these values.
template <typename Scalar>
struct SteadyState {
  Vector<Scalar> x;
  Vector<Scalar> u;
  Vector<Scalar> y;
  Vector<Scalar> theta;
  Scalar pe = Scalar(0);
};

/**
 * Deviation-form linear gas generator with health parameters and shaft-power load:
 *
 *   x(k+1) = A x(k) + B u(k) + E theta(k) + F Pe(k) + w(k),   w ~ N(0, Q)
 *   y(k)   = C x(k) + D u(k) + G theta(k) + v(k),             v ~ N(0, R)
 *   theta(k+1) = theta(k) + wh(k),                            wh ~ N(0, Qh)
 *
 * All signals are deviations from `ss`.
 */
template <typename Scalar>
struct GasGenModel {
  Matrix<Scalar> A, B, C, D, E;
  Vector<Scalar> F;
  Matrix<Scalar> G, Q, R, Qh;
  SteadyState<Scalar> ss;

  std::vector<std::string> state_names;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  std::vector<std::string> health_names;

  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  Index ny() const { return C.rows(); }
  Index ntheta() const { return E.cols(); }
};

/// Joint state/health model: x_aug = [x; theta].
template <typename Scalar>
struct AugmentedModel {
  Matrix<Scalar> A;  // [A E; 0 I]
  Matrix<Scalar> B;  // [B; 0]
  Matrix<Scalar> C;  // [C G]
  Matrix<Scalar> D;
  Vector<Scalar> F;  // [F; 0]
  Matrix<Scalar> Q;  // blkdiag(Q, Qh)
  Matrix<Scalar> R;
  Index nx = 0;
  Index ntheta = 0;

  Index size() const { return nx + ntheta; }
  Index ny() const { return C.rows(); }
  Index nu() const { return B.cols(); }
};

namespace detail {

inline void require_shape(const char* name, Index rows, Index cols, Index want_rows,
                          Index want_cols) {
  if (rows != want_rows || cols != want_cols) {
    throw DimensionError(std::string("matrix ") + name + " is " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", expected " + std::to_string(want_rows) +
                         "x" + std::to_string(want_cols));
  }
}

}  // namespace detail

/// Symmetric and PSD within a trace-relative tolerance.
template <typename Derived>
bool is_symmetric_psd(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  const Scalar scale = std::max<Scalar>(m.cwiseAbs().maxCoeff(), Scalar(1e-300));
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > Scalar(rel_tol) * scale) return false;
  Matrix<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  const Scalar trace = std::abs(sym.trace());
  return es.eigenvalues().minCoeff() >= -Scalar(rel_tol) * std::max<Scalar>(trace, Scalar(1e-300));
}

/// Checks that all matrix sizes agree. Throws DimensionError naming the first offender.
template <typename Scalar>
void check_dimensions(const GasGenModel<Scalar>& m) {
  const Index nx = m.A.rows();
  const Index nu = m.B.cols();
  const Index ny = m.C.rows();
  const Index nt = m.E.cols();
  detail::require_shape("A", m.A.rows(), m.A.cols(), nx, nx);
  detail::require_shape("B", m.B.rows(), m.B.cols(), nx, nu);
  detail::require_shape("C", m.C.rows(), m.C.cols(), ny, nx);
  detail::require_shape("D", m.D.rows(), m.D.cols(), ny, nu);
  detail::require_shape("E", m.E.rows(), m.E.cols(), nx, nt);
  detail::require_shape("F", m.F.rows(), 1, nx, 1);
  detail::require_shape("G", m.G.rows(), m.G.cols(), ny, nt);
  detail::require_shape("Q", m.Q.rows(), m.Q.cols(), nx, nx);
  detail::require_shape("R", m.R.rows(), m.R.cols(), ny, ny);
  detail::require_shape("Qh", m.Qh.rows(), m.Qh.cols(), nt, nt);
}

/// Outcome of the structural checks on a model: each flag is one assumption.
struct StructuralReport {
  bool dimensions_ok = false;
  std::string dimension_error;
  bool finite = false;
  bool f_all_nonzero = false;
  bool c_rows_nonzero = false;
  bool g_columns_nonzero = false;
  bool q_psd = false;
  bool r_psd = false;
  bool qh_psd = false;
  std::vector<Index> zero_f_entries;
  std::vector<Index> zero_c_rows;
  std::vector<Index> zero_g_columns;

  bool ok() const {
    return dimensions_ok && finite && f_all_nonzero && c_rows_nonzero && g_columns_nonzero &&
           q_psd && r_psd && qh_psd;
  }
};

template <typename Scalar>
StructuralReport structural_report(const GasGenModel<Scalar>& m) {
  StructuralReport rep;
  try {
    check_dimensions(m);
    rep.dimensions_ok = true;
  } catch (const DimensionError& e) {
    rep.dimension_error = e.what();
    return rep;
  }
  rep.finite = m.A.allFinite() && m.B.allFinite() && m.C.allFinite() && m.D.allFinite() &&
               m.E.allFinite() && m.F.allFinite() && m.G.allFinite() && m.Q.allFinite() &&
               m.R.allFinite() && m.Qh.allFinite();
  for (Index i = 0; i < m.F.size(); ++i)
    if (m.F(i) == Scalar(0)) rep.zero_f_entries.push_back(i);
  for (Index i = 0; i < m.C.rows(); ++i)
    if ((m.C.row(i).array() == Scalar(0)).all()) rep.zero_c_rows.push_back(i);
  for (Index j = 0; j < m.G.cols(); ++j)
    if ((m.G.col(j).array() == Scalar(0)).all()) rep.zero_g_columns.push_back(j);
  rep.f_all_nonzero = rep.zero_f_entries.empty();
  rep.c_rows_nonzero = rep.zero_c_rows.empty();
  rep.g_columns_nonzero = rep.zero_g_columns.empty();
  rep.q_psd = is_symmetric_psd(m.Q);
  rep.r_psd = is_symmetric_psd(m.R);
  rep.qh_psd = is_symmetric_psd(m.Qh);
  return rep;
}

/// Throws DimensionError or ModelError when any structural assumption fails.
template <typename Scalar>
void validate(const GasGenModel<Scalar>& m) {
  check_dimensions(m);
  const StructuralReport rep = structural_report(m);
  if (!rep.finite) throw ModelError("model contains non-finite entries");
  if (!rep.f_all_nonzero) throw ModelError("F has zero entries; every state must be driven by shaft power");
  if (!rep.c_rows_nonzero) throw ModelError("C has an all-zero row");
  if (!rep.g_columns_nonzero) throw ModelError("G has an all-zero column");
  if (!rep.q_psd) throw ModelError("Q is not symmetric positive semidefinite");
  if (!rep.r_psd) throw ModelError("R is not symmetric positive semidefinite");
  if (!rep.qh_psd) throw ModelError("Qh is not symmetric positive semidefinite");
}

/// Builds the joint state/health model. Pure; only sizes are checked.
template <typename Scalar>
AugmentedModel<Scalar> augment(const GasGenModel<Scalar>& m) {
  check_dimensions(m);
  const Index nx = m.nx();
  const Index nt = m.ntheta();
  const Index n = nx + nt;

  AugmentedModel<Scalar> aug;
  aug.nx = nx;
  aug.ntheta = nt;

  aug.A = Matrix<Scalar>::Zero(n, n);
  aug.A.topLeftCorner(nx, nx) = m.A;
  aug.A.topRightCorner(nx, nt) = m.E;
  aug.A.bottomRightCorner(nt, nt).setIdentity();

  aug.B = Matrix<Scalar>::Zero(n, m.nu());
  aug.B.topRows(nx) = m.B;

  aug.C.resize(m.ny(), n);
  aug.C << m.C, m.G;

  aug.F = Vector<Scalar>::Zero(n);
  aug.F.head(nx) = m.F;

  aug.Q = Matrix<Scalar>::Zero(n, n);
  aug.Q.topLeftCorner(nx, nx) = m.Q;
  aug.Q.bottomRightCorner(nt, nt) = m.Qh;

  aug.D = m.D;
  aug.R = m.R;
  return aug;
}

template <typename DerivedDev, typename DerivedRef>
auto deviation_to_absolute(const Eigen::MatrixBase<DerivedDev>& dev,
                           const Eigen::MatrixBase<DerivedRef>& ref) {
  if (dev.rows() != ref.rows() || dev.cols() != ref.cols())
    throw DimensionError("deviation and reference lengths differ");
  return (dev + ref).eval();
}

template <typename DerivedAbs, typename DerivedRef>
auto absolute_to_deviation(const Eigen::MatrixBase<DerivedAbs>& abs,
                           const Eigen::MatrixBase<DerivedRef>& ref) {
  if (abs.rows() != ref.rows() || abs.cols() != ref.cols())
    throw DimensionError("absolute and reference lengths differ");
  return (abs - ref).eval();
}

using GasGenModeld = GasGenModel<double>;
using AugmentedModeld = AugmentedModel<double>;

/// Reads a model file (JSON, row-major nested arrays). With `check` set the model must also
/// pass `validate`.
GasGenModeld load_model(const std::filesystem::path& path, bool check = true);
GasGenModeld parse_model(const std::string& json_text, bool check = true);
/// Serializes a model in the same schema `load_model` reads.
std::string model_to_json(const GasGenModeld& model);

}  // namespace apufdi
