#include "gaplab/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace gaplab {

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol;
}

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    }
  }
  return true;
}

HermitianEigenSystem hermitian_eigendecomposition(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw DomainError("hermitian_eigendecomposition: matrix is not square");
  if (m.rows() == 0) throw DomainError("hermitian_eigendecomposition: empty matrix");
  if (!all_finite(m)) throw DomainError("hermitian_eigendecomposition: non-finite entries");
  if (!is_hermitian(m, tol)) throw DomainError("hermitian_eigendecomposition: matrix is not Hermitian within tolerance");

  // Only the lower triangle is read; symmetrize so both halves count.
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw ConvergenceError("hermitian_eigendecomposition: solver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

}  // namespace

double operator_norm(const ComplexMatrix& m, double tol) {
  if (!all_finite(m)) throw DomainError("operator_norm: non-finite entries");
  if (m.size() == 0) return 0.0;
  const double scale = max_abs(m);
  if (m.rows() == m.cols() && is_hermitian(m, tol * (1.0 + scale))) {
    const ComplexMatrix h = (m + m.adjoint()) / 2.0;
    const RealVector ev = hermitian_eigendecomposition(h, 0.0).eigenvalues;
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  return Eigen::BDCSVD<ComplexMatrix>(m).singularValues()(0);
}

double trace_norm(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DomainError("trace_norm: matrix is not square");
  if (m.size() == 0) return 0.0;
  if (!all_finite(m)) throw DomainError("trace_norm: non-finite entries");
  if (is_hermitian(m, 0.0)) {
    return hermitian_eigendecomposition(m, 0.0).eigenvalues.cwiseAbs().sum();
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().sum();
}

void orthonormalize_columns(ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double n0 = m.col(j).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < j; ++k) {
        const cplx proj = m.col(k).dot(m.col(j));
        m.col(j) -= proj * m.col(k);
      }
    }
    const double n = m.col(j).norm();
    if (n <= 1e-10 * std::max(1.0, n0)) throw DomainError("orthonormalize_columns: columns are linearly dependent");
    m.col(j) /= n;
  }
}

}  // namespace gaplab
