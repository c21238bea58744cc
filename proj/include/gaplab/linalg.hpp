#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gaplab {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Raised when an input violates an operation's precondition.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an iterative or adaptive numerical routine fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct HermitianEigenSystem {
  RealVector eigenvalues;  // ascending
  ComplexMatrix basis;     // columns are orthonormal eigenvectors
};

/// Largest entry modulus, the max-norm used for all entrywise tolerances.
double max_abs(const ComplexMatrix& m);

bool is_hermitian(const ComplexMatrix& m, double tol);
bool all_finite(const ComplexMatrix& m);

/// Decomposes a Hermitian matrix. Throws DomainError for non-square input or
/// when ‖M − M*‖_max > tol, ConvergenceError if the solver does not converge.
HermitianEigenSystem hermitian_eigendecomposition(const ComplexMatrix& m, double tol = 1e-10);

/// ‖M‖ = largest singular value. Inputs within tol·(1 + max|M_ij|) of
/// Hermitian go through the eigensolver on their Hermitian part.
double operator_norm(const ComplexMatrix& m, double tol = 1e-13);

/// ‖M‖_tr = tr|M|, the sum of singular values.
double trace_norm(const ComplexMatrix& m);

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix with the phases of R's diagonal absorbed into Q.
template <class Rng>
ComplexMatrix haar_unitary(Eigen::Index dim, Rng& rng);

/// Orthonormalizes the columns in place (two passes of modified Gram-Schmidt).
/// Throws DomainError if the columns are numerically dependent.
void orthonormalize_columns(ComplexMatrix& m);

// --- template implementation ---

template <class Rng>
ComplexMatrix haar_unitary(Eigen::Index dim, Rng& rng) {
  ComplexMatrix g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) g(i, j) = rng.complex_gaussian(1.0);
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

}  // namespace gaplab
