#include <doctest.h>

#include <cmath>

#include "gaplab/linalg.hpp"
#include "gaplab/rng.hpp"
#include "gaplab/scenario.hpp"

using namespace gaplab;

namespace {

ComplexMatrix random_hermitian(Eigen::Index d, Rng& rng) {
  const ComplexMatrix g = random_matrix(d, d, rng);
  return (g + g.adjoint()) / 2.0;
}

ComplexMatrix diag(std::initializer_list<double> v) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

}  // namespace

TEST_CASE("eigendecomposition of the identity") {
  const auto es = hermitian_eigendecomposition(ComplexMatrix::Identity(4, 4));
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(es.eigenvalues(i) == doctest::Approx(1.0));
  CHECK(max_abs(es.basis.adjoint() * es.basis - ComplexMatrix::Identity(4, 4)) < 1e-12);
}

TEST_CASE("eigendecomposition of a diagonal matrix sorts ascending") {
  const auto es = hermitian_eigendecomposition(diag({2.0, -1.0}));
  CHECK(es.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(es.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(std::abs(es.basis(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(es.basis(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("random Hermitian matrices are reconstructed from their eigensystem") {
  Rng rng(11);
  for (Eigen::Index d : {6, 17, 64, 256}) {
    const ComplexMatrix m = random_hermitian(d, rng);
    const auto es = hermitian_eigendecomposition(m);
    const ComplexMatrix u = es.basis;
    CHECK(max_abs(u.adjoint() * u - ComplexMatrix::Identity(d, d)) <= 1e-10);
    const ComplexMatrix residual = m * u - u * es.eigenvalues.cast<cplx>().asDiagonal();
    CHECK(max_abs(residual) <= 1e-9 * (1.0 + operator_norm(m)));
    CHECK(max_abs(m - u * es.eigenvalues.cast<cplx>().asDiagonal() * u.adjoint()) <= 1e-9 * (1.0 + operator_norm(m)));
  }
}

TEST_CASE("eigendecomposition rejects bad input") {
  CHECK_THROWS_AS(hermitian_eigendecomposition(ComplexMatrix::Zero(2, 3)), DomainError);
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(hermitian_eigendecomposition(m), DomainError);
  m(0, 1) = std::nan("");
  CHECK_THROWS_AS(hermitian_eigendecomposition(m), DomainError);
}

TEST_CASE("operator norm") {
  CHECK(operator_norm(ComplexMatrix::Identity(5, 5)) == doctest::Approx(1.0));
  CHECK(operator_norm(diag({3.0, -5.0})) == doctest::Approx(5.0));

  // rank one |u><v| has norm |u||v|
  Rng rng(3);
  ComplexVector u = random_matrix(7, 1, rng).col(0), v = random_matrix(7, 1, rng).col(0);
  u *= 2.0 / u.norm();
  v *= 3.0 / v.norm();
  CHECK(operator_norm(u * v.adjoint()) == doctest::Approx(6.0).epsilon(1e-9));

  // against the SVD for non-normal input
  const ComplexMatrix g = random_matrix(9, 9, rng);
  const double sv = Eigen::JacobiSVD<ComplexMatrix>(g).singularValues()(0);
  CHECK(operator_norm(g) == doctest::Approx(sv).epsilon(1e-8));
}

TEST_CASE("trace norm") {
  CHECK(trace_norm(ComplexMatrix::Identity(6, 6)) == doctest::Approx(6.0));
  CHECK(trace_norm(diag({1.0, -2.0, 0.0})) == doctest::Approx(3.0));
  CHECK_THROWS_AS(trace_norm(ComplexMatrix::Zero(2, 3)), DomainError);

  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const ComplexMatrix a = random_density(6, rng, 1.0).matrix();
    const ComplexMatrix b = random_density(6, rng, 1.0).matrix();
    const double t = trace_norm(a - b);
    CHECK(t >= 0.0);
    CHECK(t <= 2.0 + 1e-12);
  }
}

TEST_CASE("Haar unitaries are unitary and seed-reproducible") {
  Rng a(99), b(99);
  const ComplexMatrix u = haar_unitary(12, a);
  CHECK(max_abs(u.adjoint() * u - ComplexMatrix::Identity(12, 12)) <= 1e-12);
  CHECK(max_abs(u - haar_unitary(12, b)) == 0.0);
}

TEST_CASE("orthonormalize_columns") {
  Rng rng(8);
  ComplexMatrix m = random_matrix(10, 4, rng);
  orthonormalize_columns(m);
  CHECK(max_abs(m.adjoint() * m - ComplexMatrix::Identity(4, 4)) <= 1e-12);
}

TEST_CASE("derived RNG streams are independent of call order") {
  const Rng root(1234);
  Rng c3 = root.child(3);
  Rng c1 = root.child(1);
  Rng again = Rng(1234).child(3);
  CHECK(c3.next_u64() == again.next_u64());
  CHECK(c1.next_u64() != Rng(1234).child(2).next_u64());
  for (int i = 0; i < 1000; ++i) {
    const double u = c1.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
