#include <doctest.h>

#include <cmath>

#include "gaplab/moments.hpp"
#include "gaplab/scenario.hpp"
#include "gaplab/statistics.hpp"

using namespace gaplab;

namespace {

ComplexMatrix diag(std::initializer_list<double> v) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

VarianceEstimate mc_variance(const DensityMatrix& rho, const ComplexMatrix& a, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> zs;
  zs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ComplexVector psi = sample_gap(rho, rng);
    zs.push_back(psi.dot(a * psi));
  }
  return estimate_variance(std::span<const cplx>(zs));
}

}  // namespace

TEST_CASE("GAP expectation is tr(A rho)") {
  Rng rng(1);
  const auto rho = random_density(6, rng, 0.5);
  CHECK(std::abs(gap_expectation(rho, ComplexMatrix::Identity(6, 6)) - 1.0) <= 1e-12);
  const ComplexMatrix pn = rho.basis().col(2) * rho.basis().col(2).adjoint();
  CHECK(std::abs(gap_expectation(rho, pn) - rho.probabilities()[2]) <= 1e-12);

  const ComplexMatrix a = random_matrix(6, 6, rng);
  std::vector<cplx> zs;
  for (int i = 0; i < 100000; ++i) {
    const ComplexVector psi = sample_gap(rho, rng);
    zs.push_back(psi.dot(a * psi));
  }
  cplx mean = 0.0;
  for (const cplx& z : zs) mean += z;
  mean /= static_cast<double>(zs.size());
  const auto ve = estimate_variance(std::span<const cplx>(zs));
  CHECK(std::abs(mean - gap_expectation(rho, a)) <= 4.0 * std::sqrt(ve.variance / 1e5));
  CHECK_THROWS_AS(gap_expectation(rho, ComplexMatrix::Identity(3, 3)), DomainError);
}

TEST_CASE("K integrals have closed forms for uniform rho") {
  const std::vector<double> p(4, 0.25);
  CHECK(k_integral(p, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(k_integral(p, 1) == doctest::Approx(8.0 / 3.0).epsilon(1e-10));
  CHECK(k_integral(p, 2) == doctest::Approx(32.0 / 3.0).epsilon(1e-10));
  CHECK(k_mn_integral(p, 0, 3) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(k_mn_integral(p, 1, 1) == doctest::Approx(0.8).epsilon(1e-10));

  for (int d : {5, 8, 13}) {
    const std::vector<double> u(static_cast<std::size_t>(d), 1.0 / d);
    double closed = 1.0;
    for (int k = 0; k <= 2; ++k) {
      closed *= static_cast<double>(d) / static_cast<double>(d - k - 1);
      CHECK(k_integral(u, k) == doctest::Approx(closed).epsilon(1e-9));
      CHECK(kk_product_bound(1.0 / d, k) == doctest::Approx(closed).epsilon(1e-12));
    }
  }
}

TEST_CASE("product bound arithmetic and ranges") {
  CHECK(kk_product_bound(0.25, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(kk_product_bound(0.25, 2) == doctest::Approx(32.0 / 3.0));
  CHECK_THROWS_AS(kk_product_bound(0.5, 1), DomainError);
  CHECK_THROWS_AS(k_integral(std::vector<double>{0.5, 0.5}, 1), DomainError);
}

TEST_CASE("K integrals obey their bounds on random rho") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rho = random_density(5 + static_cast<Eigen::Index>(rng.below(8)), rng, 0.25);
    const auto& p = rho.probabilities();
    const auto t = k_integral_table(p);
    CHECK(t.k0 < kk_product_bound(rho.p_max(), 0));
    CHECK(t.k1 < kk_product_bound(rho.p_max(), 1));
    CHECK(t.k2 < kk_product_bound(rho.p_max(), 2));
    for (Eigen::Index m = 0; m < t.size; ++m) {
      for (Eigen::Index n = 0; n < t.size; ++n) {
        const double kmn = t.kmn(m, n);
        CHECK(kmn > 0.0);
        CHECK(kmn <= t.k0);
        const double pm = p[static_cast<std::size_t>(m)], pn = p[static_cast<std::size_t>(n)];
        CHECK(kmn >= t.k0 - (pm + pn) * t.k1 - 1e-12);
        CHECK(kmn <= t.k0 - (pm + pn) * t.k1 + 2.0 * (pm * pm + pm * pn + pn * pn) * t.k2 + 1e-12);
      }
    }
  }
}

TEST_CASE("exact variance special cases") {
  const auto u4 = DensityMatrix::maximally_mixed(4);
  const ComplexMatrix a = diag({1, -1, 1, -1});
  CHECK(gap_variance_exact(u4, a) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::abs(gap_variance_exact(u4, ComplexMatrix::Identity(4, 4))) <= 1e-14);

  const auto mc = mc_variance(u4, a, 100000, 3);
  CHECK(std::abs(mc.variance - 0.2) <= 4.0 * mc.standard_error);

  CHECK_THROWS_AS(gap_variance_exact(DensityMatrix::diagonal({0.5, 0.25, 0.25, 0.0}), a), DomainError);
  CHECK_THROWS_AS(gap_variance_exact(DensityMatrix::maximally_mixed(3), ComplexMatrix::Identity(3, 3)), DomainError);
}

TEST_CASE("exact variance matches Monte Carlo for a random D=6 instance") {
  Rng rng(4);
  const auto rho = random_density(6, rng, 0.3);
  const ComplexMatrix a = random_matrix(6, 6, rng);
  const double exact = gap_variance_exact(rho, a);
  const auto mc = mc_variance(rho, a, 200000, 5);
  CHECK(std::abs(mc.variance - exact) <= 4.0 * mc.standard_error);
}

TEST_CASE("variance bound evaluates the hand-computed example") {
  const auto rep = gap_variance_bound(DensityMatrix::maximally_mixed(4), diag({1, -1, 1, -1}));
  CHECK(rep.lemma1_bound == doctest::Approx(17.0 / 3.0).epsilon(1e-12));
  CHECK(rep.exact_variance == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rep.quadrature_bound <= rep.lemma1_bound + 1e-12);
  CHECK(rep.quadrature_bound >= rep.exact_variance);
  CHECK(rep.term_breakdown.count("tr(A rho A* rho)") == 1);
}

TEST_CASE("variance bound dominates the exact variance") {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 5 + static_cast<Eigen::Index>(rng.below(8));
    const auto rho = random_density(d, rng, 0.25);
    const ComplexMatrix a = random_matrix(d, d, rng);
    const auto rep = gap_variance_bound(rho, a);
    CHECK(rep.lemma1_bound >= rep.exact_variance);
    CHECK(rep.quadrature_bound >= rep.exact_variance);
  }
  const auto ident = gap_variance_bound(random_density(8, rng, 0.25), ComplexMatrix::Identity(8, 8));
  CHECK(ident.lemma1_bound > 0.0);
  CHECK(std::abs(ident.exact_variance) <= 1e-12);
  CHECK_THROWS_AS(gap_variance_bound(DensityMatrix::diagonal({0.4, 0.2, 0.2, 0.2}), ComplexMatrix::Identity(4, 4)), DomainError);
}
