#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "gaplab/linalg.hpp"
#include "gaplab/sampler.hpp"

namespace gaplab {

/// E_ρ⟨ψ|A|ψ⟩ = tr(Aρ) under GAP(ρ).
cplx gap_expectation(const DensityMatrix& rho, const ComplexMatrix& a);

/// K^(k) = (1/k!) ∫₀^∞ x^k Π_l (1 + x p_l)^{-1} dx for k ∈ {0, 1, 2}.
/// Requires p_max < 1/(k+1). Throws ConvergenceError if the absolute error
/// estimate exceeds 1e-10.
double k_integral(std::span<const double> probabilities, int k);

/// K_mn = ∫₀^∞ (1 + x p_m)^{-1} (1 + x p_n)^{-1} Π_l (1 + x p_l)^{-1} dx.
double k_mn_integral(std::span<const double> probabilities, std::size_t m, std::size_t n);

/// Π_{j=1}^{k+1} 1/(1 − j p_max); an upper bound on K^(k).
double kk_product_bound(double p_max, int k);

struct KIntegralTable {
  double k0 = 0.0, k1 = 0.0, k2 = 0.0;
  ComplexMatrix::Index size = 0;
  Eigen::MatrixXd kmn;  // symmetric
};

/// All K^(k) (those that are integrable) and the full K_mn table.
KIntegralTable k_integral_table(std::span<const double> probabilities);

/// Exact Var_ρ⟨ψ|A|ψ⟩ = E|⟨ψ|A'|ψ⟩|² for A' = A − tr(Aρ)I, via the fourth
/// moments E(|c_m|²|c_n|²) = p_m p_n (1 + δ_mn) K_mn. Needs all p_n > 0 and D ≥ 4.
double gap_variance_exact(const DensityMatrix& rho, const ComplexMatrix& a);

struct VarianceReport {
  double exact_variance = 0.0;
  double lemma1_bound = 0.0;
  /// Same right-hand side with K^(k) from quadrature instead of the product bound.
  double quadrature_bound = 0.0;
  double p_max = 0.0;
  /// Number of tiny negative results clamped to zero.
  int clamped = 0;
  std::map<std::string, double> term_breakdown;
};

/// Evaluates the variance upper bound term by term for A as given, along
/// with the exact variance. Requires p_max ≤ 1/4 and D ≥ 4.
VarianceReport gap_variance_bound(const DensityMatrix& rho, const ComplexMatrix& a);

}  // namespace gaplab
