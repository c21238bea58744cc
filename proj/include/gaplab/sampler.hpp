#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gaplab/linalg.hpp"
#include "gaplab/rng.hpp"

namespace gaplab {

/// ρ = Σ_n p_n |n⟩⟨n| with p_n nonincreasing and |n⟩ the columns of basis.
class DensityMatrix {
 public:
  /// Validates and sorts (p, basis) into nonincreasing order. Probabilities in
  /// [-1e-12, 0) are clamped to zero; the sum must be within 1e-9 of 1 and is
  /// then renormalized. The basis must be unitary within 1e-10.
  DensityMatrix(std::vector<double> probabilities, ComplexMatrix basis);

  /// Diagonal ρ in the standard basis.
  static DensityMatrix diagonal(std::vector<double> probabilities);
  /// I/D.
  static DensityMatrix maximally_mixed(Eigen::Index dim);
  /// Spectral form of a Hermitian, unit-trace, PSD matrix.
  static DensityMatrix from_matrix(const ComplexMatrix& rho);

  Eigen::Index dim() const { return basis_.rows(); }
  const std::vector<double>& probabilities() const { return p_; }
  const ComplexMatrix& basis() const { return basis_; }
  double p_max() const { return p_.front(); }
  bool standard_basis() const { return standard_basis_; }
  ComplexMatrix matrix() const;

  /// Coordinates ⟨n|ψ⟩ of an ambient vector and the inverse map.
  ComplexVector to_eigenbasis(const ComplexVector& psi) const;
  ComplexVector from_eigenbasis(const ComplexVector& c) const;

 private:
  std::vector<double> p_;
  ComplexMatrix basis_;
  bool standard_basis_ = false;
};

/// Ψ^G drawn from G(ρ): independent CN(0, p_n) coordinates in the ρ-eigenbasis.
ComplexVector sample_gaussian(const DensityMatrix& rho, Rng& rng);

struct IndexedSample {
  ComplexVector psi;
  std::size_t mixture_index = 0;
};

/// Exact GAP(ρ) draw through the size-biased mixture representation of GA(ρ):
/// pick n with probability p_n, draw coordinate n with |z_n|² ~ Gamma(2, p_n)
/// and uniform phase, all other coordinates CN(0, p_m), then normalize.
IndexedSample sample_gap_indexed(const DensityMatrix& rho, Rng& rng);
ComplexVector sample_gap(const DensityMatrix& rho, Rng& rng);

/// Cross-check sampler: importance-resamples one of `batch` Gaussian draws
/// with weight ‖ψ‖² and normalizes it.
ComplexVector sample_gap_resampling_oracle(const DensityMatrix& rho, Rng& rng, std::size_t batch);

/// (1/N) Σ |ψ_i⟩⟨ψ_i| for unit vectors ψ_i.
ComplexMatrix empirical_density_matrix(std::span<const ComplexVector> samples);

}  // namespace gaplab
