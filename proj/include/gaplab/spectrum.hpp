#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "gaplab/linalg.hpp"

namespace gaplab {

/// H = Σ_e e Π_e with Π_e = V_e V_e* for the orthonormal block V_e.
struct SpectralDecomposition {
  std::vector<double> energies;       // strictly increasing
  std::vector<ComplexMatrix> blocks;  // dim x multiplicity each
  Eigen::Index dim = 0;

  std::size_t size() const { return energies.size(); }
  Eigen::Index multiplicity(std::size_t i) const { return blocks[i].cols(); }
  ComplexMatrix projector(std::size_t i) const { return blocks[i] * blocks[i].adjoint(); }
  double diameter() const { return energies.empty() ? 0.0 : energies.back() - energies.front(); }
  ComplexMatrix hamiltonian() const;

  /// Nondegenerate spectrum in the standard basis.
  static SpectralDecomposition diagonal(const std::vector<double>& energies, double group_tol = 1e-9);
  /// Sub-spectrum keeping only the listed eigenvalue indices (in order).
  SpectralDecomposition restrict_to(const std::vector<std::size_t>& members) const;
};

struct SpectralStats {
  std::size_t d_E = 0;  // number of distinct eigenvalues
  std::size_t D_E = 0;  // maximal degeneracy
  std::size_t D_G = 0;  // maximal gap degeneracy
};

/// A nonzero gap value with the ordered pairs (e, e') realizing it.
struct GapCluster {
  double value = 0.0;
  std::size_t count = 0;
};

/// Every ordered pair (i, j), i != j, of eigenvalue indices with its gap
/// e_i − e_j and the id of the cluster of numerically equal gaps it falls in.
struct GapTable {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> values;
  std::vector<std::size_t> cluster_of;
  std::vector<GapCluster> clusters;  // ascending by value
};

/// 1e-9 times the spectral diameter.
double default_gap_tolerance(const std::vector<double>& energies);

/// Merges raw eigenvalues within group_tol of a neighbour (transitive closure
/// on the sorted list); the group value is the arithmetic mean and each block
/// is re-orthonormalized.
SpectralDecomposition group_eigenvalues(const RealVector& raw_eigs, const ComplexMatrix& eigvecs, double group_tol);

/// Diagonalizes a Hermitian H and groups its eigenvalues.
SpectralDecomposition decompose_hamiltonian(const ComplexMatrix& h, double group_tol = 1e-9);

/// Gaps closer than gap_tol (transitively) share a cluster.
GapTable enumerate_gaps(const std::vector<double>& energies, double gap_tol);

SpectralStats spectral_stats(const SpectralDecomposition& spec, std::optional<double> gap_tol = std::nullopt);

/// G(κ): maximal number of ordered gaps in a half-open window [E, E + κ).
std::size_t gap_count(const SpectralDecomposition& spec, double kappa, std::optional<double> gap_tol = std::nullopt);
std::size_t gap_count(const GapTable& gaps, double kappa);

struct ContributingSet {
  std::vector<std::size_t> members;  // indices into the parent's energies
  SpectralDecomposition restricted;
  double gap_tol = 0.0;  // inherited from the parent spectrum
  std::size_t d_EB = 0;
  std::size_t D_EB = 0;
  std::size_t D_GB = 0;

  /// G_B(κ).
  std::size_t gap_count(double kappa) const;
};

/// 𝓔_B: e contributes iff ‖Π_e B‖_F or ‖B Π_e‖_F exceeds zero_tol ‖B‖_F.
ContributingSet contributing_set(const SpectralDecomposition& spec, const ComplexMatrix& b, double zero_tol = 1e-12,
                                 std::optional<double> gap_tol = std::nullopt);

}  // namespace gaplab
