#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gaplab/linalg.hpp"
#include "gaplab/rng.hpp"
#include "gaplab/sampler.hpp"
#include "gaplab/spectrum.hpp"

namespace gaplab {

/// H = ⊕_ν H_ν with orthonormal blocks; by convention the largest block is
/// labelled "eq".
struct MacroDecomposition {
  std::vector<std::string> labels;
  std::vector<ComplexMatrix> blocks;  // dim x d_ν each
  Eigen::Index dim = 0;

  std::size_t index_of(const std::string& label) const;
  Eigen::Index block_dim(const std::string& label) const { return blocks[index_of(label)].cols(); }
  ComplexMatrix projector(const std::string& label) const;
};

/// Splits a Haar-random orthonormal basis into `n_blocks` macro spaces; "eq"
/// receives at least ceil(eq_fraction · dim) dimensions and the remainder is
/// shared as evenly as possible by "nu1", "nu2", ...
MacroDecomposition random_macro_decomposition(Eigen::Index dim, std::size_t n_blocks, double eq_fraction, Rng& rng);

/// e^{−βH}/Z in spectral form (shifted by the ground energy before
/// exponentiating).
DensityMatrix canonical_density(const SpectralDecomposition& spec, double beta);

/// P_μ/d_μ.
DensityMatrix microcanonical_density(const MacroDecomposition& decomp, const std::string& label);

enum class GapSnap { none, arithmetic };

/// Random H with eigenvalue multiplicities given by `plan` (ascending energy
/// order) and Haar-random eigenvectors. Energies are i.i.d. N(0, scale²)
/// unless snapped to the progression 0, scale, 2·scale, ...
SpectralDecomposition random_hamiltonian(Eigen::Index dim, const std::vector<std::size_t>& plan, Rng& rng,
                                         GapSnap snap = GapSnap::none, double scale = 1.0);

/// Random ρ with Haar eigenbasis and exponential-weight probabilities mixed
/// with the uniform distribution until p_max ≤ 0.9 · p_max_cap. Needs
/// dim > 1/p_max_cap.
DensityMatrix random_density(Eigen::Index dim, Rng& rng, double p_max_cap = 0.25);

/// Orthogonal projector onto a Haar-random subspace of the given rank.
ComplexMatrix random_projector(Eigen::Index dim, Eigen::Index rank, Rng& rng);

/// Dense complex Ginibre matrix with unit-variance entries.
ComplexMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace gaplab
