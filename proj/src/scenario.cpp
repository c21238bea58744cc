#include "gaplab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gaplab {

std::size_t MacroDecomposition::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DomainError("macro decomposition: unknown label '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

ComplexMatrix MacroDecomposition::projector(const std::string& label) const {
  const ComplexMatrix& v = blocks[index_of(label)];
  return v * v.adjoint();
}

MacroDecomposition random_macro_decomposition(Eigen::Index dim, std::size_t n_blocks, double eq_fraction, Rng& rng) {
  if (n_blocks == 0 || static_cast<Eigen::Index>(n_blocks) > dim) throw DomainError("random_macro_decomposition: bad block count");
  if (!(eq_fraction > 0.0 && eq_fraction <= 1.0)) throw DomainError("random_macro_decomposition: eq_fraction must lie in (0, 1]");
  const auto others = static_cast<Eigen::Index>(n_blocks - 1);
  Eigen::Index eq = static_cast<Eigen::Index>(std::ceil(eq_fraction * static_cast<double>(dim)));
  eq = std::clamp(eq, Eigen::Index{1}, dim - others);
  if (others == 0) eq = dim;

  MacroDecomposition d;
  d.dim = dim;
  const ComplexMatrix u = haar_unitary(dim, rng);
  d.labels.push_back("eq");
  d.blocks.push_back(u.leftCols(eq));
  Eigen::Index col = eq;
  const Eigen::Index rest = dim - eq;
  for (Eigen::Index k = 0; k < others; ++k) {
    const Eigen::Index size = rest / others + (k < rest % others ? 1 : 0);
    d.labels.push_back("nu" + std::to_string(k + 1));
    d.blocks.push_back(u.middleCols(col, size));
    col += size;
  }
  return d;
}

DensityMatrix canonical_density(const SpectralDecomposition& spec, double beta) {
  if (!(beta >= 0.0)) throw DomainError("canonical_density: beta must be non-negative");
  const double e0 = spec.energies.front();
  std::vector<double> p;
  ComplexMatrix basis(spec.dim, spec.dim);
  Eigen::Index col = 0;
  double z = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double w = std::exp(-beta * (spec.energies[i] - e0));
    for (Eigen::Index c = 0; c < spec.multiplicity(i); ++c, ++col) {
      basis.col(col) = spec.blocks[i].col(c);
      p.push_back(w);
      z += w;
    }
  }
  for (double& x : p) x /= z;
  return DensityMatrix(std::move(p), std::move(basis));
}

DensityMatrix microcanonical_density(const MacroDecomposition& decomp, const std::string& label) {
  const std::size_t mu = decomp.index_of(label);
  const Eigen::Index dmu = decomp.blocks[mu].cols();
  std::vector<double> p(static_cast<std::size_t>(decomp.dim), 0.0);
  ComplexMatrix basis(decomp.dim, decomp.dim);
  basis.leftCols(dmu) = decomp.blocks[mu];
  Eigen::Index col = dmu;
  for (std::size_t k = 0; k < decomp.blocks.size(); ++k) {
    if (k == mu) continue;
    basis.middleCols(col, decomp.blocks[k].cols()) = decomp.blocks[k];
    col += decomp.blocks[k].cols();
  }
  std::fill(p.begin(), p.begin() + dmu, 1.0 / static_cast<double>(dmu));
  return DensityMatrix(std::move(p), std::move(basis));
}

SpectralDecomposition random_hamiltonian(Eigen::Index dim, const std::vector<std::size_t>& plan, Rng& rng, GapSnap snap,
                                         double scale) {
  if (plan.empty() || std::any_of(plan.begin(), plan.end(), [](std::size_t m) { return m == 0; })) {
    throw DomainError("random_hamiltonian: degeneracy plan must list positive multiplicities");
  }
  if (std::accumulate(plan.begin(), plan.end(), std::size_t{0}) != static_cast<std::size_t>(dim)) {
    throw DomainError("random_hamiltonian: degeneracy plan does not sum to the dimension");
  }
  std::vector<double> energies(plan.size());
  if (snap == GapSnap::arithmetic) {
    for (std::size_t k = 0; k < energies.size(); ++k) energies[k] = scale * static_cast<double>(k);
  } else {
    for (double& e : energies) e = scale * rng.gaussian();
    std::sort(energies.begin(), energies.end());
  }

  const ComplexMatrix u = haar_unitary(dim, rng);
  SpectralDecomposition spec;
  spec.dim = dim;
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto m = static_cast<Eigen::Index>(plan[k]);
    spec.energies.push_back(energies[k]);
    spec.blocks.push_back(u.middleCols(col, m));
    col += m;
  }
  for (std::size_t k = 1; k < spec.energies.size(); ++k) {
    if (!(spec.energies[k] - spec.energies[k - 1] > 1e-9 * std::max(1.0, scale))) {
      throw DomainError("random_hamiltonian: drawn energies are not separated; use another seed");
    }
  }
  return spec;
}

DensityMatrix random_density(Eigen::Index dim, Rng& rng, double p_max_cap) {
  if (!(p_max_cap > 0.0 && p_max_cap <= 1.0)) throw DomainError("random_density: cap must lie in (0, 1]");
  if (!(static_cast<double>(dim) * p_max_cap > 1.0)) throw DomainError("random_density: dimension too small for the requested p_max cap");
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (double& x : p) x = rng.exponential();
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;

  const double uniform = 1.0 / static_cast<double>(dim);
  const double target = std::max(uniform, 0.9 * p_max_cap);
  const double pm = *std::max_element(p.begin(), p.end());
  if (pm > target) {
    const double t = (pm - target) / (pm - uniform);
    for (double& x : p) x = (1.0 - t) * x + t * uniform;
  }
  return DensityMatrix(std::move(p), haar_unitary(dim, rng));
}

ComplexMatrix random_projector(Eigen::Index dim, Eigen::Index rank, Rng& rng) {
  if (rank < 0 || rank > dim) throw DomainError("random_projector: rank out of range");
  const ComplexMatrix v = haar_unitary(dim, rng).leftCols(rank);
  return v * v.adjoint();
}

ComplexMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  ComplexMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_gaussian(1.0);
  }
  return m;
}

}  // namespace gaplab
