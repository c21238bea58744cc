#include "gaplab/spectrum.hpp"

#include <algorithm>
#include <numeric>

namespace gaplab {

ComplexMatrix SpectralDecomposition::hamiltonian() const {
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < size(); ++i) h += energies[i] * projector(i);
  return h;
}

SpectralDecomposition SpectralDecomposition::diagonal(const std::vector<double>& energies, double group_tol) {
  const auto n = static_cast<Eigen::Index>(energies.size());
  RealVector raw(n);
  for (Eigen::Index i = 0; i < n; ++i) raw(i) = energies[static_cast<std::size_t>(i)];
  return group_eigenvalues(raw, ComplexMatrix::Identity(n, n), group_tol);
}

SpectralDecomposition SpectralDecomposition::restrict_to(const std::vector<std::size_t>& members) const {
  SpectralDecomposition out;
  out.dim = dim;
  for (std::size_t i : members) {
    out.energies.push_back(energies.at(i));
    out.blocks.push_back(blocks.at(i));
  }
  return out;
}

double default_gap_tolerance(const std::vector<double>& energies) {
  if (energies.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
  return 1e-9 * (*hi - *lo);
}

SpectralDecomposition group_eigenvalues(const RealVector& raw_eigs, const ComplexMatrix& eigvecs, double group_tol) {
  if (raw_eigs.size() == 0) throw DomainError("group_eigenvalues: empty eigenvalue list");
  if (raw_eigs.size() != eigvecs.cols()) throw DomainError("group_eigenvalues: eigenvalue count does not match eigenvector count");
  if (!(group_tol > 0.0)) throw DomainError("group_eigenvalues: group tolerance must be positive");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(raw_eigs.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return raw_eigs(a) < raw_eigs(b); });

  SpectralDecomposition spec;
  spec.dim = eigvecs.rows();
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && raw_eigs(order[end]) - raw_eigs(order[end - 1]) <= group_tol) ++end;

    ComplexMatrix block(eigvecs.rows(), static_cast<Eigen::Index>(end - start));
    double sum = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      block.col(static_cast<Eigen::Index>(k - start)) = eigvecs.col(order[k]);
      sum += raw_eigs(order[k]);
    }
    orthonormalize_columns(block);
    spec.energies.push_back(sum / static_cast<double>(end - start));
    spec.blocks.push_back(std::move(block));
    start = end;
  }
  return spec;
}

SpectralDecomposition decompose_hamiltonian(const ComplexMatrix& h, double group_tol) {
  const double tol = 1e-12 * (1.0 + max_abs(h));
  const HermitianEigenSystem es = hermitian_eigendecomposition(h, tol);
  return group_eigenvalues(es.eigenvalues, es.basis, group_tol);
}

GapTable enumerate_gaps(const std::vector<double>& energies, double gap_tol) {
  GapTable table;
  const std::size_t n = energies.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      table.pairs.emplace_back(i, j);
      table.values.push_back(energies[i] - energies[j]);
    }
  }
  const std::size_t m = table.values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return table.values[a] < table.values[b]; });

  table.cluster_of.assign(m, 0);
  std::size_t start = 0;
  while (start < m) {
    std::size_t end = start + 1;
    while (end < m && table.values[order[end]] - table.values[order[end - 1]] <= gap_tol) ++end;
    double sum = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      table.cluster_of[order[k]] = table.clusters.size();
      sum += table.values[order[k]];
    }
    table.clusters.push_back({sum / static_cast<double>(end - start), end - start});
    start = end;
  }
  return table;
}

SpectralStats spectral_stats(const SpectralDecomposition& spec, std::optional<double> gap_tol) {
  SpectralStats s;
  s.d_E = spec.size();
  for (std::size_t i = 0; i < spec.size(); ++i) s.D_E = std::max<std::size_t>(s.D_E, static_cast<std::size_t>(spec.multiplicity(i)));
  const GapTable gaps = enumerate_gaps(spec.energies, gap_tol.value_or(default_gap_tolerance(spec.energies)));
  for (const GapCluster& c : gaps.clusters) s.D_G = std::max(s.D_G, c.count);
  return s;
}

std::size_t gap_count(const GapTable& gaps, double kappa) {
  if (!(kappa > 0.0)) throw DomainError("gap_count: kappa must be positive");
  const auto& c = gaps.clusters;
  std::size_t best = 0;
  std::size_t hi = 0;
  std::size_t inside = 0;
  for (std::size_t lo = 0; lo < c.size(); ++lo) {
    if (hi < lo) {
      hi = lo;
      inside = 0;
    }
    while (hi < c.size() && c[hi].value < c[lo].value + kappa) inside += c[hi++].count;
    best = std::max(best, inside);
    inside -= c[lo].count;
  }
  return best;
}

std::size_t gap_count(const SpectralDecomposition& spec, double kappa, std::optional<double> gap_tol) {
  if (!(kappa > 0.0)) throw DomainError("gap_count: kappa must be positive");
  return gap_count(enumerate_gaps(spec.energies, gap_tol.value_or(default_gap_tolerance(spec.energies))), kappa);
}

std::size_t ContributingSet::gap_count(double kappa) const {
  return gaplab::gap_count(restricted, kappa, gap_tol);
}

ContributingSet contributing_set(const SpectralDecomposition& spec, const ComplexMatrix& b, double zero_tol,
                                 std::optional<double> gap_tol) {
  if (b.rows() != spec.dim || b.cols() != spec.dim) throw DomainError("contributing_set: observable dimension mismatch");
  ContributingSet out;
  out.gap_tol = gap_tol.value_or(default_gap_tolerance(spec.energies));
  const double scale = zero_tol * b.norm();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const ComplexMatrix& v = spec.blocks[i];
    // ‖Π_e B‖_F = ‖V* B‖_F and ‖B Π_e‖_F = ‖B V‖_F for orthonormal V.
    const double left = (v.adjoint() * b).norm();
    const double right = (b * v).norm();
    if (left > scale || right > scale) out.members.push_back(i);
  }
  out.restricted = spec.restrict_to(out.members);
  const SpectralStats s = spectral_stats(out.restricted, out.gap_tol);
  out.d_EB = s.d_E;
  out.D_EB = s.D_E;
  out.D_GB = s.D_G;
  return out;
}

}  // namespace gaplab
