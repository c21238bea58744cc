#include "gaplab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace gaplab {

DensityMatrix::DensityMatrix(std::vector<double> probabilities, ComplexMatrix basis) {
  const auto n = static_cast<Eigen::Index>(probabilities.size());
  if (n == 0) throw DomainError("DensityMatrix: empty probability list");
  if (basis.rows() != n || basis.cols() != n) throw DomainError("DensityMatrix: basis shape does not match probabilities");
  if (!all_finite(basis)) throw DomainError("DensityMatrix: non-finite basis entries");
  for (double& p : probabilities) {
    if (!std::isfinite(p) || p < -1e-12) throw DomainError("DensityMatrix: negative or non-finite probability");
    p = std::max(p, 0.0);
  }
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("DensityMatrix: probabilities do not sum to 1");
  for (double& p : probabilities) p /= total;
  if (max_abs(basis.adjoint() * basis - ComplexMatrix::Identity(n, n)) > 1e-10) {
    throw DomainError("DensityMatrix: eigenbasis is not unitary");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return probabilities[static_cast<std::size_t>(a)] > probabilities[static_cast<std::size_t>(b)];
  });
  p_.resize(static_cast<std::size_t>(n));
  basis_.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    p_[static_cast<std::size_t>(k)] = probabilities[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    basis_.col(k) = basis.col(order[static_cast<std::size_t>(k)]);
  }
  standard_basis_ = basis_ == ComplexMatrix::Identity(n, n);
}

DensityMatrix DensityMatrix::diagonal(std::vector<double> probabilities) {
  const auto n = static_cast<Eigen::Index>(probabilities.size());
  return DensityMatrix(std::move(probabilities), ComplexMatrix::Identity(n, n));
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  return diagonal(std::vector<double>(static_cast<std::size_t>(dim), 1.0 / static_cast<double>(dim)));
}

DensityMatrix DensityMatrix::from_matrix(const ComplexMatrix& rho) {
  const HermitianEigenSystem es = hermitian_eigendecomposition(rho, 1e-10);
  std::vector<double> p(es.eigenvalues.data(), es.eigenvalues.data() + es.eigenvalues.size());
  return DensityMatrix(std::move(p), es.basis);
}

ComplexMatrix DensityMatrix::matrix() const {
  RealVector p = Eigen::Map<const RealVector>(p_.data(), static_cast<Eigen::Index>(p_.size()));
  return basis_ * p.cast<cplx>().asDiagonal() * basis_.adjoint();
}

ComplexVector DensityMatrix::to_eigenbasis(const ComplexVector& psi) const {
  return standard_basis_ ? psi : ComplexVector(basis_.adjoint() * psi);
}

ComplexVector DensityMatrix::from_eigenbasis(const ComplexVector& c) const {
  return standard_basis_ ? c : ComplexVector(basis_ * c);
}

ComplexVector sample_gaussian(const DensityMatrix& rho, Rng& rng) {
  const auto& p = rho.probabilities();
  ComplexVector z(rho.dim());
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    const double pn = p[static_cast<std::size_t>(n)];
    z(n) = pn > 0.0 ? rng.complex_gaussian(pn) : cplx(0.0, 0.0);
  }
  return rho.from_eigenbasis(z);
}

IndexedSample sample_gap_indexed(const DensityMatrix& rho, Rng& rng) {
  const auto& p = rho.probabilities();
  const std::size_t dim = p.size();

  // Index with probability p_n; zero-weight indices are never chosen.
  const double u = rng.uniform();
  std::size_t chosen = 0;
  double acc = 0.0;
  for (std::size_t n = 0; n < dim; ++n) {
    if (p[n] <= 0.0) continue;
    chosen = n;
    acc += p[n];
    if (u < acc) break;
  }

  ComplexVector z(rho.dim());
  for (std::size_t n = 0; n < dim; ++n) {
    const auto i = static_cast<Eigen::Index>(n);
    if (p[n] <= 0.0) {
      z(i) = 0.0;
    } else if (n == chosen) {
      // |z|² ~ Gamma(shape 2, scale p_n) as the sum of two exponentials.
      const double r2 = p[n] * (rng.exponential() + rng.exponential());
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      z(i) = std::polar(std::sqrt(r2), phase);
    } else {
      z(i) = rng.complex_gaussian(p[n]);
    }
  }
  z /= z.norm();
  return {rho.from_eigenbasis(z), chosen};
}

ComplexVector sample_gap(const DensityMatrix& rho, Rng& rng) {
  return sample_gap_indexed(rho, rng).psi;
}

ComplexVector sample_gap_resampling_oracle(const DensityMatrix& rho, Rng& rng, std::size_t batch) {
  if (batch == 0) throw DomainError("sample_gap_resampling_oracle: batch must be positive");
  const auto& p = rho.probabilities();
  const Eigen::Index dim = rho.dim();
  std::vector<ComplexVector> draws;
  std::vector<double> weights;
  draws.reserve(batch);
  weights.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    ComplexVector z(dim);
    for (Eigen::Index n = 0; n < dim; ++n) {
      const double pn = p[static_cast<std::size_t>(n)];
      z(n) = pn > 0.0 ? rng.complex_gaussian(pn) : cplx(0.0, 0.0);
    }
    weights.push_back(z.squaredNorm());
    draws.push_back(std::move(z));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t pick = batch - 1;
  for (std::size_t b = 0; b < batch; ++b) {
    acc += weights[b];
    if (u < acc) {
      pick = b;
      break;
    }
  }
  ComplexVector z = draws[pick];
  z /= z.norm();
  return rho.from_eigenbasis(z);
}

ComplexMatrix empirical_density_matrix(std::span<const ComplexVector> samples) {
  if (samples.empty()) throw DomainError("empirical_density_matrix: no samples");
  const Eigen::Index dim = samples.front().size();
  ComplexMatrix acc = ComplexMatrix::Zero(dim, dim);
  for (const ComplexVector& psi : samples) {
    if (psi.size() != dim) throw DomainError("empirical_density_matrix: inconsistent sample dimensions");
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw DomainError("empirical_density_matrix: sample is not unit norm");
    acc.selfadjointView<Eigen::Lower>().rankUpdate(psi);
  }
  ComplexMatrix out = acc.selfadjointView<Eigen::Lower>();
  return out / static_cast<double>(samples.size());
}

}  // namespace gaplab
