#include "gaplab/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace gaplab {

namespace {

void require_state(const SpectralDecomposition& spec, const ComplexVector& psi0, const char* who) {
  if (psi0.size() != spec.dim) throw DomainError(std::string(who) + ": state dimension mismatch");
}

void require_observable(const SpectralDecomposition& spec, const ComplexMatrix& b, const char* who) {
  if (b.rows() != spec.dim || b.cols() != spec.dim) throw DomainError(std::string(who) + ": observable dimension mismatch");
}

}  // namespace

cplx phase_average(double delta, double horizon) {
  const double half = 0.5 * delta * horizon;
  if (half == 0.0) return 1.0;
  // e^{iΔT/2} sin(ΔT/2)/(ΔT/2) avoids the cancellation in e^{iΔT} − 1.
  return std::polar(std::sin(half) / half, half);
}

ComplexVector evolve(const SpectralDecomposition& spec, const ComplexVector& psi0, double t) {
  require_state(spec, psi0, "evolve");
  if (t == 0.0) return psi0;
  ComplexVector out = ComplexVector::Zero(spec.dim);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const ComplexMatrix& v = spec.blocks[i];
    out += std::polar(1.0, -spec.energies[i] * t) * (v * (v.adjoint() * psi0));
  }
  return out;
}

std::vector<cplx> expectation_curve(const SpectralDecomposition& spec, const ComplexVector& psi0, const ComplexMatrix& b,
                                    const std::vector<double>& times) {
  require_state(spec, psi0, "expectation_curve");
  require_observable(spec, b, "expectation_curve");
  // φ_e = Π_e ψ₀ and W_ij = ⟨φ_i|B|φ_j⟩, then each time point is O(d_E²).
  const std::size_t d = spec.size();
  std::vector<ComplexVector> phi(d);
  for (std::size_t i = 0; i < d; ++i) phi[i] = spec.blocks[i] * (spec.blocks[i].adjoint() * psi0);
  ComplexMatrix w(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const ComplexVector bphi = b * phi[j];
    for (std::size_t i = 0; i < d; ++i) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = phi[i].dot(bphi);
  }
  std::vector<cplx> out;
  out.reserve(times.size());
  ComplexVector ph(static_cast<Eigen::Index>(d));
  for (double t : times) {
    for (std::size_t i = 0; i < d; ++i) ph(static_cast<Eigen::Index>(i)) = std::polar(1.0, -spec.energies[i] * t);
    out.push_back(ph.dot(w * ph));
  }
  return out;
}

cplx m_rho_b(const SpectralDecomposition& spec, const DensityMatrix& rho, const ComplexMatrix& b) {
  require_observable(spec, b, "m_rho_b");
  if (rho.dim() != spec.dim) throw DomainError("m_rho_b: density matrix dimension mismatch");
  const ContributingSet cs = contributing_set(spec, b);
  const ComplexMatrix r = rho.matrix();
  cplx sum = 0.0;
  for (std::size_t i : cs.members) {
    const ComplexMatrix& v = spec.blocks[i];
    sum += ((v.adjoint() * r * v) * (v.adjoint() * b * v)).trace();
  }
  return sum;
}

cplx m_psi0_b(const SpectralDecomposition& spec, const ComplexVector& psi0, const ComplexMatrix& b) {
  require_state(spec, psi0, "m_psi0_b");
  require_observable(spec, b, "m_psi0_b");
  cplx sum = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const ComplexVector phi = spec.blocks[i] * (spec.blocks[i].adjoint() * psi0);
    sum += phi.dot(b * phi);
  }
  return sum;
}

double time_average_deviation(const SpectralDecomposition& spec, const ComplexVector& psi0, const ComplexMatrix& b, double horizon) {
  require_state(spec, psi0, "time_average_deviation");
  require_observable(spec, b, "time_average_deviation");
  if (!(horizon > 0.0)) throw DomainError("time_average_deviation: horizon must be positive");
  EquilibrationModel model(spec, b);
  return model.finite_deviation(model.pair_amplitudes(psi0), horizon);
}

RMatrix build_r_matrix(const GapIndex& gaps, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("build_r_matrix: horizon must be positive");
  const auto n = static_cast<Eigen::Index>(gaps.values.size());
  RMatrix r;
  r.horizon = horizon;
  r.entries.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    r.entries(a, a) = 1.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      const cplx v = gaps.cluster_of[ua] == gaps.cluster_of[ub] ? cplx(1.0) : phase_average(gaps.values[ua] - gaps.values[ub], horizon);
      r.entries(a, b) = v;
      r.entries(b, a) = std::conj(v);
    }
  }
  return r;
}

RNormCheck r_norm_check(const std::vector<double>& energies, double gap_tol, double kappa, double horizon) {
  if (!(kappa > 0.0) || !(horizon > 0.0)) throw DomainError("r_norm_check: kappa and horizon must be positive");
  if (energies.size() < 2) throw DomainError("r_norm_check: need at least two contributing eigenvalues");
  const GapIndex gaps = enumerate_gaps(energies, gap_tol);
  const RMatrix r = build_r_matrix(gaps, horizon);

  RNormCheck c;
  c.d = energies.size();
  c.pairs = gaps.values.size();
  c.g_kappa = gap_count(gaps, kappa);
  c.norm = operator_norm(r.entries);
  c.bound = static_cast<double>(c.g_kappa) * (1.0 + 8.0 * std::log2(static_cast<double>(c.d)) / (kappa * horizon));
  // Allowance for rounding in the eigenvalue computation only.
  c.holds = c.norm <= c.bound * (1.0 + 1e-12);
  return c;
}

RNormCheck r_norm_check(const SpectralDecomposition& spec, double kappa, double horizon) {
  return r_norm_check(spec.energies, default_gap_tolerance(spec.energies), kappa, horizon);
}

RNormCheck r_norm_check(const ContributingSet& cs, double kappa, double horizon) {
  return r_norm_check(cs.restricted.energies, cs.gap_tol, kappa, horizon);
}

EquilibrationModel::EquilibrationModel(const SpectralDecomposition& spec, const ComplexMatrix& b, double zero_tol)
    : cs_(contributing_set(spec, b, zero_tol)), b_(b) {
  gaps_ = enumerate_gaps(cs_.restricted.energies, cs_.gap_tol);
  const std::size_t d = cs_.restricted.size();
  b_blocks_.resize(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const ComplexMatrix left = cs_.restricted.blocks[i].adjoint() * b;
    for (std::size_t j = 0; j < d; ++j) b_blocks_[i * d + j] = left * cs_.restricted.blocks[j];
  }
}

ComplexMatrix EquilibrationModel::pair_amplitudes(const ComplexVector& psi0) const {
  if (psi0.size() != dim()) throw DomainError("pair_amplitudes: state dimension mismatch");
  const std::size_t d = cs_.restricted.size();
  std::vector<ComplexVector> a(d);
  for (std::size_t i = 0; i < d; ++i) a[i] = cs_.restricted.blocks[i].adjoint() * psi0;
  ComplexMatrix w(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i].dot(b_blocks_[i * d + j] * a[j]);
    }
  }
  return w;
}

ComplexMatrix EquilibrationModel::pair_amplitudes(const DensityMatrix& rho) const {
  if (rho.dim() != dim()) throw DomainError("pair_amplitudes: density matrix dimension mismatch");
  const std::size_t d = cs_.restricted.size();
  const ComplexMatrix r = rho.matrix();
  ComplexMatrix w(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      // tr(ρ Π_i B Π_j) = tr((V_j* ρ V_i)(V_i* B V_j))
      const ComplexMatrix rji = cs_.restricted.blocks[j].adjoint() * r * cs_.restricted.blocks[i];
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (rji * b_blocks_[i * d + j]).trace();
    }
  }
  return w;
}

cplx EquilibrationModel::expectation(const ComplexMatrix& w, double t) const {
  const std::size_t d = cs_.restricted.size();
  ComplexVector ph(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) ph(static_cast<Eigen::Index>(i)) = std::polar(1.0, -cs_.restricted.energies[i] * t);
  return ph.dot(w * ph);
}

const RMatrix& EquilibrationModel::r_matrix(double horizon) {
  for (const RMatrix& r : r_cache_) {
    if (r.horizon == horizon) return r;
  }
  r_cache_.push_back(build_r_matrix(gaps_, horizon));
  return r_cache_.back();
}

double EquilibrationModel::finite_deviation(const ComplexMatrix& w, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("finite_deviation: horizon must be positive");
  return finite_deviation(w, r_matrix(horizon));
}

double EquilibrationModel::finite_deviation(const ComplexMatrix& w, const RMatrix& r) const {
  const auto n = static_cast<Eigen::Index>(gaps_.pairs.size());
  if (n == 0) return 0.0;
  ComplexVector x(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto [i, j] = gaps_.pairs[static_cast<std::size_t>(a)];
    x(a) = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  if (r.entries.rows() != n) throw DomainError("finite_deviation: R matrix does not match the gap index");
  // Σ_αβ x_α R_αβ conj(x_β) = v* R v with v = conj(x).
  const ComplexVector v = x.conjugate();
  return std::max(0.0, v.dot(r.entries * v).real());
}

double EquilibrationModel::infinite_deviation(const ComplexMatrix& w) const {
  std::vector<cplx> sums(gaps_.clusters.size(), cplx(0.0));
  for (std::size_t a = 0; a < gaps_.pairs.size(); ++a) {
    const auto [i, j] = gaps_.pairs[a];
    sums[gaps_.cluster_of[a]] += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double total = 0.0;
  for (const cplx& s : sums) total += std::norm(s);
  return total;
}

double time_grid_average(const std::function<double(double)>& f, double horizon, std::size_t intervals) {
  if (!(horizon > 0.0)) throw DomainError("time_grid_average: horizon must be positive");
  if (intervals < 2) intervals = 2;
  if (intervals % 2 == 1) ++intervals;
  const double h = horizon / static_cast<double>(intervals);
  double sum = f(0.0) + f(horizon);
  for (std::size_t k = 1; k < intervals; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * f(h * static_cast<double>(k));
  return sum * h / 3.0 / horizon;
}

void BoundInputs::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("bound inputs: epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("bound inputs: delta must lie in (0, 1)");
  if (!(kappa > 0.0)) throw DomainError("bound inputs: kappa must be positive");
  if (!(horizon > 0.0)) throw DomainError("bound inputs: T must be positive");
  if (!(norm_b >= 0.0) || !std::isfinite(norm_b)) throw DomainError("bound inputs: norm_B must be finite and non-negative");
  if (!(norm_rho > 0.0 && norm_rho <= 1.0)) throw DomainError("bound inputs: norm_rho must lie in (0, 1]");
}

double BoundInputs::r_norm_factor() const {
  const double log_term = d_EB > 1 ? 8.0 * std::log2(static_cast<double>(d_EB)) / (kappa * horizon) : 0.0;
  return static_cast<double>(G_B_kappa) * (1.0 + log_term);
}

FiniteTimeBound theorem1_bound_finite(const BoundInputs& in) {
  in.validate();
  const double ed = in.epsilon * in.delta;
  const double rest = in.norm_b * in.norm_b * in.norm_rho * static_cast<double>(in.D_EB) * in.r_norm_factor();
  FiniteTimeBound b;
  b.markov_branch = 188.0 / ed;
  b.levy_branch = 25.0 * std::log(24.0 / ed) / (in.delta * kLevyConstant);
  b.branch = b.markov_branch <= b.levy_branch ? "markov" : "levy";
  b.value = std::sqrt(std::min(b.markov_branch, b.levy_branch) * rest);
  return b;
}

double theorem1_bound_infinite(const BoundInputs& in) {
  in.validate();
  return std::sqrt(188.0 / (in.epsilon * in.delta) * in.norm_b * in.norm_b * in.norm_rho * static_cast<double>(in.D_EB) *
                   static_cast<double>(in.D_GB));
}

Prop1Bounds prop1_bounds(const BoundInputs& in) {
  in.validate();
  const double base = in.norm_b * in.norm_b * in.norm_rho;
  const double factor = in.r_norm_factor();
  Prop1Bounds p;
  p.time_variance = 24.0 * base * static_cast<double>(in.D_EB) * factor;
  p.trace_deviation = base * static_cast<double>(in.D_EB) * factor;
  p.dephased_variance = 23.0 * base;
  p.infinite_time_variance = 24.0 * base * static_cast<double>(in.D_EB) * static_cast<double>(in.D_GB);
  return p;
}

double levy_tail_bound(double epsilon_dev, double eta, double norm_rho) {
  if (!(epsilon_dev >= 0.0)) throw DomainError("levy_tail_bound: deviation must be non-negative");
  if (!(eta > 0.0)) throw DomainError("levy_tail_bound: Lipschitz constant must be positive");
  if (!(norm_rho > 0.0 && norm_rho <= 1.0)) throw DomainError("levy_tail_bound: norm_rho must lie in (0, 1]");
  return 12.0 * std::exp(-kLevyConstant * epsilon_dev * epsilon_dev / (2.0 * eta * eta * norm_rho));
}

}  // namespace gaplab
