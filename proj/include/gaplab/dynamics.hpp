#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "gaplab/linalg.hpp"
#include "gaplab/sampler.hpp"
#include "gaplab/spectrum.hpp"

namespace gaplab {

/// Constant of the GAP concentration inequality, 1/(288π²).
inline constexpr double kLevyConstant = 1.0 / (288.0 * std::numbers::pi * std::numbers::pi);

/// Ordered pairs α = (e, e'), e ≠ e', of contributing eigenvalues with G_α = e − e'.
using GapIndex = GapTable;

struct RMatrix {
  ComplexMatrix entries;  // R_αβ = ⟨exp(i(G_α − G_β)t)⟩_T
  double horizon = 0.0;
};

/// ⟨exp(iΔt)⟩_T = (exp(iΔT) − 1)/(iΔT), continuous at Δ = 0.
cplx phase_average(double delta, double horizon);

ComplexVector evolve(const SpectralDecomposition& spec, const ComplexVector& psi0, double t);

std::vector<cplx> expectation_curve(const SpectralDecomposition& spec, const ComplexVector& psi0, const ComplexMatrix& b,
                                    const std::vector<double>& times);

/// M_ρB = Σ_e tr(ρ Π_e B Π_e).
cplx m_rho_b(const SpectralDecomposition& spec, const DensityMatrix& rho, const ComplexMatrix& b);

/// M_ψ₀B = Σ_e ⟨ψ₀|Π_e B Π_e|ψ₀⟩, the infinite time average of ⟨ψ_t|B|ψ_t⟩.
cplx m_psi0_b(const SpectralDecomposition& spec, const ComplexVector& psi0, const ComplexMatrix& b);

/// ⟨|⟨ψ_t|B|ψ_t⟩ − M_ψ₀B|²⟩_T by the exact quadratic form v* R v.
double time_average_deviation(const SpectralDecomposition& spec, const ComplexVector& psi0, const ComplexMatrix& b, double horizon);

/// R for the given gaps; entries of numerically equal gaps (same cluster) are 1.
RMatrix build_r_matrix(const GapIndex& gaps, double horizon);

struct RNormCheck {
  double norm = 0.0;
  double bound = 0.0;
  std::size_t g_kappa = 0;
  std::size_t d = 0;
  std::size_t pairs = 0;
  bool holds = false;
};

/// ‖R‖ against G(κ)(1 + 8 log₂ d / (κT)) over the given eigenvalues.
RNormCheck r_norm_check(const std::vector<double>& energies, double gap_tol, double kappa, double horizon);
RNormCheck r_norm_check(const SpectralDecomposition& spec, double kappa, double horizon);
RNormCheck r_norm_check(const ContributingSet& cs, double kappa, double horizon);

/// Evaluates every time-averaged quantity for one (H, B) pair. Restricts to
/// the contributing set once and caches R per horizon.
class EquilibrationModel {
 public:
  EquilibrationModel(const SpectralDecomposition& spec, const ComplexMatrix& b, double zero_tol = 1e-12);

  const ContributingSet& contributing() const { return cs_; }
  const GapIndex& gaps() const { return gaps_; }
  const ComplexMatrix& observable() const { return b_; }
  Eigen::Index dim() const { return b_.rows(); }

  /// W_ij = ⟨ψ₀|Π_i B Π_j|ψ₀⟩ over contributing eigenvalues.
  ComplexMatrix pair_amplitudes(const ComplexVector& psi0) const;
  /// W_ij = tr(ρ Π_i B Π_j).
  ComplexMatrix pair_amplitudes(const DensityMatrix& rho) const;

  /// Σ_ij exp(i(e_i − e_j)t) W_ij.
  cplx expectation(const ComplexMatrix& w, double t) const;
  /// Σ_i W_ii.
  cplx dephased(const ComplexMatrix& w) const { return w.trace(); }
  /// ⟨|Σ_α exp(iG_α t) W_α|²⟩_T.
  double finite_deviation(const ComplexMatrix& w, double horizon);
  double finite_deviation(const ComplexMatrix& w, const RMatrix& r) const;
  /// Builds (or returns the cached) R for a horizon. Call before sharing the
  /// model across threads; the const overload above never mutates.
  const RMatrix& r_matrix(double horizon);
  /// Infinite-time version: Σ over gap clusters of |Σ_{α∈cluster} W_α|².
  double infinite_deviation(const ComplexMatrix& w) const;

 private:
  ContributingSet cs_;
  GapIndex gaps_;
  ComplexMatrix b_;
  std::vector<ComplexMatrix> b_blocks_;  // V_i* B V_j, row-major over (i, j)
  std::deque<RMatrix> r_cache_;  // stable references
};

/// Composite Simpson average (1/T)∫₀^T f over `intervals` (made even) panels.
/// Used as an independent oracle for the closed-form time averages.
double time_grid_average(const std::function<double(double)>& f, double horizon, std::size_t intervals = 10000);

struct BoundInputs {
  double epsilon = 0.1;
  double delta = 0.1;
  double kappa = 1.0;
  double horizon = 1.0;
  double norm_b = 1.0;
  double norm_rho = 1.0;
  std::size_t d_EB = 1;
  std::size_t D_EB = 1;
  std::size_t D_GB = 1;
  std::size_t G_B_kappa = 1;

  /// Throws DomainError when a field is out of range.
  void validate() const;
  /// G_B(κ)(1 + 8 log₂ d_EB / (κT)); the log term vanishes for d_EB ≤ 1.
  double r_norm_factor() const;
};

struct FiniteTimeBound {
  double value = 0.0;
  double markov_branch = 0.0;  // 188/(εδ) prefactor
  double levy_branch = 0.0;    // 25 log(24/(εδ))/(δC) prefactor
  std::string branch;          // "markov" or "levy"
};

FiniteTimeBound theorem1_bound_finite(const BoundInputs& in);
double theorem1_bound_infinite(const BoundInputs& in);

struct Prop1Bounds {
  double time_variance = 0.0;           // E_ρ⟨|f − M_ψ₀B|²⟩_T
  double trace_deviation = 0.0;         // ⟨|tr(e^{iHt}Be^{−iHt}ρ) − M_ρB|²⟩_T
  double dephased_variance = 0.0;       // Var_ρ M_ψ₀B
  double infinite_time_variance = 0.0;  // E_ρ of the infinite time average
};

Prop1Bounds prop1_bounds(const BoundInputs& in);

/// 12 exp(−C ε² / (2 η² ‖ρ‖)).
double levy_tail_bound(double epsilon_dev, double eta, double norm_rho);

}  // namespace gaplab
