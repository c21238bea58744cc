#include "gaplab/moments.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gaplab {

namespace {

constexpr double kAbsTol = 1e-10;
constexpr unsigned kMaxDepth = 13;  // at most 2^13 panels

// ∫₀^∞ f(x) dx through x = u/(1−u).
template <class F>
double integrate_half_line(F&& f, const char* who) {
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double w = 1.0 - u;
    return f(u / w) / (w * w);
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, kMaxDepth, 1e-14, &error);
  if (!std::isfinite(value) || error > kAbsTol) {
    throw ConvergenceError(std::string(who) + ": quadrature did not reach absolute tolerance 1e-10");
  }
  return value;
}

double log_product(std::span<const double> p, double x) {
  double s = 0.0;
  for (double pl : p) s += std::log1p(x * pl);
  return s;
}

double max_probability(std::span<const double> p) {
  if (p.empty()) throw DomainError("k_integral: empty probability list");
  return *std::max_element(p.begin(), p.end());
}

// Eigenbasis representation of A.
ComplexMatrix in_rho_basis(const DensityMatrix& rho, const ComplexMatrix& a) {
  if (a.rows() != rho.dim() || a.cols() != rho.dim()) throw DomainError("observable dimension does not match density matrix");
  if (rho.standard_basis()) return a;
  return rho.basis().adjoint() * a * rho.basis();
}

void require_lemma_domain(const DensityMatrix& rho, const char* who) {
  if (rho.dim() < 4) throw DomainError(std::string(who) + ": dimension must be at least 4");
}

double exact_variance_in_basis(const ComplexMatrix& at, const std::vector<double>& p, const Eigen::MatrixXd& kmn, int& clamped) {
  const Eigen::Index dim = at.rows();
  double total = 0.0;
  double scale = 0.0;
  for (Eigen::Index m = 0; m < dim; ++m) {
    for (Eigen::Index n = 0; n < dim; ++n) {
      const double w = p[static_cast<std::size_t>(m)] * p[static_cast<std::size_t>(n)] * kmn(m, n);
      const double term = (at(m, m) * std::conj(at(n, n))).real() + std::norm(at(m, n));
      total += term * w;
      scale += std::abs(term) * w;
    }
  }
  if (total < 0.0) {
    if (total < -1e-12 * std::max(1.0, scale)) throw ConvergenceError("gap_variance_exact: negative variance beyond rounding floor");
    ++clamped;
    total = 0.0;
  }
  return total;
}

}  // namespace

cplx gap_expectation(const DensityMatrix& rho, const ComplexMatrix& a) {
  if (a.rows() != rho.dim() || a.cols() != rho.dim()) throw DomainError("gap_expectation: dimension mismatch");
  const auto& p = rho.probabilities();
  cplx sum = 0.0;
  for (Eigen::Index n = 0; n < rho.dim(); ++n) {
    const auto v = rho.basis().col(n);
    sum += p[static_cast<std::size_t>(n)] * v.dot(a * v);
  }
  return sum;
}

double k_integral(std::span<const double> probabilities, int k) {
  if (k < 0 || k > 2) throw DomainError("k_integral: k must be 0, 1 or 2");
  const double p_max = max_probability(probabilities);
  if (!(p_max < 1.0 / (k + 1))) throw DomainError("k_integral: integrability requires p_max < 1/(k+1)");
  const double log_fact = std::lgamma(static_cast<double>(k) + 1.0);
  auto f = [&](double x) {
    if (x == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(x) - log_fact - log_product(probabilities, x));
  };
  return integrate_half_line(f, "k_integral");
}

double k_mn_integral(std::span<const double> probabilities, std::size_t m, std::size_t n) {
  if (m >= probabilities.size() || n >= probabilities.size()) throw DomainError("k_mn_integral: index out of range");
  const auto positive = std::count_if(probabilities.begin(), probabilities.end(), [](double p) { return p > 0.0; });
  const int extra = (probabilities[m] > 0.0) + (probabilities[n] > 0.0);
  if (positive + extra < 2) throw DomainError("k_mn_integral: integrand decays too slowly");
  const double pm = probabilities[m];
  const double pn = probabilities[n];
  auto f = [&](double x) { return std::exp(-log_product(probabilities, x) - std::log1p(x * pm) - std::log1p(x * pn)); };
  return integrate_half_line(f, "k_mn_integral");
}

double kk_product_bound(double p_max, int k) {
  if (k < 0 || k > 2) throw DomainError("kk_product_bound: k must be 0, 1 or 2");
  if (!(p_max >= 0.0 && p_max < 1.0 / (k + 1))) throw DomainError("kk_product_bound: p_max out of range");
  double prod = 1.0;
  for (int j = 1; j <= k + 1; ++j) prod /= 1.0 - j * p_max;
  return prod;
}

KIntegralTable k_integral_table(std::span<const double> probabilities) {
  KIntegralTable t;
  const double p_max = max_probability(probabilities);
  t.size = static_cast<Eigen::Index>(probabilities.size());
  if (p_max < 1.0) t.k0 = k_integral(probabilities, 0);
  if (p_max < 0.5) t.k1 = k_integral(probabilities, 1);
  if (p_max < 1.0 / 3.0) t.k2 = k_integral(probabilities, 2);
  t.kmn.resize(t.size, t.size);
  for (Eigen::Index m = 0; m < t.size; ++m) {
    for (Eigen::Index n = 0; n <= m; ++n) {
      const double v = k_mn_integral(probabilities, static_cast<std::size_t>(m), static_cast<std::size_t>(n));
      t.kmn(m, n) = v;
      t.kmn(n, m) = v;
    }
  }
  return t;
}

double gap_variance_exact(const DensityMatrix& rho, const ComplexMatrix& a) {
  require_lemma_domain(rho, "gap_variance_exact");
  const auto& p = rho.probabilities();
  if (p.back() <= 0.0) throw DomainError("gap_variance_exact: density matrix has a zero eigenvalue");
  ComplexMatrix at = in_rho_basis(rho, a);
  const cplx mean = gap_expectation(rho, a);
  at.diagonal().array() -= mean;

  Eigen::MatrixXd kmn(rho.dim(), rho.dim());
  for (Eigen::Index m = 0; m < rho.dim(); ++m) {
    for (Eigen::Index n = 0; n <= m; ++n) {
      kmn(m, n) = kmn(n, m) = k_mn_integral(p, static_cast<std::size_t>(m), static_cast<std::size_t>(n));
    }
  }
  int clamped = 0;
  return exact_variance_in_basis(at, p, kmn, clamped);
}

VarianceReport gap_variance_bound(const DensityMatrix& rho, const ComplexMatrix& a) {
  require_lemma_domain(rho, "gap_variance_bound");
  const double pm = rho.p_max();
  if (pm > 0.25 + 1e-12) throw DomainError("gap_variance_bound: p_max must not exceed 1/4");

  const ComplexMatrix at = in_rho_basis(rho, a);
  const auto& p = rho.probabilities();
  const Eigen::Index dim = rho.dim();
  if (p.back() <= 0.0) throw DomainError("gap_variance_bound: density matrix has a zero eigenvalue");

  // tr(A ρ^i A* ρ^j) = Σ_{m,n} |A_mn|² p_n^i p_m^j in the ρ-eigenbasis.
  auto tr_pair = [&](int i, int j) {
    double s = 0.0;
    for (Eigen::Index m = 0; m < dim; ++m) {
      for (Eigen::Index n = 0; n < dim; ++n) {
        s += std::norm(at(m, n)) * std::pow(p[static_cast<std::size_t>(n)], i) * std::pow(p[static_cast<std::size_t>(m)], j);
      }
    }
    return s;
  };
  // Σ_m |tr(A ρ^i P_m)| = Σ_m |A_mm| p_m^i; the double sums factorize.
  auto diag_sum = [&](int i) {
    double s = 0.0;
    for (Eigen::Index m = 0; m < dim; ++m) s += std::abs(at(m, m)) * std::pow(p[static_cast<std::size_t>(m)], i);
    return s;
  };

  VarianceReport r;
  r.p_max = pm;
  auto& t = r.term_breakdown;
  t["tr(A rho A* rho)"] = tr_pair(1, 1);
  t["tr(A rho^2 A* rho)"] = tr_pair(2, 1);
  t["tr(A rho A* rho^2)"] = tr_pair(1, 2);
  t["tr(A rho^3 A* rho)"] = tr_pair(3, 1);
  t["tr(A rho^2 A* rho^2)"] = tr_pair(2, 2);
  t["tr(A rho A* rho^3)"] = tr_pair(1, 3);
  t["sum_mn |tr(A rho^3 P_m) tr(A* rho P_n)|"] = diag_sum(3) * diag_sum(1);
  t["sum_mn |tr(A rho^2 P_m) tr(A* rho^2 P_n)|"] = diag_sum(2) * diag_sum(2);
  t["sum_mn |tr(A rho P_m) tr(A* rho^3 P_n)|"] = diag_sum(1) * diag_sum(3);

  const double first = t["tr(A rho A* rho)"];
  const double second = t["tr(A rho^2 A* rho)"] + t["tr(A rho A* rho^2)"];
  const double bracket = t["tr(A rho^3 A* rho)"] + t["tr(A rho^2 A* rho^2)"] + t["tr(A rho A* rho^3)"] +
                         t["sum_mn |tr(A rho^3 P_m) tr(A* rho P_n)|"] + t["sum_mn |tr(A rho^2 P_m) tr(A* rho^2 P_n)|"] +
                         t["sum_mn |tr(A rho P_m) tr(A* rho^3 P_n)|"];

  const double b0 = 1.0 / (1.0 - pm);
  const double b1 = b0 / (1.0 - 2.0 * pm);
  const double b2 = b1 / (1.0 - 3.0 * pm);
  t["K0 product bound"] = b0;
  t["K1 product bound"] = b1;
  t["K2 product bound"] = b2;
  r.lemma1_bound = b0 * first + b1 * second + 2.0 * b2 * bracket;

  const KIntegralTable k = k_integral_table(p);
  t["K0 quadrature"] = k.k0;
  t["K1 quadrature"] = k.k1;
  t["K2 quadrature"] = k.k2;
  r.quadrature_bound = k.k0 * first + k.k1 * second + 2.0 * k.k2 * bracket;

  ComplexMatrix centered = at;
  centered.diagonal().array() -= gap_expectation(rho, a);
  r.exact_variance = exact_variance_in_basis(centered, p, k.kmn, r.clamped);
  return r;
}

}  // namespace gaplab
