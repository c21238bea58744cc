#include "gaplab/statistics.hpp"

#include <algorithm>

#include <boost/math/distributions/chi_squared.hpp>

namespace gaplab {

VarianceEstimate estimate_variance(std::span<const double> xs) {
  VarianceEstimate e;
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - e.mean) * (x - e.mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  e.variance = m2 / (n - 1.0);
  const double s2 = m2 / n;
  e.standard_error = std::sqrt(std::max(0.0, m4 / n - s2 * s2) / n);
  return e;
}

VarianceEstimate estimate_variance(std::span<const cplx> zs) {
  VarianceEstimate e;
  const auto n = static_cast<double>(zs.size());
  if (zs.size() < 2) return e;
  cplx sum = 0.0;
  for (const cplx& z : zs) sum += z;
  const cplx mean = sum / n;
  e.mean = std::abs(mean);
  double m2 = 0.0, m4 = 0.0;
  for (const cplx& z : zs) {
    const double d2 = std::norm(z - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  e.variance = m2 / (n - 1.0);
  const double s2 = m2 / n;
  e.standard_error = std::sqrt(std::max(0.0, m4 / n - s2 * s2) / n);
  return e;
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample_pvalue: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  // Stephens' small-sample correction to the Kolmogorov distribution.
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lambda < 1e-3) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double chi_squared_gof_pvalue(std::span<const std::size_t> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size()) throw DomainError("chi_squared_gof_pvalue: size mismatch");
  double total = 0.0;
  for (std::size_t c : observed) total += static_cast<double>(c);
  double stat = 0.0;
  int categories = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (probabilities[k] <= 0.0) {
      if (observed[k] > 0) return 0.0;
      continue;
    }
    const double expected = total * probabilities[k];
    const double diff = static_cast<double>(observed[k]) - expected;
    stat += diff * diff / expected;
    ++categories;
  }
  if (categories < 2) return 1.0;
  const boost::math::chi_squared dist(categories - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

SlopeFit log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("log_log_slope: need at least two matching points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

double bootstrap_trace_norm_error(std::span<const ComplexVector> samples, std::size_t resamples, Rng& rng) {
  if (samples.empty() || resamples == 0) throw DomainError("bootstrap_trace_norm_error: empty input");
  const Eigen::Index dim = samples.front().size();
  const std::size_t n = samples.size();

  ComplexMatrix base = ComplexMatrix::Zero(dim, dim);
  for (const ComplexVector& s : samples) base.selfadjointView<Eigen::Lower>().rankUpdate(s);
  base = ComplexMatrix(base.selfadjointView<Eigen::Lower>()) / static_cast<double>(n);

  double acc = 0.0;
  std::vector<std::size_t> counts(n);
  for (std::size_t r = 0; r < resamples; ++r) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t k = 0; k < n; ++k) ++counts[rng.below(n)];
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
      if (counts[k] > 0) m.selfadjointView<Eigen::Lower>().rankUpdate(samples[k], static_cast<double>(counts[k]));
    }
    m = ComplexMatrix(m.selfadjointView<Eigen::Lower>()) / static_cast<double>(n);
    const double dist = trace_norm(m - base);
    acc += dist * dist;
  }
  return std::sqrt(acc / static_cast<double>(resamples));
}

}  // namespace gaplab
