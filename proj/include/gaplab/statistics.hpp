#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gaplab/linalg.hpp"
#include "gaplab/rng.hpp"

namespace gaplab {

/// Welford accumulator; merging is order-dependent only in rounding, so
/// callers that need bit-exact results merge in a fixed order.
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Sample variance together with a delta-method standard error
/// sqrt((m4 − s⁴)/N).
struct VarianceEstimate {
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
};
VarianceEstimate estimate_variance(std::span<const double> xs);

/// Complex version: Var Z = E|Z − EZ|².
VarianceEstimate estimate_variance(std::span<const cplx> zs);

/// Asymptotic p-value of the two-sample Kolmogorov–Smirnov statistic.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

/// Pearson chi-squared goodness-of-fit p-value for observed counts against
/// expected probabilities (categories with zero probability are skipped).
double chi_squared_gof_pvalue(std::span<const std::size_t> observed, std::span<const double> probabilities);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};
/// Least-squares fit of log(y) against log(x).
SlopeFit log_log_slope(std::span<const double> x, std::span<const double> y);

/// RMS over `resamples` bootstrap replicates of ‖ρ̂* − ρ̂‖_tr: the statistical
/// error scale of the empirical density matrix in trace norm.
double bootstrap_trace_norm_error(std::span<const ComplexVector> samples, std::size_t resamples, Rng& rng);

}  // namespace gaplab
