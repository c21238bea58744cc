// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "gaplab/dynamics.hpp"
#include "gaplab/experiments.hpp"
#include "gaplab/moments.hpp"
#include "gaplab/parallel.hpp"
#include "gaplab/sampler.hpp"
#include "gaplab/scenario.hpp"
#include "gaplab/spectrum.hpp"
#include "gaplab/statistics.hpp"

using namespace gaplab;

namespace {

constexpr double kSigmas = 4.0;

struct Outcome {
  bool passed = false;
  std::string detail;
};

unsigned pool_size() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ComplexMatrix diag(const std::vector<double>& v) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

// ⟨ψ|A|ψ⟩ for n GAP(ρ) draws, each from its own child stream.
std::vector<cplx> gap_values(const DensityMatrix& rho, const ComplexMatrix& a, std::size_t n, const Rng& root) {
  return parallel_map(n, pool_size(), [&](std::size_t i) {
    Rng r = root.child(i);
    const ComplexVector psi = sample_gap(rho, r);
    return psi.dot(a * psi);
  });
}

Outcome sampler_fidelity() {
  Rng rng(101);
  const DensityMatrix rho = random_density(8, rng, 0.25);
  const auto start = std::chrono::steady_clock::now();
  Rng draw = rng.child(1);
  std::vector<ComplexVector> xs;
  xs.reserve(200000);
  for (int i = 0; i < 200000; ++i) xs.push_back(sample_gap(rho, draw));
  const double err = trace_norm(empirical_density_matrix(xs) - rho.matrix());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Rng boot = rng.child(2);
  const double se = bootstrap_trace_norm_error(xs, 50, boot);
  return {err <= 0.02 && err <= 5.0 * se && secs < 60.0,
          fmt("trace-norm error %.5f (limit 0.02), bootstrap SE %.5f, ratio %.2f, sampling %.2f s single-threaded", err, se,
              err / se, secs)};
}

Outcome sampler_cross_oracle() {
  Rng rng(202);
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Index d = 5 + 2 * k;
    const DensityMatrix rho = random_density(d, rng, 0.5);
    const Rng root = rng.child(static_cast<std::uint64_t>(k));
    constexpr std::size_t n = 3000;
    const auto exact = parallel_map(n, pool_size(), [&](std::size_t i) {
      Rng r = root.child(0).child(i);
      return std::norm(rho.to_eigenbasis(sample_gap(rho, r))(0));
    });
    const auto oracle = parallel_map(n, pool_size(), [&](std::size_t i) {
      Rng r = root.child(1).child(i);
      return std::norm(rho.to_eigenbasis(sample_gap_resampling_oracle(rho, r, 10000))(0));
    });
    const double p = ks_two_sample_pvalue(exact, oracle);
    ok = ok && p > 1e-3;
    detail += fmt("%sD=%d KS p=%.3g", k ? ", " : "", static_cast<int>(d), p);
  }
  return {ok, detail + " (threshold 1e-3, 3000 draws each, batch 1e4)"};
}

Outcome haar_specialization() {
  const DensityMatrix rho = DensityMatrix::maximally_mixed(4);
  const Rng root(303);
  const auto c4 = parallel_map(100000, pool_size(), [&](std::size_t i) {
    Rng r = root.child(0).child(i);
    return std::pow(std::norm(sample_gap(rho, r)(0)), 2);
  });
  const VarianceEstimate m4 = estimate_variance(std::span<const double>(c4));
  const double se4 = std::sqrt(m4.variance / static_cast<double>(c4.size()));
  const ComplexMatrix a = diag({1, -1, 1, -1});
  const double exact = gap_variance_exact(rho, a);
  const auto zs = gap_values(rho, a, 100000, root.child(1));
  const VarianceEstimate mc = estimate_variance(std::span<const cplx>(zs));
  const bool ok = std::abs(m4.mean - 0.1) <= kSigmas * se4 && std::abs(exact - 0.2) <= 1e-9 &&
                  std::abs(mc.variance - exact) <= kSigmas * mc.standard_error;
  return {ok, fmt("E|c1|^4 = %.5f +- %.5f (1/10), exact variance %.12f (0.2), MC variance %.5f +- %.5f", m4.mean, se4, exact,
                  mc.variance, mc.standard_error)};
}

Outcome k_integral_forms() {
  const std::vector<double> u(4, 0.25);
  const double want[3] = {4.0 / 3.0, 8.0 / 3.0, 32.0 / 3.0};
  double closed_err = 0.0, equality_err = 0.0;
  for (int k = 0; k <= 2; ++k) {
    const double v = k_integral(u, k);
    closed_err = std::max(closed_err, std::abs(v - want[k]));
    equality_err = std::max(equality_err, std::abs(v - kk_product_bound(0.25, k)));
  }
  Rng rng(404);
  int strict = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 5 + static_cast<Eigen::Index>(rng.below(8));
    const DensityMatrix rho = random_density(d, rng, 0.25);
    bool all = true;
    for (int k = 0; k <= 2; ++k) {
      const double v = k_integral(rho.probabilities(), k), b = kk_product_bound(rho.p_max(), k);
      all = all && v < b;
      worst_ratio = std::max(worst_ratio, v / b);
    }
    strict += all ? 1 : 0;
  }
  return {closed_err <= 1e-8 && equality_err <= 1e-8 && strict == 50,
          fmt("closed-form error %.2e, product-bound equality error %.2e, strict dominance %d/50 (max K/bound %.4f)", closed_err,
              equality_err, strict, worst_ratio)};
}

Outcome lemma1_dominance() {
  struct Row {
    bool dominated;
    bool mc_ok;
    double z;
  };
  const Rng root(505);
  const auto rows = parallel_map(100, pool_size(), [&](std::size_t i) {
    Rng r = root.child(i);
    // p_max < 1/4 rules out D = 4, whose only state with p_max ≤ 1/4 is I/4
    const Eigen::Index d = 5 + static_cast<Eigen::Index>(r.below(8));
    const DensityMatrix rho = random_density(d, r, 0.25);
    const ComplexMatrix a = random_matrix(d, d, r);
    const VarianceReport rep = gap_variance_bound(rho, a);
    Rng mc_rng = r.child(1);
    std::vector<cplx> zs;
    zs.reserve(100000);
    for (int k = 0; k < 100000; ++k) {
      const ComplexVector psi = sample_gap(rho, mc_rng);
      zs.push_back(psi.dot(a * psi));
    }
    const VarianceEstimate ve = estimate_variance(std::span<const cplx>(zs));
    const double z = std::abs(ve.variance - rep.exact_variance) / ve.standard_error;
    return Row{rep.lemma1_bound >= rep.exact_variance, z <= kSigmas, z};
  });
  int dom = 0, mc = 0;
  double worst_z = 0.0;
  for (const Row& r : rows) {
    dom += r.dominated ? 1 : 0;
    mc += r.mc_ok ? 1 : 0;
    worst_z = std::max(worst_z, r.z);
  }
  return {dom == 100 && mc == 100,
          fmt("bound >= exact in %d/100, exact vs MC (1e5 samples) within 4 sigma in %d/100 (max |z| %.2f), D in 5..12", dom, mc,
              worst_z)};
}

Outcome r_norm_bound() {
  Rng rng(606);
  const std::vector<double> kappas{0.05, 0.3, 1.0, 4.0}, horizons{0.5, 5.0, 50.0, 500.0};
  int cells = 0, held = 0;
  double worst = 0.0, zero_err = 0.0;
  for (int s = 0; s < 50; ++s) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> e;
    switch (s % 3) {
      case 0:  // generic
        for (std::size_t k = 0; k < n; ++k) e.push_back(3.0 * rng.gaussian());
        break;
      case 1:  // arithmetic progression, maximal gap degeneracy
        for (std::size_t k = 0; k < n; ++k) e.push_back(0.7 * static_cast<double>(k));
        break;
      default:  // integer levels with many coincident gaps
        for (std::size_t k = 0; k < n; ++k) e.push_back(static_cast<double>(rng.below(3 * n)));
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    if (e.size() < 2) e.push_back(e.back() + 1.0);
    const double tol = default_gap_tolerance(e);
    for (double kappa : kappas) {
      for (double t : horizons) {
        const RNormCheck c = r_norm_check(e, tol, kappa, t);
        ++cells;
        held += c.holds ? 1 : 0;
        worst = std::max(worst, c.norm / c.bound);
      }
    }
    const RNormCheck tiny = r_norm_check(e, tol, 1.0, 1e-9);
    zero_err = std::max(zero_err, std::abs(tiny.norm - static_cast<double>(tiny.pairs)));
  }
  // Well-separated gaps: e_k = 2^k makes every gap distinct by at least 1.
  std::vector<double> sep;
  for (int k = 0; k < 6; ++k) sep.push_back(std::ldexp(1.0, k));
  const double long_norm = r_norm_check(sep, default_gap_tolerance(sep), 1.0, 1e6).norm;
  return {held == cells && cells == 800 && zero_err <= 1e-6 && std::abs(long_norm - 1.0) <= 1e-3,
          fmt("bound held in %d/%d cells (max norm/bound %.3f), T->0 pair-count error %.2e, T=1e6 nondegenerate norm %.7f", held,
              cells, worst, zero_err, long_norm)};
}

ScenarioConfig moment_scenario(std::size_t k, Rng& rng) {
  ScenarioConfig c;
  c.seed = 7000 + k;
  c.dimension = 8 + static_cast<Eigen::Index>(rng.below(25));
  // a third of the scenarios carry planted degeneracies
  if (k % 3 == 2) {
    std::vector<std::size_t> plan;
    Eigen::Index left = c.dimension;
    while (left > 0) {
      const auto m = std::min<Eigen::Index>(left, 1 + static_cast<Eigen::Index>(rng.below(3)));
      plan.push_back(static_cast<std::size_t>(m));
      left -= m;
    }
    c.hamiltonian.degeneracy_plan = plan;
  }
  if (k % 4 == 1) c.hamiltonian.snap = GapSnap::arithmetic;
  c.rho.source = "random";
  if (k % 2 == 0) {
    c.observable.source = "macro";
  } else {
    c.observable.source = "random_projector";
    c.observable.rank = std::max<Eigen::Index>(1, c.dimension / 3);
  }
  c.n_states = 200;
  c.n_times = 256;
  c.horizons = {10.0, 100.0};
  c.kappas = {0.1, 1.0};
  c.epsilon = c.delta = 0.1;
  c.checks = {true, true, false, false, false};
  return c;
}

struct MomentRun {
  std::vector<Report> reports;
};

const MomentRun& moment_runs() {
  static const MomentRun runs = [] {
    MomentRun m;
    Rng rng(707);
    for (std::size_t k = 0; k < 20; ++k) {
      RunOptions opt;
      opt.workers = pool_size();
      m.reports.push_back(run_scenario(moment_scenario(k, rng), opt));
    }
    return m;
  }();
  return runs;
}

Outcome prop1_moments() {
  int total = 0, passed = 0, vacuous = 0;
  double min_margin = 1e300;
  for (const Report& r : moment_runs().reports) {
    for (const CheckRecord& c : r.checks) {
      if (c.name.rfind("prop1_", 0) != 0) continue;
      ++total;
      passed += c.passed ? 1 : 0;
      vacuous += c.vacuous ? 1 : 0;
      if (c.details.value("holds", false) && c.bound > 0.0) min_margin = std::min(min_margin, c.margin / c.bound);
    }
  }
  return {total > 0 && passed == total,
          fmt("%d/%d moment checks within 4 sigma over 20 scenarios (D 8..32), %d flagged vacuous, min relative margin %.3f", passed,
              total, vacuous, min_margin)};
}

Outcome theorem1_exceedance() {
  int total = 0, passed = 0, vacuous = 0, held = 0;
  double worst = 0.0;
  for (const Report& r : moment_runs().reports) {
    for (const CheckRecord& c : r.checks) {
      if (c.name.rfind("theorem1_", 0) != 0) continue;
      ++total;
      passed += c.passed ? 1 : 0;
      vacuous += c.vacuous ? 1 : 0;
      held += c.details.value("holds", false) ? 1 : 0;
      worst = std::max(worst, c.measured);
    }
  }
  return {total > 0 && passed == total,
          fmt("%d/%d cells pass (fraction <= eps + 4 sigma held in %d, %d flagged vacuous), max exceedance fraction %.3f", passed,
              total, held, vacuous, worst)};
}

Outcome concentration_scaling() {
  ScenarioConfig c;
  c.seed = 808;
  c.dimension = 16;
  c.rho.source = "uniform";
  c.observable.source = "random_projector";
  c.observable.rank = 8;
  c.checks = {false, false, false, true, false};
  c.levy.dims = {16, 64, 256};
  c.levy.n_samples = 2000;
  RunOptions opt;
  opt.workers = pool_size();
  const Report r = run_scenario(c, opt);
  double slope = 0.0;
  int tails = 0, tails_ok = 0, vacuous = 0;
  bool slope_ok = false;
  for (const CheckRecord& rec : r.checks) {
    if (rec.name == "levy_scaling") {
      slope = rec.measured;
      slope_ok = rec.passed;
    } else if (rec.name.rfind("levy_tail[", 0) == 0) {
      ++tails;
      tails_ok += rec.passed ? 1 : 0;
      vacuous += rec.vacuous ? 1 : 0;
    }
  }
  return {slope_ok && tails == tails_ok,
          fmt("log-log slope %.3f (target -1 +- 0.2), tail inequality %d/%d grid points, %d flagged vacuous", slope, tails_ok, tails,
              vacuous)};
}

Outcome exact_identities() {
  Rng rng(909);
  int ok = 0, total = 0;
  double worst_quad = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    ScenarioConfig c;
    c.seed = 9000 + k;
    c.dimension = 6 + static_cast<Eigen::Index>(rng.below(11));
    c.observable.source = k % 2 ? "random_projector" : "macro";
    c.observable.rank = 2;
    c.horizons = {5.0 + 5.0 * static_cast<double>(k)};
    c.checks = {false, false, false, false, true};
    RunOptions opt;
    opt.workers = pool_size();
    for (const CheckRecord& rec : run_scenario(c, opt).checks) {
      ++total;
      ok += rec.passed ? 1 : 0;
    }
    // independent closed form vs quadrature on a fresh state
    const Scenario sc = build_scenario(c);
    Rng s = rng.child(k);
    const ComplexVector psi0 = sample_gap(sc.rho, s);
    const double horizon = c.horizons[0];
    const cplx mean = m_psi0_b(sc.spec, psi0, sc.b);
    const double closed = time_average_deviation(sc.spec, psi0, sc.b, horizon);
    const double grid = time_grid_average(
        [&](double t) {
          const ComplexVector psi_t = evolve(sc.spec, psi0, t);
          return std::norm(psi_t.dot(sc.b * psi_t) - mean);
        },
        horizon, 200000);
    const double diff = std::abs(closed - grid);
    worst_quad = std::max(worst_quad, diff);
    ++total;
    ok += diff <= 1e-6 ? 1 : 0;
  }
  return {ok == total, fmt("%d/%d identity checks over 10 instances, max |closed form - quadrature| %.2e", ok, total, worst_quad)};
}

Outcome determinism() {
  ScenarioConfig c;
  c.seed = 1111;
  c.dimension = 12;
  c.hamiltonian.degeneracy_plan = {2, 1, 3, 1, 1, 2, 2};
  c.observable.source = "macro";
  c.n_states = 64;
  c.n_times = 64;
  c.lemma1_samples = 4000;
  c.horizons = {10.0};
  c.kappas = {0.5};
  c.levy.dims = {8, 16, 32};
  c.levy.n_samples = 400;
  std::vector<std::string> dumps;
  for (unsigned w : {1u, 2u, 8u}) {
    RunOptions opt;
    opt.workers = w;
    dumps.push_back(run_scenario(c, opt).to_json().dump(2));
  }
  const bool same = dumps[0] == dumps[1] && dumps[1] == dumps[2];
  return {same, fmt("reports with 1, 2, 8 workers %s (%zu bytes)", same ? "byte-identical" : "DIFFER", dumps[0].size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sampler_fidelity", sampler_fidelity},
      {"sampler_cross_oracle", sampler_cross_oracle},
      {"haar_specialization", haar_specialization},
      {"k_integral_closed_forms", k_integral_forms},
      {"lemma1_dominance", lemma1_dominance},
      {"r_norm_bound", r_norm_bound},
      {"prop1_moments", prop1_moments},
      {"theorem1_exceedance", theorem1_exceedance},
      {"concentration_scaling", concentration_scaling},
      {"exact_identities", exact_identities},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
