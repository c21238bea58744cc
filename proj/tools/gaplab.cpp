#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gaplab/dynamics.hpp"
#include "gaplab/experiments.hpp"
#include "gaplab/json_io.hpp"
#include "gaplab/moments.hpp"
#include "gaplab/parallel.hpp"
#include "gaplab/sampler.hpp"
#include "gaplab/spectrum.hpp"
#include "gaplab/statistics.hpp"

namespace fs = std::filesystem;
using namespace gaplab;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
}

std::vector<double> parse_times(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) throw ConfigError("--times expects t0:t1:n");
  double t0 = 0.0, t1 = 0.0;
  long long n = 0;
  try {
    t0 = std::stod(spec.substr(0, a));
    t1 = std::stod(spec.substr(a + 1, b - a - 1));
    n = std::stoll(spec.substr(b + 1));
  } catch (const std::exception&) {
    throw ConfigError("--times expects t0:t1:n with numeric fields");
  }
  if (n < 1 || !std::isfinite(t0) || !std::isfinite(t1)) throw ConfigError("--times needs finite endpoints and n >= 1");
  std::vector<double> times(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) times[static_cast<std::size_t>(k)] = n == 1 ? t0 : t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
  return times;
}

SpectralDecomposition load_spectrum(const std::string& spectrum, const std::string& hamiltonian) {
  if (!spectrum.empty() == !hamiltonian.empty()) throw ConfigError("give exactly one of --spectrum or --hamiltonian");
  if (!spectrum.empty()) return spectrum_from_json(read_json_file(spectrum));
  return decompose_hamiltonian(matrix_from_json(read_json_file(hamiltonian)));
}

// --- subcommands -----------------------------------------------------------

struct RunArgs {
  std::string config, out, csv;
  std::optional<unsigned> workers;
  bool timing = false;
};

int cmd_run(const RunArgs& a) {
  const ScenarioConfig cfg = ScenarioConfig::from_file(a.config);
  RunOptions opt;
  opt.workers = a.workers;
  const Report report = run_scenario(cfg, opt);
  emit(report.to_json(a.timing), a.out);
  if (!a.csv.empty()) write_scenario_curves(cfg, a.csv);
  for (const CheckRecord& r : report.checks) {
    std::cerr << (r.passed ? "pass " : "FAIL ") << r.name << (r.vacuous ? " (vacuous bound)" : "") << '\n';
  }
  return report.passed() ? kExitPass : kExitViolation;
}

struct StatsArgs {
  std::string spectrum, hamiltonian, out;
  std::vector<double> kappas;
  std::optional<double> gap_tol;
};

int cmd_stats(const StatsArgs& a) {
  const SpectralDecomposition spec = load_spectrum(a.spectrum, a.hamiltonian);
  const double tol = a.gap_tol.value_or(default_gap_tolerance(spec.energies));
  const SpectralStats s = spectral_stats(spec, tol);
  std::vector<Eigen::Index> mult;
  for (std::size_t i = 0; i < spec.size(); ++i) mult.push_back(spec.multiplicity(i));
  json table = json::array();
  for (double k : a.kappas) table.push_back({{"kappa", k}, {"G", gap_count(spec, k, tol)}});
  emit({{"d_E", s.d_E},
        {"D_E", s.D_E},
        {"D_G", s.D_G},
        {"gap_tolerance", tol},
        {"eigenvalues", spec.energies},
        {"multiplicities", mult},
        {"G_kappa", table}},
       a.out);
  return kExitPass;
}

struct SampleArgs {
  std::string rho, out, method = "exact";
  std::size_t n = 1000, batch = 10000, bootstrap = 100;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  bool summary = false;
};

int cmd_sample(const SampleArgs& a) {
  const DensityMatrix rho = density_from_json(read_json_file(a.rho));
  const Rng root(a.seed);
  const bool oracle = a.method == "oracle";
  const auto states = parallel_map(a.n, a.workers, [&](std::size_t i) {
    Rng r = root.child(i);
    return oracle ? sample_gap_resampling_oracle(rho, r, a.batch) : sample_gap(rho, r);
  });
  if (!a.summary) {
    json arr = json::array();
    for (const ComplexVector& v : states) arr.push_back(state_to_json(v));
    emit(arr, a.out);
    return kExitPass;
  }
  const ComplexMatrix emp = empirical_density_matrix(states);
  Rng boot = root.child(~std::uint64_t{0});
  json j = {{"n", a.n},
            {"seed", a.seed},
            {"method", a.method},
            {"empirical_density_matrix", matrix_to_json(emp)},
            {"trace_norm_error", trace_norm(emp - rho.matrix())}};
  if (a.bootstrap > 0 && a.n > 1) j["bootstrap_standard_error"] = bootstrap_trace_norm_error(states, a.bootstrap, boot);
  emit(j, a.out);
  return kExitPass;
}

struct VarianceArgs {
  std::string rho, a, out;
  std::size_t mc_check = 0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

int cmd_variance(const VarianceArgs& a) {
  const DensityMatrix rho = density_from_json(read_json_file(a.rho));
  const ComplexMatrix op = matrix_from_json(read_json_file(a.a));
  const VarianceReport rep = gap_variance_bound(rho, op);
  json j = {{"exact_variance", rep.exact_variance},
            {"lemma1_bound", rep.lemma1_bound},
            {"quadrature_bound", rep.quadrature_bound},
            {"p_max", rep.p_max},
            {"clamped", rep.clamped},
            {"term_breakdown", rep.term_breakdown}};
  int rc = kExitPass;
  if (a.mc_check > 1) {
    const Rng root(a.seed);
    const auto zs = parallel_map(a.mc_check, a.workers, [&](std::size_t i) {
      Rng r = root.child(i);
      const ComplexVector psi = sample_gap(rho, r);
      return psi.dot(op * psi);
    });
    const VarianceEstimate ve = estimate_variance(std::span<const cplx>(zs));
    const bool agrees = std::abs(ve.variance - rep.exact_variance) <= 4.0 * ve.standard_error;
    j["mc"] = {{"n", a.mc_check}, {"seed", a.seed}, {"variance", ve.variance}, {"standard_error", ve.standard_error}, {"within_4_sigma", agrees}};
    if (!agrees) rc = kExitViolation;
  }
  emit(j, a.out);
  return rc;
}

struct EvolveArgs {
  std::string spectrum, hamiltonian, psi0, b, times, out;
};

int cmd_evolve(const EvolveArgs& a) {
  const SpectralDecomposition spec = load_spectrum(a.spectrum, a.hamiltonian);
  const ComplexVector psi0 = state_from_json(read_json_file(a.psi0));
  const ComplexMatrix b = matrix_from_json(read_json_file(a.b));
  const std::vector<double> times = parse_times(a.times);
  const std::string csv = format_curve_csv(times, expectation_curve(spec, psi0, b, times));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    const fs::path p(a.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + a.out);
    f << csv;
  }
  return kExitPass;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("bounds inputs: missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bounds inputs: ") + key + ": " + e.what());
  }
}

int cmd_bounds(const std::string& inputs, const std::string& out) {
  const json j = read_json_file(inputs);
  BoundInputs in;
  in.epsilon = field<double>(j, "epsilon");
  in.delta = field<double>(j, "delta");
  in.kappa = field<double>(j, "kappa");
  in.horizon = field<double>(j, "T");
  in.norm_b = field<double>(j, "norm_B");
  in.norm_rho = field<double>(j, "norm_rho");
  in.d_EB = field<std::size_t>(j, "d_EB");
  in.D_EB = field<std::size_t>(j, "D_EB");
  in.D_GB = field<std::size_t>(j, "D_GB");
  in.G_B_kappa = field<std::size_t>(j, "G_B_kappa");
  const FiniteTimeBound fin = theorem1_bound_finite(in);
  const double inf = theorem1_bound_infinite(in);
  const Prop1Bounds p = prop1_bounds(in);
  const double scale = 2.0 * in.norm_b;
  json r = {{"C", kLevyConstant},
            {"r_norm_factor", in.r_norm_factor()},
            {"theorem1_finite",
             {{"value", fin.value},
              {"branch", fin.branch},
              {"markov_prefactor", fin.markov_branch},
              {"levy_prefactor", fin.levy_branch},
              {"vacuous", fin.value > scale}}},
            {"theorem1_infinite", {{"value", inf}, {"vacuous", inf > scale}}},
            {"prop1",
             {{"time_variance", p.time_variance},
              {"trace_deviation", p.trace_deviation},
              {"dephased_variance", p.dephased_variance},
              {"infinite_time_variance", p.infinite_time_variance}}}};
  if (j.contains("levy_eps")) {
    json tail = json::array();
    for (double e : field<std::vector<double>>(j, "levy_eps")) {
      const double v = levy_tail_bound(e, scale, in.norm_rho);
      tail.push_back({{"eps", e}, {"bound", v}, {"vacuous", v >= 1.0}});
    }
    r["levy_tail"] = tail;
  }
  emit(r, out);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaplab: GAP-measure sampling, moment bounds and equilibration checks"};
  app.require_subcommand(1);
  int rc = kExitPass;

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario config and write its report");
  run_cmd->add_option("--config", run.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Report path (stdout if omitted)");
  run_cmd->add_option("--csv", run.csv, "Directory for expectation curves");
  run_cmd->add_option("--workers", run.workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--timing", run.timing, "Include per-section wall time in the report");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Spectral statistics and the G(kappa) table");
  stats_cmd->add_option("--spectrum", stats.spectrum, "Spectrum JSON");
  stats_cmd->add_option("--hamiltonian", stats.hamiltonian, "Hermitian matrix JSON");
  stats_cmd->add_option("--kappa", stats.kappas, "Window width (repeatable)")->check(CLI::PositiveNumber);
  stats_cmd->add_option("--gap-tol", stats.gap_tol, "Gap clustering tolerance");
  stats_cmd->add_option("--out", stats.out, "Output path (stdout if omitted)");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw GAP(rho) states");
  sample_cmd->add_option("--rho", sample.rho, "Density matrix JSON")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--n", sample.n, "Number of states")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", sample.seed, "Seed");
  sample_cmd->add_option("--out", sample.out, "Output path (stdout if omitted)");
  sample_cmd->add_option("--method", sample.method, "exact | oracle")->check(CLI::IsMember({"exact", "oracle"}));
  sample_cmd->add_option("--oracle-batch", sample.batch, "Gaussian batch size for the resampling oracle")->check(CLI::PositiveNumber);
  sample_cmd->add_flag("--summary", sample.summary, "Emit the empirical density matrix instead of the states");
  sample_cmd->add_option("--bootstrap", sample.bootstrap, "Bootstrap resamples for the summary error bar");
  sample_cmd->add_option("--workers", sample.workers, "Worker threads")->check(CLI::PositiveNumber);

  VarianceArgs var;
  auto* var_cmd = app.add_subcommand("variance", "Exact GAP variance of <psi|A|psi> and its upper bound");
  var_cmd->add_option("--rho", var.rho, "Density matrix JSON")->required()->check(CLI::ExistingFile);
  var_cmd->add_option("--A", var.a, "Operator JSON")->required()->check(CLI::ExistingFile);
  var_cmd->add_option("--mc-check", var.mc_check, "Monte Carlo sample count for a cross-check");
  var_cmd->add_option("--seed", var.seed, "Seed for the Monte Carlo check");
  var_cmd->add_option("--workers", var.workers, "Worker threads")->check(CLI::PositiveNumber);
  var_cmd->add_option("--out", var.out, "Output path (stdout if omitted)");

  EvolveArgs evo;
  auto* evo_cmd = app.add_subcommand("evolve", "Expectation curve <psi_t|B|psi_t> as CSV");
  evo_cmd->add_option("--spectrum", evo.spectrum, "Spectrum JSON");
  evo_cmd->add_option("--hamiltonian", evo.hamiltonian, "Hermitian matrix JSON");
  evo_cmd->add_option("--psi0", evo.psi0, "Initial state JSON")->required()->check(CLI::ExistingFile);
  evo_cmd->add_option("--B", evo.b, "Observable JSON")->required()->check(CLI::ExistingFile);
  evo_cmd->add_option("--times", evo.times, "t0:t1:n")->required();
  evo_cmd->add_option("--out", evo.out, "CSV path (stdout if omitted)");

  std::string bounds_inputs, bounds_out;
  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate every equilibration bound for given inputs");
  bounds_cmd->add_option("--inputs", bounds_inputs, "Bound inputs JSON")->required()->check(CLI::ExistingFile);
  bounds_cmd->add_option("--out", bounds_out, "Output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*run_cmd) rc = cmd_run(run);
    else if (*stats_cmd) rc = cmd_stats(stats);
    else if (*sample_cmd) rc = cmd_sample(sample);
    else if (*var_cmd) rc = cmd_variance(var);
    else if (*evo_cmd) rc = cmd_evolve(evo);
    else if (*bounds_cmd) rc = cmd_bounds(bounds_inputs, bounds_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return rc;
}
