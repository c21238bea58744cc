#include "gaplab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "gaplab/dynamics.hpp"
#include "gaplab/moments.hpp"
#include "gaplab/parallel.hpp"
#include "gaplab/statistics.hpp"

namespace gaplab {

namespace {

// RNG stream tags; every random object is derived from (seed, tag, index).
constexpr std::uint64_t kHamiltonianStream = 1;
constexpr std::uint64_t kMacroStream = 2;
constexpr std::uint64_t kRhoStream = 3;
constexpr std::uint64_t kObservableStream = 4;
constexpr std::uint64_t kStateStream = 0x100;
constexpr std::uint64_t kLevyStream = 0x200;
constexpr std::uint64_t kLevyFamilyStream = 0x300;
constexpr std::uint64_t kLemmaStream = 0x400;

constexpr double kSigmas = 4.0;

// --- config parsing ------------------------------------------------------

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(ctx + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& ctx) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(ctx + "." + key + ": " + e.what());
  }
}

// json assignment of a C++ int stores a signed integer
bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t read_count(const json& obj, const char* key, std::size_t fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!is_non_negative_integer(v)) throw ConfigError(ctx + "." + key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::filesystem::path read_path(const json& obj, const std::filesystem::path& base, const std::string& ctx) {
  if (!obj.contains("path") || !obj.at("path").is_string()) throw ConfigError(ctx + ": file source needs a 'path' string");
  std::filesystem::path p = obj.at("path").get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::string fmt(const char* pattern, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

bool is_one_of(const std::string& s, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return s == o; });
}

// --- shared helpers ------------------------------------------------------

CheckRecord upper_check(std::string name, double bound, double measured, double se, bool vacuous, std::uint64_t seed) {
  CheckRecord r;
  r.name = std::move(name);
  r.bound = bound;
  r.measured = measured;
  r.margin = bound - measured;
  r.mc_error = se;
  r.vacuous = vacuous;
  const bool holds = measured - kSigmas * se <= bound;
  r.passed = vacuous || holds;
  r.seed = seed;
  r.details["holds"] = holds;
  return r;
}

BoundInputs bound_inputs(const ScenarioConfig& c, const ContributingSet& cs, double norm_b, double norm_rho, double kappa,
                         double horizon) {
  BoundInputs in;
  in.epsilon = c.epsilon;
  in.delta = c.delta;
  in.kappa = kappa;
  in.horizon = horizon;
  in.norm_b = norm_b;
  in.norm_rho = norm_rho;
  in.d_EB = cs.d_EB;
  in.D_EB = cs.D_EB;
  in.D_GB = cs.D_GB;
  in.G_B_kappa = cs.gap_count(kappa);
  return in;
}

struct StateRun {
  cplx dephased;
  double infinite_deviation = 0.0;
  std::vector<double> finite_deviation;  // per horizon
  std::vector<std::vector<double>> dev;  // per horizon: |f(t) − M_ρB| at sampled t ∈ [0, T]
  std::vector<std::vector<double>> dev4;  // same on [0, 4T]
};

ComplexVector state_sample(const ScenarioConfig& c, const DensityMatrix& rho, std::size_t i, Rng* out_rng = nullptr) {
  Rng r = Rng(c.seed).child(kStateStream).child(i);
  ComplexVector psi = sample_gap(rho, r);
  if (out_rng) *out_rng = r;
  return psi;
}

std::size_t exceedance_count(const std::vector<StateRun>& runs, std::size_t h, bool four, double bound, double delta,
                             double* mean_time_fraction) {
  std::size_t bad = 0;
  double acc = 0.0;
  for (const StateRun& s : runs) {
    const auto& d = four ? s.dev4[h] : s.dev[h];
    const auto over = static_cast<double>(std::count_if(d.begin(), d.end(), [&](double x) { return x > bound; }));
    const double frac = d.empty() ? 0.0 : over / static_cast<double>(d.size());
    acc += frac;
    if (frac > delta) ++bad;
  }
  if (mean_time_fraction) *mean_time_fraction = runs.empty() ? 0.0 : acc / static_cast<double>(runs.size());
  return bad;
}

}  // namespace

// --- ScenarioConfig --------------------------------------------------------

ScenarioConfig ScenarioConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"schema", "seed", "workers", "dimension", "hamiltonian", "macro", "rho", "observable", "mc", "horizons",
                 "kappas", "epsilon", "delta", "checks", "levy"},
             "config");
  if (!j.contains("schema") || !j.at("schema").is_string() || j.at("schema").get<std::string>() != kScenarioSchema) {
    throw ConfigError(std::string("config: 'schema' must be \"") + kScenarioSchema + "\"");
  }
  ScenarioConfig c;
  if (j.contains("seed")) {
    if (!is_non_negative_integer(j.at("seed"))) throw ConfigError("config.seed: expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.workers = static_cast<unsigned>(read_count(j, "workers", c.workers, "config"));
  c.dimension = static_cast<Eigen::Index>(read_count(j, "dimension", static_cast<std::size_t>(c.dimension), "config"));

  if (j.contains("hamiltonian")) {
    const json& h = j.at("hamiltonian");
    check_keys(h, {"source", "degeneracy_plan", "snap", "scale", "path"}, "config.hamiltonian");
    read(h, "source", c.hamiltonian.source, "config.hamiltonian");
    read(h, "degeneracy_plan", c.hamiltonian.degeneracy_plan, "config.hamiltonian");
    read(h, "scale", c.hamiltonian.scale, "config.hamiltonian");
    std::string snap = "none";
    read(h, "snap", snap, "config.hamiltonian");
    if (snap == "arithmetic") c.hamiltonian.snap = GapSnap::arithmetic;
    else if (snap != "none") throw ConfigError("config.hamiltonian.snap: expected \"none\" or \"arithmetic\"");
    if (c.hamiltonian.source == "file") c.hamiltonian.path = read_path(h, base_dir, "config.hamiltonian");
  }
  if (j.contains("macro")) {
    const json& m = j.at("macro");
    check_keys(m, {"blocks", "eq_fraction"}, "config.macro");
    c.macro.blocks = read_count(m, "blocks", c.macro.blocks, "config.macro");
    read(m, "eq_fraction", c.macro.eq_fraction, "config.macro");
  }
  if (j.contains("rho")) {
    const json& r = j.at("rho");
    check_keys(r, {"source", "beta", "label", "p_max_cap", "path"}, "config.rho");
    read(r, "source", c.rho.source, "config.rho");
    read(r, "beta", c.rho.beta, "config.rho");
    read(r, "label", c.rho.label, "config.rho");
    read(r, "p_max_cap", c.rho.p_max_cap, "config.rho");
    if (c.rho.source == "file") c.rho.path = read_path(r, base_dir, "config.rho");
  }
  if (j.contains("observable")) {
    const json& o = j.at("observable");
    check_keys(o, {"source", "label", "rank", "path"}, "config.observable");
    read(o, "source", c.observable.source, "config.observable");
    read(o, "label", c.observable.label, "config.observable");
    c.observable.rank = static_cast<Eigen::Index>(read_count(o, "rank", static_cast<std::size_t>(c.observable.rank), "config.observable"));
    if (c.observable.source == "file") c.observable.path = read_path(o, base_dir, "config.observable");
  }
  if (j.contains("mc")) {
    const json& m = j.at("mc");
    check_keys(m, {"n_states", "n_times", "lemma1_samples"}, "config.mc");
    c.n_states = read_count(m, "n_states", c.n_states, "config.mc");
    c.n_times = read_count(m, "n_times", c.n_times, "config.mc");
    c.lemma1_samples = read_count(m, "lemma1_samples", c.lemma1_samples, "config.mc");
  }
  read(j, "horizons", c.horizons, "config");
  read(j, "kappas", c.kappas, "config");
  read(j, "epsilon", c.epsilon, "config");
  read(j, "delta", c.delta, "config");
  if (j.contains("checks")) {
    const json& k = j.at("checks");
    check_keys(k, {"equilibration", "moments", "lemma1", "levy", "identities"}, "config.checks");
    read(k, "equilibration", c.checks.equilibration, "config.checks");
    read(k, "moments", c.checks.moments, "config.checks");
    read(k, "lemma1", c.checks.lemma1, "config.checks");
    read(k, "levy", c.checks.levy, "config.checks");
    read(k, "identities", c.checks.identities, "config.checks");
  }
  if (j.contains("levy")) {
    const json& l = j.at("levy");
    check_keys(l, {"dims", "n_samples", "eps_grid", "time"}, "config.levy");
    read(l, "dims", c.levy.dims, "config.levy");
    c.levy.n_samples = read_count(l, "n_samples", c.levy.n_samples, "config.levy");
    read(l, "eps_grid", c.levy.eps_grid, "config.levy");
    read(l, "time", c.levy.time, "config.levy");
  }
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return from_json(j, path.parent_path());
}

json ScenarioConfig::to_json() const {
  json h = {{"source", hamiltonian.source},
            {"degeneracy_plan", hamiltonian.degeneracy_plan},
            {"snap", hamiltonian.snap == GapSnap::arithmetic ? "arithmetic" : "none"},
            {"scale", hamiltonian.scale}};
  if (hamiltonian.source == "file") h["path"] = hamiltonian.path.generic_string();
  json r = {{"source", rho.source}};
  if (rho.source == "canonical") r["beta"] = rho.beta;
  if (rho.source == "microcanonical") r["label"] = rho.label;
  if (rho.source == "random") r["p_max_cap"] = rho.p_max_cap;
  if (rho.source == "file") r["path"] = rho.path.generic_string();
  json o = {{"source", observable.source}};
  if (observable.source == "macro") o["label"] = observable.label;
  if (observable.source == "random_projector") o["rank"] = observable.rank;
  if (observable.source == "file") o["path"] = observable.path.generic_string();
  return {{"schema", kScenarioSchema},
          {"seed", seed},
          {"dimension", dimension},
          {"hamiltonian", h},
          {"macro", {{"blocks", macro.blocks}, {"eq_fraction", macro.eq_fraction}}},
          {"rho", r},
          {"observable", o},
          {"mc", {{"n_states", n_states}, {"n_times", n_times}, {"lemma1_samples", lemma1_samples}}},
          {"horizons", horizons},
          {"kappas", kappas},
          {"epsilon", epsilon},
          {"delta", delta},
          {"checks",
           {{"equilibration", checks.equilibration},
            {"moments", checks.moments},
            {"lemma1", checks.lemma1},
            {"levy", checks.levy},
            {"identities", checks.identities}}},
          {"levy", {{"dims", levy.dims}, {"n_samples", levy.n_samples}, {"eps_grid", levy.eps_grid}, {"time", levy.time}}}};
}

void ScenarioConfig::validate() const {
  if (dimension < 2) throw ConfigError("config.dimension must be at least 2");
  if (workers == 0) throw ConfigError("config.workers must be positive");
  if (!is_one_of(hamiltonian.source, {"random", "file"})) throw ConfigError("config.hamiltonian.source: expected \"random\" or \"file\"");
  if (hamiltonian.source == "random") {
    if (!(hamiltonian.scale > 0.0) || !std::isfinite(hamiltonian.scale)) throw ConfigError("config.hamiltonian.scale must be positive");
    if (!hamiltonian.degeneracy_plan.empty()) {
      std::size_t total = 0;
      for (std::size_t m : hamiltonian.degeneracy_plan) {
        if (m == 0) throw ConfigError("config.hamiltonian.degeneracy_plan: multiplicities must be positive");
        total += m;
      }
      if (total != static_cast<std::size_t>(dimension)) {
        throw ConfigError("config.hamiltonian.degeneracy_plan: multiplicities sum to " + std::to_string(total) + ", not the dimension " +
                          std::to_string(dimension));
      }
    }
  }
  if (macro.blocks == 0 || static_cast<Eigen::Index>(macro.blocks) > dimension) throw ConfigError("config.macro.blocks out of range");
  if (!(macro.eq_fraction > 0.0 && macro.eq_fraction <= 1.0)) throw ConfigError("config.macro.eq_fraction must lie in (0, 1]");
  if (!is_one_of(rho.source, {"canonical", "microcanonical", "uniform", "random", "file"})) {
    throw ConfigError("config.rho.source: expected canonical, microcanonical, uniform, random or file");
  }
  if (rho.source == "canonical" && !(rho.beta >= 0.0 && std::isfinite(rho.beta))) throw ConfigError("config.rho.beta must be non-negative");
  if (rho.source == "random" && !(static_cast<double>(dimension) * rho.p_max_cap > 1.0 && rho.p_max_cap <= 1.0)) {
    throw ConfigError("config.rho.p_max_cap must lie in (1/dimension, 1]");
  }
  if (!is_one_of(observable.source, {"macro", "file", "identity", "random_projector"})) {
    throw ConfigError("config.observable.source: expected macro, file, identity or random_projector");
  }
  if (observable.source == "random_projector" && (observable.rank < 0 || observable.rank > dimension)) {
    throw ConfigError("config.observable.rank out of range");
  }
  if (n_states < 2) throw ConfigError("config.mc.n_states must be at least 2");
  if (n_times < 1) throw ConfigError("config.mc.n_times must be positive");
  if (checks.lemma1 && lemma1_samples < 2) throw ConfigError("config.mc.lemma1_samples must be at least 2");
  if (horizons.empty() || std::any_of(horizons.begin(), horizons.end(), [](double t) { return !(t > 0.0) || !std::isfinite(t); })) {
    throw ConfigError("config.horizons must be a non-empty list of positive times");
  }
  if (kappas.empty() || std::any_of(kappas.begin(), kappas.end(), [](double k) { return !(k > 0.0) || !std::isfinite(k); })) {
    throw ConfigError("config.kappas must be a non-empty list of positive widths");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("config.epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("config.delta must lie in (0, 1)");
  if ((checks.equilibration || checks.moments || checks.lemma1) && dimension < 4) {
    throw ConfigError("equilibration, moment and variance checks need dimension >= 4");
  }
  if (checks.levy) {
    if (levy.dims.size() < 2) throw ConfigError("config.levy.dims needs at least two dimensions");
    if (std::any_of(levy.dims.begin(), levy.dims.end(), [](Eigen::Index d) { return d < 2; })) throw ConfigError("config.levy.dims must be >= 2");
    if (levy.n_samples < 2) throw ConfigError("config.levy.n_samples must be at least 2");
    if (std::any_of(levy.eps_grid.begin(), levy.eps_grid.end(), [](double e) { return !(e >= 0.0); })) {
      throw ConfigError("config.levy.eps_grid entries must be non-negative");
    }
    if (!std::isfinite(levy.time)) throw ConfigError("config.levy.time must be finite");
  }
}

// --- scenario construction -------------------------------------------------

Scenario build_scenario(const ScenarioConfig& c) {
  c.validate();
  const Rng root(c.seed);
  try {
    SpectralDecomposition spec;
    if (c.hamiltonian.source == "file") {
      spec = spectrum_from_json(read_json_file(c.hamiltonian.path));
      if (spec.dim != c.dimension) throw ConfigError("hamiltonian file dimension does not match config.dimension");
    } else {
      std::vector<std::size_t> plan = c.hamiltonian.degeneracy_plan;
      if (plan.empty()) plan.assign(static_cast<std::size_t>(c.dimension), 1);
      Rng r = root.child(kHamiltonianStream);
      spec = random_hamiltonian(c.dimension, plan, r, c.hamiltonian.snap, c.hamiltonian.scale);
    }

    Rng mr = root.child(kMacroStream);
    std::optional<MacroDecomposition> macro = random_macro_decomposition(c.dimension, c.macro.blocks, c.macro.eq_fraction, mr);

    auto make_rho = [&]() -> DensityMatrix {
      if (c.rho.source == "canonical") return canonical_density(spec, c.rho.beta);
      if (c.rho.source == "microcanonical") return microcanonical_density(*macro, c.rho.label);
      if (c.rho.source == "uniform") return DensityMatrix::maximally_mixed(c.dimension);
      if (c.rho.source == "random") {
        Rng r = root.child(kRhoStream);
        return random_density(c.dimension, r, c.rho.p_max_cap);
      }
      DensityMatrix rho = density_from_json(read_json_file(c.rho.path));
      if (rho.dim() != c.dimension) throw ConfigError("rho file dimension does not match config.dimension");
      return rho;
    };
    DensityMatrix rho = make_rho();

    ComplexMatrix b;
    if (c.observable.source == "macro") {
      b = macro->projector(c.observable.label);
    } else if (c.observable.source == "identity") {
      b = ComplexMatrix::Identity(c.dimension, c.dimension);
    } else if (c.observable.source == "random_projector") {
      Rng r = root.child(kObservableStream);
      b = random_projector(c.dimension, c.observable.rank, r);
    } else {
      b = matrix_from_json(read_json_file(c.observable.path));
      if (b.rows() != c.dimension || b.cols() != c.dimension) throw ConfigError("observable file must be dimension x dimension");
    }
    return Scenario{std::move(spec), std::move(macro), std::move(rho), std::move(b)};
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

// --- Report ----------------------------------------------------------------

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.passed; });
}

json Report::to_json(bool include_timing) const {
  json arr = json::array();
  for (const CheckRecord& r : checks) {
    json j = {{"name", r.name},       {"bound", r.bound},     {"measured", r.measured}, {"margin", r.margin},
              {"vacuous", r.vacuous}, {"mc_error", r.mc_error}, {"passed", r.passed},   {"seed", r.seed},
              {"details", r.details}};
    if (include_timing) j["seconds"] = r.seconds;
    arr.push_back(std::move(j));
  }
  return {{"schema", kReportSchema}, {"seed", seed}, {"scenario", scenario}, {"checks", std::move(arr)}, {"passed", passed()}};
}

// --- checks ------------------------------------------------------------------

std::vector<CheckRecord> verify_equilibration(const ScenarioConfig& c, const Scenario& sc, unsigned workers) {
  std::vector<CheckRecord> out;
  if (!c.checks.equilibration && !c.checks.moments) return out;

  EquilibrationModel model(sc.spec, sc.b);
  const ContributingSet& cs = model.contributing();
  const double norm_b = operator_norm(sc.b);
  const double norm_rho = sc.rho.p_max();
  const ComplexMatrix w_rho = model.pair_amplitudes(sc.rho);
  const cplx m_rho = model.dephased(w_rho);
  const std::size_t nh = c.horizons.size();

  std::vector<const RMatrix*> rs;
  for (double t : c.horizons) rs.push_back(&model.r_matrix(t));
  const EquilibrationModel& frozen = model;

  const auto runs = parallel_map(c.n_states, workers, [&](std::size_t i) {
    Rng r(0);
    const ComplexVector psi = state_sample(c, sc.rho, i, &r);
    const ComplexMatrix w = frozen.pair_amplitudes(psi);
    StateRun s;
    s.dephased = frozen.dephased(w);
    s.infinite_deviation = frozen.infinite_deviation(w);
    s.finite_deviation.resize(nh);
    s.dev.resize(nh);
    s.dev4.resize(nh);
    for (std::size_t h = 0; h < nh; ++h) {
      s.finite_deviation[h] = frozen.finite_deviation(w, *rs[h]);
      if (!c.checks.equilibration) continue;
      for (auto* target : {&s.dev[h], &s.dev4[h]}) {
        const double horizon = target == &s.dev[h] ? c.horizons[h] : 4.0 * c.horizons[h];
        target->reserve(c.n_times);
        for (std::size_t k = 0; k < c.n_times; ++k) target->push_back(std::abs(frozen.expectation(w, horizon * r.uniform()) - m_rho));
      }
    }
    return s;
  });
  const auto n = static_cast<double>(runs.size());

  if (c.checks.equilibration) {
    const double sigma = std::sqrt(c.epsilon * (1.0 - c.epsilon) / n);
    for (std::size_t h = 0; h < nh; ++h) {
      for (double kappa : c.kappas) {
        const BoundInputs in = bound_inputs(c, cs, norm_b, norm_rho, kappa, c.horizons[h]);
        const FiniteTimeBound fb = theorem1_bound_finite(in);
        double mean_frac = 0.0;
        const double frac = static_cast<double>(exceedance_count(runs, h, false, fb.value, c.delta, &mean_frac)) / n;
        CheckRecord r = upper_check(fmt("theorem1_finite[T=%g,kappa=%g]", c.horizons[h], kappa), c.epsilon, frac,
                                    sigma, fb.value > 2.0 * norm_b, c.seed);
        r.details["deviation_bound"] = fb.value;
        r.details["branch"] = fb.branch;
        r.details["markov_prefactor"] = fb.markov_branch;
        r.details["levy_prefactor"] = fb.levy_branch;
        r.details["G_B_kappa"] = in.G_B_kappa;
        r.details["mean_time_exceedance"] = mean_frac;
        r.details["horizon"] = c.horizons[h];
        r.details["kappa"] = kappa;
        out.push_back(std::move(r));
      }
    }
    for (std::size_t h = 0; h < nh; ++h) {
      const BoundInputs in = bound_inputs(c, cs, norm_b, norm_rho, c.kappas.front(), c.horizons[h]);
      const double bound = theorem1_bound_infinite(in);
      const double f1 = static_cast<double>(exceedance_count(runs, h, false, bound, c.delta, nullptr)) / n;
      const double f4 = static_cast<double>(exceedance_count(runs, h, true, bound, c.delta, nullptr)) / n;
      CheckRecord r = upper_check(fmt("theorem1_infinite[T=%g]", c.horizons[h]), c.epsilon, std::max(f1, f4), sigma, bound > 2.0 * norm_b, c.seed);
      r.details["deviation_bound"] = bound;
      r.details["fraction_T"] = f1;
      r.details["fraction_4T"] = f4;
      r.details["horizons"] = {c.horizons[h], 4.0 * c.horizons[h]};
      out.push_back(std::move(r));
    }
  }

  if (c.checks.moments) {
    auto vac = [&](double squared_bound) { return std::sqrt(squared_bound) > 2.0 * norm_b; };
    for (std::size_t h = 0; h < nh; ++h) {
      RunningStats fin;
      for (const StateRun& s : runs) fin.push(s.finite_deviation[h]);
      const double trace_dev = frozen.finite_deviation(w_rho, *rs[h]);
      for (double kappa : c.kappas) {
        const BoundInputs in = bound_inputs(c, cs, norm_b, norm_rho, kappa, c.horizons[h]);
        const Prop1Bounds p = prop1_bounds(in);
        CheckRecord a = upper_check(fmt("prop1_time_variance[T=%g,kappa=%g]", c.horizons[h], kappa), p.time_variance, fin.mean(),
                                    fin.standard_error(), vac(p.time_variance), c.seed);
        a.details["G_B_kappa"] = in.G_B_kappa;
        a.details["r_norm_factor"] = in.r_norm_factor();
        out.push_back(std::move(a));
        CheckRecord b = upper_check(fmt("prop1_trace_deviation[T=%g,kappa=%g]", c.horizons[h], kappa), p.trace_deviation, trace_dev, 0.0,
                                    vac(p.trace_deviation), c.seed);
        b.details["G_B_kappa"] = in.G_B_kappa;
        out.push_back(std::move(b));
      }
    }
    const BoundInputs in = bound_inputs(c, cs, norm_b, norm_rho, c.kappas.front(), c.horizons.front());
    const Prop1Bounds p = prop1_bounds(in);
    std::vector<cplx> deph;
    RunningStats inf;
    for (const StateRun& s : runs) {
      deph.push_back(s.dephased);
      inf.push(s.infinite_deviation);
    }
    const VarianceEstimate ve = estimate_variance(std::span<const cplx>(deph));
    out.push_back(upper_check("prop1_dephased_variance", p.dephased_variance, ve.variance, ve.standard_error, vac(p.dephased_variance), c.seed));
    CheckRecord r = upper_check("prop1_infinite_time_variance", p.infinite_time_variance, inf.mean(), inf.standard_error(),
                                vac(p.infinite_time_variance), c.seed);
    r.details["D_EB"] = cs.D_EB;
    r.details["D_GB"] = cs.D_GB;
    out.push_back(std::move(r));
  }

  const bool zero_eigs = sc.rho.probabilities().back() <= 0.0;
  for (CheckRecord& r : out) {
    r.details["n_states"] = c.n_states;
    if (zero_eigs) r.details["rho_has_zero_eigenvalues"] = true;
  }
  return out;
}

std::vector<CheckRecord> verify_levy(const ScenarioConfig& c, const Scenario& sc, unsigned workers) {
  std::vector<CheckRecord> out;
  if (!c.checks.levy) return out;
  const Rng root(c.seed);
  const double t = c.levy.time;
  const auto n = static_cast<double>(c.levy.n_samples);

  auto tail_records = [&](const std::string& prefix, const std::vector<double>& f, double ref, double norm_b, double norm_rho) {
    for (double eps : c.levy.eps_grid) {
      const auto over = static_cast<double>(std::count_if(f.begin(), f.end(), [&](double x) { return std::abs(x - ref) > eps; }));
      const double emp = over / n;
      const double bound = norm_b > 0.0 ? levy_tail_bound(eps, 2.0 * norm_b, norm_rho) : (eps > 0.0 ? 0.0 : 12.0);
      CheckRecord r = upper_check(prefix + fmt("eps=%g]", eps), bound, emp, std::sqrt(emp * (1.0 - emp) / n), bound >= 1.0, c.seed);
      r.details["eta"] = 2.0 * norm_b;
      r.details["norm_rho"] = norm_rho;
      r.details["time"] = t;
      r.details["n_samples"] = c.levy.n_samples;
      out.push_back(std::move(r));
    }
  };

  // Tail of f(ψ) = ⟨ψ_t|B|ψ_t⟩ − tr(B_t ρ) for the scenario itself. Hermitian B
  // gives real f; otherwise the modulus of the complex deviation is used.
  {
    EquilibrationModel model(sc.spec, sc.b);
    const cplx ref = model.expectation(model.pair_amplitudes(sc.rho), t);
    const auto vals = parallel_map(c.levy.n_samples, workers, [&](std::size_t i) {
      Rng r = root.child(kLevyStream).child(i);
      return model.expectation(model.pair_amplitudes(sample_gap(sc.rho, r)), t);
    });
    std::vector<double> dev;
    dev.reserve(vals.size());
    for (const cplx& v : vals) dev.push_back(std::abs(v - ref));
    tail_records("levy_tail[", dev, 0.0, operator_norm(sc.b), sc.rho.p_max());
  }

  // Family ρ = I_D/D with a fixed rank-D/2 projector per D.
  std::vector<double> dims, vars, ses, exact;
  for (std::size_t k = 0; k < c.levy.dims.size(); ++k) {
    const Eigen::Index d = c.levy.dims[k];
    const Rng fam = root.child(kLevyFamilyStream).child(k);
    Rng build = fam.child(0);
    const SpectralDecomposition spec = random_hamiltonian(d, std::vector<std::size_t>(static_cast<std::size_t>(d), 1), build);
    const ComplexMatrix b = random_projector(d, d / 2, build);
    const DensityMatrix rho = DensityMatrix::maximally_mixed(d);
    const auto f = parallel_map(c.levy.n_samples, workers, [&](std::size_t i) {
      Rng r = fam.child(i + 1);
      const ComplexVector psi_t = evolve(spec, sample_gap(rho, r), t);
      return psi_t.dot(b * psi_t).real();
    });
    const double ref = b.trace().real() / static_cast<double>(d);
    tail_records(fmt("levy_tail[D=%g,", static_cast<double>(d)), f, ref, operator_norm(b), 1.0 / static_cast<double>(d));
    const VarianceEstimate ve = estimate_variance(std::span<const double>(f));
    const double tr2 = (b * b).trace().real() / static_cast<double>(d);
    dims.push_back(static_cast<double>(d));
    vars.push_back(ve.variance);
    ses.push_back(ve.standard_error);
    exact.push_back((tr2 - ref * ref) / static_cast<double>(d + 1));
  }
  const SlopeFit fit = log_log_slope(dims, vars);
  bool monotone = true;
  for (std::size_t k = 1; k < vars.size(); ++k) monotone = monotone && (dims[k] > dims[k - 1]) == (vars[k] < vars[k - 1]);
  CheckRecord r;
  r.name = "levy_scaling";
  r.bound = -1.0;
  r.measured = fit.slope;
  r.margin = 0.2 - std::abs(fit.slope + 1.0);
  r.passed = r.margin >= 0.0 && monotone;
  r.seed = c.seed;
  r.details = {{"dims", dims}, {"variances", vars}, {"standard_errors", ses}, {"uniform_exact_variances", exact},
               {"monotone", monotone}, {"tolerance", 0.2}, {"n_samples", c.levy.n_samples}};
  out.push_back(std::move(r));
  return out;
}

std::vector<CheckRecord> verify_lemma1(const ScenarioConfig& c, const Scenario& sc, unsigned workers) {
  std::vector<CheckRecord> out;
  if (!c.checks.lemma1) return out;
  // GAP(ρ) lives on supp ρ, so ⟨ψ|A|ψ⟩ only sees the compression of A to it.
  const auto& p = sc.rho.probabilities();
  const auto k = static_cast<Eigen::Index>(std::count_if(p.begin(), p.end(), [](double x) { return x > 0.0; }));
  if (k < 4) throw ConfigError("variance check needs rho of rank >= 4");
  const ComplexMatrix vs = sc.rho.basis().leftCols(k);
  const DensityMatrix rho = DensityMatrix::diagonal(std::vector<double>(p.begin(), p.begin() + k));
  const ComplexMatrix a = vs.adjoint() * sc.b * vs;
  const VarianceReport rep = gap_variance_bound(rho, a);

  CheckRecord bound_rec = upper_check("lemma1_bound", rep.lemma1_bound, rep.exact_variance, 0.0, false, c.seed);
  bound_rec.details["quadrature_bound"] = rep.quadrature_bound;
  bound_rec.details["p_max"] = rep.p_max;
  bound_rec.details["support_dim"] = k;
  bound_rec.details["clamped"] = rep.clamped;
  bound_rec.details["term_breakdown"] = rep.term_breakdown;
  out.push_back(std::move(bound_rec));

  const Rng root(c.seed);
  const auto zs = parallel_map(c.lemma1_samples, workers, [&](std::size_t i) {
    Rng r = root.child(kLemmaStream).child(i);
    const ComplexVector psi = sample_gap(rho, r);
    return psi.dot(a * psi);
  });
  const VarianceEstimate ve = estimate_variance(std::span<const cplx>(zs));
  CheckRecord mc;
  mc.name = "lemma1_exact_vs_mc";
  mc.bound = rep.exact_variance;
  mc.measured = ve.variance;
  mc.mc_error = ve.standard_error;
  // floor for the degenerate case where every sample agrees and SE = 0
  const double floor = 1e-12 * (1.0 + std::abs(rep.exact_variance)) * std::pow(operator_norm(a), 2);
  mc.margin = std::max(kSigmas * ve.standard_error, floor) - std::abs(ve.variance - rep.exact_variance);
  mc.passed = mc.margin >= 0.0;
  mc.seed = c.seed;
  mc.details = {{"n_samples", c.lemma1_samples}, {"support_dim", k}};
  out.push_back(std::move(mc));
  return out;
}

std::vector<CheckRecord> verify_identities(const ScenarioConfig& c, const Scenario& sc, unsigned workers) {
  std::vector<CheckRecord> out;
  if (!c.checks.identities) return out;
  const auto d = static_cast<double>(sc.spec.dim);
  const double norm_b = operator_norm(sc.b);
  const DensityMatrix uniform = DensityMatrix::maximally_mixed(sc.spec.dim);

  auto exact_rec = [&](std::string name, double diff, double tol) {
    CheckRecord r;
    r.name = std::move(name);
    r.bound = tol;
    r.measured = diff;
    r.margin = tol - diff;
    r.passed = diff <= tol;
    r.seed = c.seed;
    return r;
  };

  const cplx m_uniform = m_rho_b(sc.spec, uniform, sc.b);
  out.push_back(exact_rec("identity_uniform_mean", std::abs(m_uniform - sc.b.trace() / d), 1e-12 * std::max(1.0, norm_b)));
  if (sc.macro) {
    const ComplexMatrix peq = sc.macro->projector("eq");
    const double deq = static_cast<double>(sc.macro->block_dim("eq"));
    CheckRecord r = exact_rec("identity_uniform_peq", std::abs(m_rho_b(sc.spec, uniform, peq) - deq / d), 1e-12);
    r.details["d_eq"] = deq;
    out.push_back(std::move(r));
  }

  // E_ρ M_ψ₀B against M_ρB over the same initial states as the equilibration section.
  const cplx m_rho = m_rho_b(sc.spec, sc.rho, sc.b);
  const auto mps = parallel_map(c.n_states, workers, [&](std::size_t i) { return m_psi0_b(sc.spec, state_sample(c, sc.rho, i), sc.b); });
  const VarianceEstimate ve = estimate_variance(std::span<const cplx>(mps));
  cplx sum = 0.0;
  for (const cplx& z : mps) sum += z;
  const double se = std::sqrt(ve.variance / static_cast<double>(mps.size()));
  const double diff = std::abs(sum / static_cast<double>(mps.size()) - m_rho);
  CheckRecord mean_rec;
  mean_rec.name = "identity_mean_dephased";
  mean_rec.bound = kSigmas * se;
  mean_rec.measured = diff;
  mean_rec.margin = mean_rec.bound - diff;
  mean_rec.mc_error = se;
  // Degenerate case (B commuting with H and ρ): zero spread, exact agreement required.
  mean_rec.passed = diff <= std::max(kSigmas * se, 1e-12 * std::max(1.0, norm_b));
  mean_rec.seed = c.seed;
  mean_rec.details = {{"m_rho_b", {m_rho.real(), m_rho.imag()}}, {"n_states", c.n_states}};
  out.push_back(std::move(mean_rec));

  // Closed-form time average against Simpson quadrature of the directly evolved curve.
  const double horizon = *std::min_element(c.horizons.begin(), c.horizons.end());
  const double omega = std::max(sc.spec.diameter(), 1e-3);
  const auto intervals = static_cast<std::size_t>(std::clamp(std::ceil(horizon * omega * 100.0), 10000.0, 4.0e6));
  const std::size_t count = std::min<std::size_t>(2, c.n_states);
  const auto diffs = parallel_map(count, workers, [&](std::size_t i) {
    const ComplexVector psi0 = state_sample(c, sc.rho, i);
    const cplx mean = m_psi0_b(sc.spec, psi0, sc.b);
    const double closed = time_average_deviation(sc.spec, psi0, sc.b, horizon);
    const double grid = time_grid_average(
        [&](double t) {
          const ComplexVector psi_t = evolve(sc.spec, psi0, t);
          return std::norm(psi_t.dot(sc.b * psi_t) - mean);
        },
        horizon, intervals);
    return std::abs(closed - grid);
  });
  CheckRecord q = exact_rec("identity_time_average_quadrature", *std::max_element(diffs.begin(), diffs.end()), 1e-6);
  q.details = {{"horizon", horizon}, {"intervals", intervals}, {"states", count}};
  out.push_back(std::move(q));
  return out;
}

Report run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const unsigned workers = options.workers.value_or(config.workers);
  if (workers == 0) throw ConfigError("workers must be positive");
  const Scenario sc = build_scenario(config);
  if ((config.checks.equilibration || config.checks.moments || config.checks.lemma1) && !(sc.rho.p_max() < 0.25)) {
    throw ConfigError("the largest eigenvalue of rho must be < 1/4 for the enabled checks (got " + fmt("%.6g", sc.rho.p_max()) + ")");
  }

  Report report;
  report.seed = config.seed;
  const SpectralStats stats = spectral_stats(sc.spec);
  const ContributingSet cs = contributing_set(sc.spec, sc.b);
  const cplx m = m_rho_b(sc.spec, sc.rho, sc.b);
  report.scenario = {{"dimension", sc.spec.dim},
                     {"d_E", stats.d_E},
                     {"D_E", stats.D_E},
                     {"D_G", stats.D_G},
                     {"d_EB", cs.d_EB},
                     {"D_EB", cs.D_EB},
                     {"D_GB", cs.D_GB},
                     {"norm_rho", sc.rho.p_max()},
                     {"norm_b", operator_norm(sc.b)},
                     {"m_rho_b", {m.real(), m.imag()}},
                     {"config", config.to_json()}};

  using section_fn = std::vector<CheckRecord> (*)(const ScenarioConfig&, const Scenario&, unsigned);
  for (section_fn fn : {&verify_equilibration, &verify_lemma1, &verify_levy, &verify_identities}) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<CheckRecord> recs;
    try {
      recs = fn(config, sc, workers);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (CheckRecord& r : recs) {
      r.seconds = secs;
      report.checks.push_back(std::move(r));
    }
  }
  return report;
}

std::string format_curve_csv(const std::vector<double>& times, const std::vector<cplx>& values) {
  if (times.size() != values.size()) throw DomainError("format_curve_csv: length mismatch");
  std::string s = "t,re_expectation,im_expectation\n";
  char buf[128];
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", times[i], values[i].real(), values[i].imag());
    s += buf;
  }
  return s;
}

void write_scenario_curves(const ScenarioConfig& config, const std::filesystem::path& dir, std::size_t count, std::size_t points) {
  const Scenario sc = build_scenario(config);
  const double horizon = *std::min_element(config.horizons.begin(), config.horizons.end());
  std::vector<double> times(std::max<std::size_t>(points, 2));
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = horizon * static_cast<double>(k) / static_cast<double>(times.size() - 1);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < std::min(count, config.n_states); ++i) {
    const ComplexVector psi0 = state_sample(config, sc.rho, i);
    const auto path = dir / ("curve_" + std::to_string(i) + ".csv");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << format_curve_csv(times, expectation_curve(sc.spec, psi0, sc.b, times));
  }
}

}  // namespace gaplab
