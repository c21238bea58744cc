#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaplab/json_io.hpp"
#include "gaplab/scenario.hpp"

namespace gaplab {

inline constexpr const char* kScenarioSchema = "gaplab.scenario/1";
inline constexpr const char* kReportSchema = "gaplab.report/1";

/// Invalid or inconsistent scenario configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct HamiltonianSource {
  std::string source = "random";  // "random" | "file"
  std::vector<std::size_t> degeneracy_plan;  // empty: all singletons
  GapSnap snap = GapSnap::none;
  double scale = 1.0;
  std::filesystem::path path;
};

struct MacroPlan {
  std::size_t blocks = 2;
  double eq_fraction = 0.9;
};

struct RhoSource {
  std::string source = "random";  // "canonical" | "microcanonical" | "uniform" | "random" | "file"
  double beta = 0.0;
  std::string label = "eq";
  double p_max_cap = 0.25;
  std::filesystem::path path;
};

struct ObservableSource {
  std::string source = "macro";  // "macro" | "file" | "identity" | "random_projector"
  std::string label = "eq";
  Eigen::Index rank = 1;
  std::filesystem::path path;
};

struct CheckFlags {
  bool equilibration = true;
  bool moments = true;
  bool lemma1 = true;
  bool levy = true;
  bool identities = true;
};

struct LevyPlan {
  std::vector<Eigen::Index> dims{16, 64, 256};
  std::size_t n_samples = 2000;
  std::vector<double> eps_grid{0.0, 0.05, 0.1, 0.2, 0.3};
  double time = 1.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  Eigen::Index dimension = 16;
  HamiltonianSource hamiltonian;
  MacroPlan macro;
  RhoSource rho;
  ObservableSource observable;
  std::size_t n_states = 200;
  std::size_t n_times = 256;
  std::size_t lemma1_samples = 20000;
  std::vector<double> horizons{10.0, 100.0};
  std::vector<double> kappas{0.1, 1.0};
  double epsilon = 0.1;
  double delta = 0.1;
  CheckFlags checks;
  LevyPlan levy;

  /// Relative file paths are resolved against `base_dir`.
  static ScenarioConfig from_json(const json& j, const std::filesystem::path& base_dir = {});
  static ScenarioConfig from_file(const std::filesystem::path& path);
  /// Canonical form (no worker count, which never affects results).
  json to_json() const;
  void validate() const;
};

/// Concrete objects a config describes.
struct Scenario {
  SpectralDecomposition spec;
  std::optional<MacroDecomposition> macro;
  DensityMatrix rho;
  ComplexMatrix b;
};

Scenario build_scenario(const ScenarioConfig& config);

struct CheckRecord {
  std::string name;
  double bound = 0.0;
  double measured = 0.0;
  double margin = 0.0;  // bound − measured, or the tolerance slack for two-sided checks
  bool vacuous = false;
  double mc_error = 0.0;  // one standard error; 0 for exact quantities
  bool passed = false;
  std::uint64_t seed = 0;
  json details = json::object();
  double seconds = 0.0;  // emitted only on request
};

struct Report {
  std::uint64_t seed = 0;
  json scenario = json::object();
  std::vector<CheckRecord> checks;

  bool passed() const;
  /// Timing is left out by default so reports are byte-reproducible.
  json to_json(bool include_timing = false) const;
};

struct RunOptions {
  std::optional<unsigned> workers;  // overrides the config value
};

Report run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Individual sections of run_scenario, exposed for tests.
std::vector<CheckRecord> verify_equilibration(const ScenarioConfig& config, const Scenario& sc, unsigned workers);
std::vector<CheckRecord> verify_levy(const ScenarioConfig& config, const Scenario& sc, unsigned workers);
std::vector<CheckRecord> verify_lemma1(const ScenarioConfig& config, const Scenario& sc, unsigned workers);
std::vector<CheckRecord> verify_identities(const ScenarioConfig& config, const Scenario& sc, unsigned workers);

/// Writes ⟨ψ_t|B|ψ_t⟩ over [0, T₀] for the first `count` sampled initial
/// states as curve_<k>.csv in `dir` (T₀ = smallest horizon).
void write_scenario_curves(const ScenarioConfig& config, const std::filesystem::path& dir, std::size_t count = 4,
                           std::size_t points = 1001);

/// "t,re_expectation,im_expectation" rows with 17 significant digits.
std::string format_curve_csv(const std::vector<double>& times, const std::vector<cplx>& values);

}  // namespace gaplab
