#include <doctest.h>

#include <map>

#include "gaplab/json_io.hpp"
#include "gaplab/scenario.hpp"
#include "gaplab/spectrum.hpp"

using namespace gaplab;

namespace {

// Brute-force D_G and G(kappa) over ordered pairs, for comparison.
std::size_t brute_dg(const std::vector<double>& e) {
  std::map<long long, std::size_t> count;
  for (double a : e)
    for (double b : e)
      if (a != b) ++count[std::llround((a - b) * 1e6)];
  std::size_t best = 0;
  for (const auto& [_, c] : count) best = std::max(best, c);
  return best;
}

std::size_t brute_g(const std::vector<double>& e, double kappa) {
  std::vector<double> gaps;
  for (double a : e)
    for (double b : e)
      if (a != b) gaps.push_back(a - b);
  std::size_t best = 0;
  for (double lo : gaps) {
    std::size_t c = 0;
    for (double g : gaps) c += (g >= lo - 1e-12 && g < lo + kappa - 1e-12) ? 1 : 0;
    best = std::max(best, c);
  }
  return best;
}

}  // namespace

TEST_CASE("grouping clusters eigenvalues within tolerance") {
  RealVector raw(3);
  raw << 1.0, 1.0 + 1e-12, 2.0;
  const auto spec = group_eigenvalues(raw, ComplexMatrix::Identity(3, 3), 1e-9);
  REQUIRE(spec.size() == 2);
  CHECK(spec.multiplicity(0) == 2);
  CHECK(spec.multiplicity(1) == 1);

  raw << 0.0, 1.0, 2.0;
  CHECK(group_eigenvalues(raw, ComplexMatrix::Identity(3, 3), 1e-9).size() == 3);
  CHECK_THROWS_AS(group_eigenvalues(RealVector(0), ComplexMatrix(0, 0), 1e-9), DomainError);
}

TEST_CASE("decomposition invariants hold for a random degenerate Hamiltonian") {
  Rng rng(21);
  const auto planted = random_hamiltonian(12, {3, 1, 2, 1, 4, 1}, rng);
  const auto spec = decompose_hamiltonian(planted.hamiltonian());
  REQUIRE(spec.size() == 6);
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    total += spec.multiplicity(i);
    if (i > 0) CHECK(spec.energies[i] > spec.energies[i - 1]);
    for (std::size_t j = 0; j < i; ++j) CHECK(operator_norm(spec.projector(i) * spec.projector(j)) <= 1e-10);
  }
  CHECK(total == 12);
  CHECK(max_abs(spec.hamiltonian() - planted.hamiltonian()) <= 1e-9);
  const auto s = spectral_stats(spec);
  CHECK(s.d_E == 6);
  CHECK(s.D_E == 4);
}

TEST_CASE("spectral stats on small spectra") {
  auto st = spectral_stats(SpectralDecomposition::diagonal({0, 1, 2}));
  CHECK(st.d_E == 3);
  CHECK(st.D_E == 1);
  CHECK(st.D_G == 2);
  st = spectral_stats(SpectralDecomposition::diagonal({0, 1}));
  CHECK(st.d_E == 2);
  CHECK(st.D_G == 1);
  CHECK(spectral_stats(SpectralDecomposition::diagonal({0, 1, 2, 4})).D_G == 2);
  // a single level has no gaps
  CHECK(spectral_stats(SpectralDecomposition::diagonal({3.0})).D_G == 0);
}

TEST_CASE("gap count over windows") {
  const auto spec = SpectralDecomposition::diagonal({0, 1, 2});
  CHECK(gap_count(spec, 1.5) == 3);
  CHECK(gap_count(spec, 5.0) == 6);
  CHECK(gap_count(spec, 1e-6) == spectral_stats(spec).D_G);
  CHECK_THROWS_AS(gap_count(spec, 0.0), DomainError);
  CHECK_THROWS_AS(gap_count(spec, -1.0), DomainError);
}

TEST_CASE("gap statistics agree with brute force on random spectra") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> e;
    const int n = 2 + static_cast<int>(rng.below(8));
    // integer levels so exact coincidences of gaps are common
    for (int k = 0; k < n; ++k) e.push_back(static_cast<double>(k) + static_cast<double>(rng.below(3)) * static_cast<double>(n));
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    if (e.size() < 2) continue;
    const auto spec = SpectralDecomposition::diagonal(e);
    CHECK(spectral_stats(spec).D_G == brute_dg(e));
    for (double kappa : {0.5, 1.0, 2.5, 7.0}) CHECK(gap_count(spec, kappa) == brute_g(e, kappa));
  }
}

TEST_CASE("arithmetic progression snapping fixes the gap degeneracy") {
  Rng rng(4);
  for (std::size_t k : {2, 3, 5, 8}) {
    const auto spec = random_hamiltonian(static_cast<Eigen::Index>(k + 1), std::vector<std::size_t>(k + 1, 1), rng, GapSnap::arithmetic);
    CHECK(spectral_stats(spec).D_G == k);
  }
  const auto single = random_hamiltonian(6, std::vector<std::size_t>(6, 1), rng);
  CHECK(spectral_stats(single).D_E == 1);
  const auto triple = random_hamiltonian(6, {1, 3, 2}, rng);
  CHECK(spectral_stats(triple).D_E == 3);
  CHECK_THROWS_AS(random_hamiltonian(6, {1, 3}, rng), DomainError);
}

TEST_CASE("contributing set") {
  Rng rng(9);
  const auto spec = random_hamiltonian(8, {2, 1, 3, 2}, rng);

  const auto one = contributing_set(spec, spec.projector(2));
  REQUIRE(one.members.size() == 1);
  CHECK(one.members[0] == 2);
  CHECK(one.d_EB == 1);
  CHECK(one.D_EB == 3);

  const auto all = contributing_set(spec, ComplexMatrix::Identity(8, 8));
  CHECK(all.d_EB == 4);
  CHECK(all.D_EB == 3);

  const auto none = contributing_set(spec, ComplexMatrix::Zero(8, 8));
  CHECK(none.members.empty());
  CHECK(none.d_EB == 0);
  CHECK(none.D_EB == 0);
  CHECK(none.D_GB == 0);

  // an operator connecting two levels contributes both of them
  const ComplexMatrix hop = spec.blocks[0].col(0) * spec.blocks[3].col(1).adjoint();
  const auto pair = contributing_set(spec, hop);
  CHECK(pair.members == std::vector<std::size_t>{0, 3});

  CHECK_THROWS_AS(contributing_set(spec, ComplexMatrix::Identity(3, 3)), DomainError);
}

TEST_CASE("spectrum JSON round trip") {
  Rng rng(12);
  const auto spec = random_hamiltonian(5, {2, 1, 2}, rng);
  const auto back = spectrum_from_json(json::parse(spectrum_to_json(spec).dump()));
  REQUIRE(back.size() == spec.size());
  CHECK(max_abs(back.hamiltonian() - spec.hamiltonian()) <= 1e-12);
  json bad = spectrum_to_json(spec);
  bad["blocks"].erase(0);
  CHECK_THROWS_AS(spectrum_from_json(bad), FormatError);
  CHECK_THROWS_AS(matrix_from_json(json::parse(R"({"rows":2,"cols":2,"entries":[[1,0],[0,0],[0,0]]})")), FormatError);
}
