#include "gaplab/json_io.hpp"

#include <fstream>

namespace gaplab {

namespace {

cplx complex_from_json(const json& e) {
  if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
    throw FormatError("complex entry must be [re, im]");
  }
  return {e[0].get<double>(), e[1].get<double>()};
}

}  // namespace

json matrix_to_json(const ComplexMatrix& m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries")) {
    throw FormatError("matrix must have rows, cols and entries");
  }
  const auto rows = j.at("rows").get<long long>();
  const auto cols = j.at("cols").get<long long>();
  if (rows <= 0 || cols <= 0) throw FormatError("matrix dimensions must be positive");
  const json& entries = j.at("entries");
  if (!entries.is_array() || static_cast<long long>(entries.size()) != rows * cols) {
    throw FormatError("matrix entry count must equal rows x cols");
  }
  ComplexMatrix m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long c = 0; c < cols; ++c) m(i, c) = complex_from_json(entries[static_cast<std::size_t>(i * cols + c)]);
  }
  if (!all_finite(m)) throw FormatError("matrix has non-finite entries");
  return m;
}

json state_to_json(const ComplexVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

ComplexVector state_from_json(const json& j) {
  if (j.is_object()) {
    const ComplexMatrix m = matrix_from_json(j);
    if (m.cols() != 1) throw FormatError("state matrix must have a single column");
    return m.col(0);
  }
  if (!j.is_array() || j.empty()) throw FormatError("state must be a non-empty array of [re, im]");
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

json spectrum_to_json(const SpectralDecomposition& spec) {
  json blocks = json::array();
  for (const ComplexMatrix& b : spec.blocks) blocks.push_back(matrix_to_json(b));
  return {{"eigenvalues", spec.energies}, {"blocks", std::move(blocks)}};
}

SpectralDecomposition spectrum_from_json(const json& j) {
  if (!j.is_object() || !j.contains("eigenvalues") || !j.contains("blocks")) {
    throw FormatError("spectrum must have eigenvalues and blocks");
  }
  const auto eigs = j.at("eigenvalues").get<std::vector<double>>();
  const json& blocks = j.at("blocks");
  if (!blocks.is_array() || blocks.size() != eigs.size()) throw FormatError("one block per eigenvalue is required");
  if (eigs.empty()) throw FormatError("spectrum is empty");

  // Re-run grouping on the expanded list so the invariants are re-established.
  std::vector<ComplexMatrix> mats;
  Eigen::Index dim = -1, total = 0;
  for (const json& b : blocks) {
    mats.push_back(matrix_from_json(b));
    if (dim < 0) dim = mats.back().rows();
    if (mats.back().rows() != dim) throw FormatError("blocks must share the row dimension");
    total += mats.back().cols();
  }
  RealVector raw(total);
  ComplexMatrix vecs(dim, total);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    for (Eigen::Index c = 0; c < mats[i].cols(); ++c, ++col) {
      raw(col) = eigs[i];
      vecs.col(col) = mats[i].col(c);
    }
  }
  if (total != dim) throw FormatError("block multiplicities must sum to the dimension");
  if (max_abs(vecs.adjoint() * vecs - ComplexMatrix::Identity(dim, dim)) > 1e-8) {
    throw FormatError("spectrum blocks are not mutually orthonormal");
  }
  return group_eigenvalues(raw, vecs, 1e-12 * (1.0 + raw.cwiseAbs().maxCoeff()));
}

json density_to_json(const DensityMatrix& rho) {
  return {{"probabilities", rho.probabilities()}, {"basis", matrix_to_json(rho.basis())}};
}

DensityMatrix density_from_json(const json& j) {
  if (j.is_object() && j.contains("probabilities")) {
    auto p = j.at("probabilities").get<std::vector<double>>();
    if (j.contains("basis")) return DensityMatrix(std::move(p), matrix_from_json(j.at("basis")));
    return DensityMatrix::diagonal(std::move(p));
  }
  return DensityMatrix::from_matrix(matrix_from_json(j));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j, int indent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(indent) << '\n';
}

}  // namespace gaplab
