#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaplab/linalg.hpp"
#include "gaplab/sampler.hpp"
#include "gaplab/spectrum.hpp"

namespace gaplab {

using json = nlohmann::json;

/// Malformed file contents or missing files.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// { "rows": n, "cols": m, "entries": [[re, im], ...] } in row-major order.
json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const json& j);

/// [[re, im], ...]
json state_to_json(const ComplexVector& v);
ComplexVector state_from_json(const json& j);

/// { "eigenvalues": [...], "blocks": [matrix-json, ...] }
json spectrum_to_json(const SpectralDecomposition& spec);
SpectralDecomposition spectrum_from_json(const json& j);

/// Either a full matrix-json or { "probabilities": [...], "basis": matrix-json }.
json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
/// Writes with a trailing newline; `indent` < 0 gives compact output.
void write_json_file(const std::filesystem::path& path, const json& j, int indent = 2);

}  // namespace gaplab
