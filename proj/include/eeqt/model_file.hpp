#pragma once

// JSON model files, schema_version "1".
//
//   {
//     "schema_version": "1",
//     "name": "yes_no_counter",             optional
//     "time_unit": "1/kappa",               optional
//     "quantum_dim": 2,
//     "classical_labels": ["no", "yes"],
//     "hamiltonians": [ M_1, ..., M_m ],
//     "couplings": [ {"alpha": 2, "beta": 1, "matrix": M}, ... ],
//     "initial_state": {"amplitudes": [[re, im], ...], "alpha": 1}
//   }
//
// A matrix M is an array of rows, each row an array of [re, im] pairs. A
// coupling entry sets g_{alpha,beta}, the operator that drives the event
// beta -> alpha. Classical indices are 1-based.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eeqt/errors.hpp"
#include "eeqt/hilbert.hpp"
#include "eeqt/model.hpp"

namespace eeqt {

inline constexpr const char* kSchemaVersion = "1";

struct CouplingEntry {
  std::size_t alpha = 0;  // 1-based row
  std::size_t beta = 0;   // 1-based column
  ComplexMatrix matrix;

  friend bool operator==(const CouplingEntry&, const CouplingEntry&) = default;
};

struct ModelFile {
  std::string schema_version = kSchemaVersion;
  std::optional<std::string> name;
  std::optional<std::string> time_unit;
  std::size_t quantum_dim = 0;
  std::vector<std::string> classical_labels;
  Blocks hamiltonians;
  std::vector<CouplingEntry> couplings;
  std::vector<Complex> initial_amplitudes;
  std::size_t initial_alpha = 1;  // 1-based

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

struct LoadedModel {
  ModelFile file;
  HybridModel model;
  PureHybridState initial;
};

namespace detail {

using Json = nlohmann::ordered_json;

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
  throw InvalidInput(path + ": " + what);
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) field_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline double read_number(const Json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) field_error(path, "value is not finite");
  return v;
}

inline std::size_t read_index(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 1) field_error(path, "expected a positive integer");
  return j.get<std::size_t>();
}

inline Complex read_complex(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) field_error(path, "expected [re, im] pair");
  return {read_number(j[0], path + "[0]"), read_number(j[1], path + "[1]")};
}

inline ComplexMatrix read_matrix(const Json& j, std::size_t n, const std::string& path) {
  if (!j.is_array() || j.size() != n) {
    field_error(path, "expected " + std::to_string(n) + " rows");
  }
  ComplexMatrix out(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    const Json& row = j[r];
    if (!row.is_array() || row.size() != n) {
      field_error(row_path, "expected " + std::to_string(n) + " entries");
    }
    for (std::size_t c = 0; c < n; ++c) {
      out(r, c) = read_complex(row[c], row_path + "[" + std::to_string(c) + "]");
    }
  }
  return out;
}

inline Json write_complex(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json write_matrix(const ComplexMatrix& a) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < a.cols(); ++c) row.push_back(write_complex(a(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline ModelFile parse_model_file(const std::string& text) {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(std::string("model file does not parse: ") + e.what());
  }
  if (!root.is_object()) throw InvalidInput("model file: top level must be an object");

  ModelFile f;
  const Json& version = detail::require(root, "schema_version", "");
  if (!version.is_string()) detail::field_error("schema_version", "expected a string");
  f.schema_version = version.get<std::string>();
  if (f.schema_version != kSchemaVersion) {
    throw InvalidInput("schema_version \"" + f.schema_version + "\" is not supported (expected \"" +
                       kSchemaVersion + "\")");
  }
  if (auto it = root.find("name"); it != root.end()) {
    if (!it->is_string()) detail::field_error("name", "expected a string");
    f.name = it->get<std::string>();
  }
  if (auto it = root.find("time_unit"); it != root.end()) {
    if (!it->is_string()) detail::field_error("time_unit", "expected a string");
    f.time_unit = it->get<std::string>();
  }

  const Json& dim = detail::require(root, "quantum_dim", "");
  f.quantum_dim = detail::read_index(dim, "quantum_dim");
  const std::size_t n = f.quantum_dim;

  const Json& labels = detail::require(root, "classical_labels", "");
  if (!labels.is_array() || labels.empty()) {
    detail::field_error("classical_labels", "expected a nonempty array of strings");
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!labels[k].is_string()) {
      detail::field_error("classical_labels[" + std::to_string(k) + "]", "expected a string");
    }
    f.classical_labels.push_back(labels[k].get<std::string>());
  }
  const std::size_t m = f.classical_labels.size();

  const Json& hams = detail::require(root, "hamiltonians", "");
  if (!hams.is_array() || hams.size() != m) {
    detail::field_error("hamiltonians", "expected " + std::to_string(m) + " matrices");
  }
  for (std::size_t a = 0; a < m; ++a) {
    f.hamiltonians.push_back(
        detail::read_matrix(hams[a], n, "hamiltonians[" + std::to_string(a) + "]"));
  }

  const Json& couplings = detail::require(root, "couplings", "");
  if (!couplings.is_array()) detail::field_error("couplings", "expected an array");
  for (std::size_t k = 0; k < couplings.size(); ++k) {
    const std::string path = "couplings[" + std::to_string(k) + "]";
    const Json& entry = couplings[k];
    CouplingEntry c;
    c.alpha = detail::read_index(detail::require(entry, "alpha", path), path + ".alpha");
    c.beta = detail::read_index(detail::require(entry, "beta", path), path + ".beta");
    if (c.alpha > m || c.beta > m) detail::field_error(path, "classical index out of range");
    c.matrix = detail::read_matrix(detail::require(entry, "matrix", path), n, path + ".matrix");
    for (std::size_t j = 0; j < k; ++j) {
      if (f.couplings[j].alpha == c.alpha && f.couplings[j].beta == c.beta) {
        detail::field_error(path, "duplicate coupling (" + std::to_string(c.alpha) + "," +
                                      std::to_string(c.beta) + ")");
      }
    }
    if (c.alpha == c.beta && !c.matrix.is_zero()) {
      detail::field_error(path, "diagonal coupling must vanish");
    }
    f.couplings.push_back(std::move(c));
  }

  const Json& init = detail::require(root, "initial_state", "");
  const Json& amps = detail::require(init, "amplitudes", "initial_state");
  if (!amps.is_array() || amps.size() != n) {
    detail::field_error("initial_state.amplitudes", "expected " + std::to_string(n) + " amplitudes");
  }
  for (std::size_t k = 0; k < n; ++k) {
    f.initial_amplitudes.push_back(
        detail::read_complex(amps[k], "initial_state.amplitudes[" + std::to_string(k) + "]"));
  }
  f.initial_alpha =
      detail::read_index(detail::require(init, "alpha", "initial_state"), "initial_state.alpha");
  if (f.initial_alpha > m) detail::field_error("initial_state.alpha", "classical index out of range");
  return f;
}

/// Canonical text form: fixed key order, two-space indent, trailing newline.
inline std::string write_model_file(const ModelFile& f) {
  using detail::Json;
  Json root = Json::object();
  root["schema_version"] = f.schema_version;
  if (f.name) root["name"] = *f.name;
  if (f.time_unit) root["time_unit"] = *f.time_unit;
  root["quantum_dim"] = f.quantum_dim;
  root["classical_labels"] = f.classical_labels;
  Json hams = Json::array();
  for (const auto& h : f.hamiltonians) hams.push_back(detail::write_matrix(h));
  root["hamiltonians"] = std::move(hams);
  Json couplings = Json::array();
  for (const auto& c : f.couplings) {
    Json entry = Json::object();
    entry["alpha"] = c.alpha;
    entry["beta"] = c.beta;
    entry["matrix"] = detail::write_matrix(c.matrix);
    couplings.push_back(std::move(entry));
  }
  root["couplings"] = std::move(couplings);
  Json amps = Json::array();
  for (const auto& z : f.initial_amplitudes) amps.push_back(detail::write_complex(z));
  root["initial_state"] = Json{{"amplitudes", std::move(amps)}, {"alpha", f.initial_alpha}};
  return root.dump(2) + "\n";
}

inline RawModel to_raw_model(const ModelFile& f) {
  RawModel raw;
  raw.quantum_dim = f.quantum_dim;
  raw.classical.labels = f.classical_labels;
  raw.hamiltonians = f.hamiltonians;
  raw.couplings = OperatorGrid(f.classical_labels.size(), f.quantum_dim);
  for (const auto& c : f.couplings) raw.couplings(c.alpha - 1, c.beta - 1) = c.matrix;
  return raw;
}

/// Inverse of to_raw_model for validated models: nonzero off-diagonal
/// couplings listed in row-major (alpha, beta) order.
inline ModelFile to_model_file(const HybridModel& model, const PureHybridState& initial) {
  ModelFile f;
  f.quantum_dim = model.quantum_dim();
  f.classical_labels = model.classical().labels;
  f.hamiltonians = model.hamiltonians();
  for (std::size_t a = 0; a < model.classical_size(); ++a)
    for (std::size_t b = 0; b < model.classical_size(); ++b)
      if (a != b && !model.coupling(a, b).is_zero()) f.couplings.push_back({a + 1, b + 1, model.coupling(a, b)});
  f.initial_amplitudes.assign(initial.psi.amplitudes().begin(), initial.psi.amplitudes().end());
  f.initial_alpha = initial.alpha + 1;
  return f;
}

inline LoadedModel build_model(ModelFile f) {
  HybridModel model = validate_model(to_raw_model(f));
  PureHybridState initial{StateVector(f.initial_amplitudes), f.initial_alpha - 1, 0.0};
  validate_initial_state(model, initial);
  return {std::move(f), std::move(model), std::move(initial)};
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LoadedModel load_model(const std::string& path) {
  try {
    return build_model(parse_model_file(read_text_file(path)));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  } catch (const NumericalFailure& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

}  // namespace eeqt
