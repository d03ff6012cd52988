#pragma once

#include <string>

#include "kroncov/experiment.hpp"
#include "kroncov/model.hpp"

namespace kroncov {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Matrix CSV: one row per line, comma-separated decimal literals, no header.
Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& m);

// Data CSV: one observation per row, d columns.
SampleSet read_samples_csv(const std::string& path);
void write_samples_csv(const std::string& path, const SampleSet& data);

// Model document (JSON, schema_version 1):
// { "schema_version": 1, "p": 2, "q": 3,
//   "factors": [ { "phi": [[..]] | {"csv": "phi.csv"},
//                  "psi": [[..]] | {"csv": "psi.csv"} }, ... ] }
// CSV references resolve relative to the document's directory.
KronSumCovariance read_model_json(const std::string& path);
void write_model_json(const std::string& path, const KronSumCovariance& model);

// Experiment spec (JSON, schema_version 1):
// { "schema_version": 1, "p": 8, "q": 8, "k_rank": 1,
//   "phi_rank": 2.0, "psi_rank": 2.0, "n_grid": [64, 128],
//   "delta": 0.05, "estimators": ["sample", "pls_soft"],
//   "lambda_policy": {"type": "grid_select", "lambda0": 0,
//                      "m_max": 10, "split_fraction": 0.5, "repetitions": 5}
//                  | {"type": "theorem1", "omega": 1.0}
//                  | {"type": "fixed", "lambda": 0.5},
//   "trials": 10, "seed": 1, "fixed_model": false }
ExperimentSpec read_experiment_json(const std::string& path);

// 64-bit FNV-1a of a file's bytes, for provenance sidecars.
std::uint64_t file_hash(const std::string& path);

} // namespace kroncov
