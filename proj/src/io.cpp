#include "kroncov/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace kroncov {

namespace {

using nlohmann::json;

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            size_t pos = 0;
            double value;
            try {
                value = std::stod(cell, &pos);
            } catch (const std::exception&) {
                throw IoError(path + ": not a number: '" + cell + "'");
            }
            row.push_back(value);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(path + ": ragged rows (" + std::to_string(row.size()) +
                          " vs " + std::to_string(rows.front().size()) + " columns)");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": empty file");
    return rows;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

void write_rows(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[40];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            if (j > 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

Matrix factor_from_json(const json& node, const std::filesystem::path& base,
                        const char* name) {
    if (node.is_object()) {
        if (!node.contains("csv")) {
            throw IoError(std::string(name) + ": object form requires a 'csv' key");
        }
        return read_matrix_csv((base / node["csv"].get<std::string>()).string());
    }
    if (!node.is_array()) throw IoError(std::string(name) + ": expected array or {csv}");
    std::vector<std::vector<double>> rows;
    for (const auto& r : node) rows.push_back(r.get<std::vector<double>>());
    if (rows.empty()) throw IoError(std::string(name) + ": empty matrix");
    return rows_to_matrix(rows);
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (doc.value("schema_version", 0) != 1) {
        throw IoError(path + ": unsupported schema_version");
    }
    return doc;
}

} // namespace

Matrix read_matrix_csv(const std::string& path) {
    return rows_to_matrix(read_csv_rows(path));
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    write_rows(path, m);
}

SampleSet read_samples_csv(const std::string& path) {
    // stored one observation per row; internally observations are columns
    return SampleSet{rows_to_matrix(read_csv_rows(path)).transpose(), std::nullopt};
}

void write_samples_csv(const std::string& path, const SampleSet& data) {
    write_rows(path, data.observations.transpose());
}

KronSumCovariance read_model_json(const std::string& path) {
    const json doc = load_json(path);
    const auto base = std::filesystem::path(path).parent_path();
    KronSumCovariance model;
    model.shape = BlockShape{doc.at("p").get<Index>(), doc.at("q").get<Index>()};
    for (const auto& f : doc.at("factors")) {
        model.factors.push_back(FactorPair{factor_from_json(f.at("phi"), base, "phi"),
                                           factor_from_json(f.at("psi"), base, "psi")});
    }
    model.validate();
    return model;
}

void write_model_json(const std::string& path, const KronSumCovariance& model) {
    json doc;
    doc["schema_version"] = 1;
    doc["p"] = model.shape.p;
    doc["q"] = model.shape.q;
    doc["factors"] = json::array();
    for (const auto& f : model.factors) {
        json factor;
        for (const char* key : {"phi", "psi"}) {
            const Matrix& m = key == std::string("phi") ? f.phi : f.psi;
            json rows = json::array();
            for (Index i = 0; i < m.rows(); ++i) {
                json row = json::array();
                for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
                rows.push_back(std::move(row));
            }
            factor[key] = std::move(rows);
        }
        doc["factors"].push_back(std::move(factor));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

ExperimentSpec read_experiment_json(const std::string& path) {
    const json doc = load_json(path);
    ExperimentSpec spec;
    spec.shape = BlockShape{doc.at("p").get<Index>(), doc.at("q").get<Index>()};
    spec.k_rank = doc.at("k_rank").get<Index>();
    spec.phi_rank_target = doc.value("phi_rank", 1.0);
    spec.psi_rank_target = doc.value("psi_rank", 1.0);
    spec.n_grid = doc.at("n_grid").get<std::vector<Index>>();
    spec.delta = doc.value("delta", 0.05);
    for (const auto& name : doc.at("estimators")) {
        spec.estimators.push_back(method_from_name(name.get<std::string>()));
    }
    const json& policy = doc.at("lambda_policy");
    const std::string type = policy.at("type").get<std::string>();
    if (type == "theorem1") {
        spec.lambda_policy.kind = LambdaPolicy::Kind::Theorem1;
        spec.lambda_policy.omega = policy.at("omega").get<double>();
    } else if (type == "grid_select") {
        spec.lambda_policy.kind = LambdaPolicy::Kind::GridSelect;
        spec.lambda_policy.lambda0 = policy.value("lambda0", 0.0);
        spec.lambda_policy.m_max = policy.value("m_max", 10);
        spec.lambda_policy.split_fraction = policy.value("split_fraction", 0.5);
        spec.lambda_policy.repetitions = policy.value("repetitions", 5);
    } else if (type == "fixed") {
        spec.lambda_policy.kind = LambdaPolicy::Kind::Fixed;
        spec.lambda_policy.fixed_lambda = policy.at("lambda").get<double>();
    } else {
        throw IoError(path + ": unknown lambda_policy type '" + type + "'");
    }
    spec.trials = doc.value("trials", 1);
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.fixed_model = doc.value("fixed_model", false);
    spec.validate();
    return spec;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

} // namespace kroncov
