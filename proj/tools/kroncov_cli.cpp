// Command-line front end: data generation, estimation, Monte Carlo sweeps,
// and a self-check battery of the library's structural identities.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "kroncov/experiment.hpp"
#include "kroncov/io.hpp"
#include "kroncov/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kroncov;

namespace {

Matrix random_matrix(Index rows, Index cols, SeededRng& rng) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

struct CheckList {
    int failures = 0;
    int count = 0;

    void check(const std::string& name, double residual, double tolerance) {
        ++count;
        const bool ok = residual <= tolerance;
        if (!ok) ++failures;
        std::printf("%-42s residual %.3e  (tol %.1e)  %s\n", name.c_str(), residual,
                    tolerance, ok ? "ok" : "FAIL");
    }
};

int run_verify() {
    CheckList checks;
    SeededRng rng(20240817);

    // Kronecker identities, worst case over 100 random instances
    double mixed = 0, tr_prod = 0, op_prod = 0, fr_prod = 0, vec_id = 0, tr_id = 0;
    for (int it = 0; it < 100; ++it) {
        const Matrix a = random_matrix(3, 3, rng), b = random_matrix(4, 4, rng);
        const Matrix c = random_matrix(3, 3, rng), d = random_matrix(4, 4, rng);
        mixed = std::max(mixed, (kron(a, b) * kron(c, d) - kron(a * c, b * d)).norm() /
                                    kron(a * c, b * d).norm());
        tr_prod = std::max(tr_prod, std::abs(trace(kron(a, b)) - trace(a) * trace(b)) /
                                        std::max(1.0, std::abs(trace(a) * trace(b))));
        op_prod = std::max(op_prod,
                           std::abs(operator_norm(kron(a, b)) -
                                    operator_norm(a) * operator_norm(b)) /
                               (operator_norm(a) * operator_norm(b)));
        fr_prod = std::max(fr_prod, std::abs(kron(a, b).norm() - a.norm() * b.norm()) /
                                        (a.norm() * b.norm()));
        const Matrix u = random_matrix(4, 3, rng);
        vec_id = std::max(vec_id, (kron(a, b) * vec(u) - vec(b * u * a.transpose())).norm() /
                                      vec(b * u * a.transpose()).norm());
        const Matrix v = random_matrix(4, 3, rng);
        const double lhs = (v.transpose() * b * u * a.transpose()).trace();
        const double rhs = vec(v).dot(kron(a, b) * vec(u));
        tr_id = std::max(tr_id, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    checks.check("kron mixed product", mixed, 1e-11);
    checks.check("kron trace product", tr_prod, 1e-11);
    checks.check("kron operator-norm product", op_prod, 1e-11);
    checks.check("kron Frobenius product", fr_prod, 1e-11);
    checks.check("kron vec identity", vec_id, 1e-11);
    checks.check("kron trace identity", tr_id, 1e-11);

    // vec / unvec and rearrangement round trips (exact permutations)
    double roundtrip = 0, iso = 0, lin = 0, rank1 = 0;
    for (int it = 0; it < 100; ++it) {
        const BlockShape shape{2 + static_cast<Index>(it % 4),
                               2 + static_cast<Index>(it % 3)};
        const Matrix m = random_matrix(shape.d(), shape.d(), rng);
        roundtrip = std::max(roundtrip, (unvec(vec(m), m.rows(), m.cols()) - m).norm());
        roundtrip = std::max(
            roundtrip, (rearrange_inverse(rearrange(m, shape), shape) - m).norm());
        iso = std::max(iso, std::abs(rearrange(m, shape).norm() - m.norm()) / m.norm());
        const Matrix m2 = random_matrix(shape.d(), shape.d(), rng);
        lin = std::max(lin, (rearrange(2.0 * m - 3.0 * m2, shape) -
                             (2.0 * rearrange(m, shape) - 3.0 * rearrange(m2, shape)))
                                .norm());
        const Matrix a = random_matrix(shape.p, shape.p, rng);
        const Matrix b = random_matrix(shape.q, shape.q, rng);
        rank1 = std::max(rank1, (rearrange(kron(a, b), shape) -
                                 vec(a) * vec(b).transpose())
                                        .norm() /
                                    (a.norm() * b.norm()));
    }
    checks.check("vec/unvec + rearrange round trips", roundtrip, 0.0);
    checks.check("rearrange isometry", iso, 1e-12);
    checks.check("rearrange linearity", lin, 0.0);
    checks.check("rearrange(kron) rank-one identity", rank1, 1e-12);

    // SVD reconstruction / orthonormality
    double svd_res = 0;
    for (int it = 0; it < 20; ++it) {
        const Matrix m = random_matrix(20, 30, rng);
        const Svd dec = svd(m);
        svd_res = std::max(svd_res, (dec.reconstruct() - m).norm() / m.norm());
        svd_res = std::max(svd_res, (dec.u.transpose() * dec.u -
                                     Matrix::Identity(dec.u.cols(), dec.u.cols()))
                                        .norm());
        svd_res = std::max(svd_res, (dec.v.transpose() * dec.v -
                                     Matrix::Identity(dec.v.cols(), dec.v.cols()))
                                        .norm());
    }
    checks.check("svd reconstruction + orthonormality", svd_res, 1e-10);

    // prox optimality of nuclear-norm soft thresholding
    double prox_gap = 0;
    for (int it = 0; it < 5; ++it) {
        const Matrix m = random_matrix(6, 8, rng);
        for (const double lambda : {0.1, 1.0, 10.0}) {
            const Matrix best = soft_threshold_svd(m, lambda);
            const double best_obj =
                (best - m).squaredNorm() + lambda * nuclear_norm(best);
            for (int k = 0; k < 200; ++k) {
                const Matrix delta = random_matrix(6, 8, rng);
                const double eps = k % 2 == 0 ? 1e-3 : 1e-2;
                const Matrix rival = best + eps * delta;
                const double obj =
                    (rival - m).squaredNorm() + lambda * nuclear_norm(rival);
                prox_gap = std::max(prox_gap, best_obj - obj);
            }
        }
    }
    checks.check("soft-threshold prox optimality", prox_gap, 1e-12);

    double spectrum = 0;
    for (int it = 0; it < 10; ++it) {
        const Matrix m = random_matrix(5, 7, rng);
        const double lambda = 0.5 + it * 0.3;
        const Vector before = singular_values(m);
        const Vector after = singular_values(soft_threshold_svd(m, lambda));
        for (Index j = 0; j < after.size(); ++j) {
            spectrum = std::max(
                spectrum, std::abs(after(j) - std::max(before(j) - lambda / 2.0, 0.0)));
        }
    }
    checks.check("soft-threshold spectrum shift", spectrum, 1e-10);

    // rank of the rearranged K-term covariance
    double rank_ratio = 0;
    for (int it = 0; it < 30; ++it) {
        const Index k = 1 + it % 3;
        KronSumCovariance cov;
        cov.shape = BlockShape{4, 4};
        for (Index j = 0; j < k; ++j) {
            cov.factors.push_back(
                FactorPair{random_psd_factor(4, 2.0, mix64(7'000 + it, j, 0)),
                           random_psd_factor(4, 2.5, mix64(7'000 + it, j, 1))});
        }
        const Vector s = singular_values(rearrange(assemble_sigma(cov), cov.shape));
        rank_ratio = std::max(rank_ratio, s(k) / s(0));
    }
    checks.check("rearranged covariance rank", rank_ratio, 1e-9);

    std::printf("%d checks, %d failures\n", checks.count, checks.failures);
    return checks.failures == 0 ? 0 : 1;
}

json report_to_json(const EstimateReport& report) {
    json out;
    out["method"] = method_name(report.method);
    if (report.lambda_used) out["lambda_used"] = *report.lambda_used;
    out["singular_values"] =
        std::vector<double>(report.singular_values.data(),
                            report.singular_values.data() + report.singular_values.size());
    out["retained_rank"] = report.retained_rank;
    out["symmetry_residual"] = report.symmetry_residual;
    out["n"] = report.n;
    if (report.frobenius_error) out["frobenius_error"] = *report.frobenius_error;
    if (report.operator_error) out["operator_error"] = *report.operator_error;
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kronecker-sum covariance estimation"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "sample data from a model file");
    std::string gen_model, gen_out = ".";
    Index gen_n = 100;
    std::uint64_t gen_seed = 0;
    generate->add_option("--model", gen_model, "model JSON document")->required();
    generate->add_option("--n", gen_n, "number of observations")->required();
    generate->add_option("--seed", gen_seed, "sampling seed");
    generate->add_option("--out-dir", gen_out, "output directory");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "estimate a covariance from data");
    std::string est_data, est_method = "pls", est_out = "estimate.csv", est_truth;
    Index est_p = 0, est_q = 0, est_k = 1;
    double est_lambda = -1.0, est_lambda0 = 0.0, est_split = 0.5;
    int est_mmax = 10, est_reps = 5;
    std::uint64_t est_seed = 0;
    bool est_center = false;
    estimate->add_option("--data", est_data, "observations CSV, one per row")->required();
    estimate->add_option("--p", est_p, "outer block dimension")->required();
    estimate->add_option("--q", est_q, "inner block dimension")->required();
    estimate->add_option("--method", est_method, "sample | pls | hard | rank_one");
    estimate->add_option("--lambda", est_lambda, "penalty (pls); omit to grid-select");
    estimate->add_option("--lambda0", est_lambda0, "grid head, <=0 for auto");
    estimate->add_option("--m-max", est_mmax, "grid depth (lambda0 * 2^-m)");
    estimate->add_option("--split", est_split, "random-split fit fraction");
    estimate->add_option("--reps", est_reps, "random-split repetitions");
    estimate->add_option("--seed", est_seed, "selection seed");
    estimate->add_option("--k", est_k, "retained components (hard)");
    estimate->add_option("--truth", est_truth, "known Sigma CSV for error reporting");
    estimate->add_option("--out", est_out, "estimate CSV path");
    estimate->add_flag("--pre-center", est_center, "subtract the empirical mean first");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Monte Carlo estimator sweep");
    std::string exp_spec, exp_out = ".";
    int exp_threads = 1;
    std::optional<std::uint64_t> exp_seed;
    std::optional<double> exp_delta, exp_omega;
    experiment->add_option("--spec", exp_spec, "experiment JSON document")->required();
    experiment->add_option("--out-dir", exp_out, "output directory");
    experiment->add_option("--threads", exp_threads, "worker threads across trials");
    experiment->add_option("--seed", exp_seed, "override spec seed");
    experiment->add_option("--delta", exp_delta, "override spec delta");
    experiment->add_option("--omega", exp_omega, "override theorem1 policy omega");

    // verify
    app.add_subcommand("verify", "run the structural identity battery");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            const KronSumCovariance model = read_model_json(gen_model);
            const Matrix sigma = assemble_sigma(model);
            const SampleSet data =
                sample_matrix_model(factorize_for_sampling(model), gen_n, gen_seed);
            fs::create_directories(gen_out);
            write_matrix_csv((fs::path(gen_out) / "sigma.csv").string(), sigma);
            write_samples_csv((fs::path(gen_out) / "samples.csv").string(), data);
            json prov;
            prov["schema_version"] = 1;
            prov["seed"] = gen_seed;
            prov["n"] = gen_n;
            prov["model_file"] = gen_model;
            prov["model_hash"] = file_hash(gen_model);
            std::ofstream side((fs::path(gen_out) / "provenance.json").string());
            side << prov.dump(2) << '\n';
            std::cout << "wrote sigma.csv, samples.csv, provenance.json to " << gen_out
                      << "\n";
            return 0;
        }

        if (estimate->parsed()) {
            SampleSet data = read_samples_csv(est_data);
            if (est_center) {
                const Vector mean = data.observations.rowwise().mean();
                data.observations.colwise() -= mean;
            }
            const BlockShape shape{est_p, est_q};
            EstimateReport report;
            const Method method = method_from_name(est_method);
            switch (method) {
                case Method::Sample:
                    report = sample_estimate(data, shape);
                    break;
                case Method::PlsSoft: {
                    double lambda = est_lambda;
                    if (lambda < 0.0) {
                        double head = est_lambda0;
                        if (head <= 0.0) {
                            head = 2.0 * singular_values(
                                             rearrange(sample_covariance(data), shape))(0);
                        }
                        std::vector<double> grid;
                        for (int m = 0; m <= est_mmax; ++m)
                            grid.push_back(head * std::pow(0.5, m));
                        lambda = select_lambda(data, shape, grid, est_split, est_reps,
                                               est_seed)
                                     .lambda;
                    }
                    report = pls_estimate(data, shape, lambda);
                    break;
                }
                case Method::PcaHard:
                    report = hard_threshold_estimate(data, shape, est_k);
                    break;
                case Method::RankOne:
                    report = rank_one_estimate(data, shape);
                    break;
            }
            if (!est_truth.empty()) {
                const Matrix sigma = read_matrix_csv(est_truth);
                report.frobenius_error = (report.estimate - sigma).norm();
                report.operator_error = operator_norm(report.estimate - sigma);
            }
            write_matrix_csv(est_out, report.estimate);
            std::cout << report_to_json(report).dump(2) << '\n';
            return 0;
        }

        if (experiment->parsed()) {
            ExperimentSpec spec = read_experiment_json(exp_spec);
            if (exp_seed) spec.seed = *exp_seed;
            if (exp_delta) spec.delta = *exp_delta;
            if (exp_omega) spec.lambda_policy.omega = *exp_omega;
            const auto records = run_experiment(spec, exp_threads);

            fs::create_directories(exp_out);
            {
                std::ofstream out((fs::path(exp_out) / "records.csv").string());
                out << records_csv_header() << '\n';
                for (const auto& rec : records) out << record_csv_row(rec) << '\n';
            }
            {
                std::ofstream out((fs::path(exp_out) / "timings.csv").string());
                out << timing_csv_header() << '\n';
                for (const auto& rec : records) out << timing_csv_row(rec) << '\n';
            }

            json summary;
            summary["schema_version"] = 1;
            summary["records"] = records.size();
            if (spec.n_grid.size() >= 3) {
                json slopes;
                for (const Method method : spec.estimators) {
                    const RateFit fit =
                        rate_slope(records, method, ErrorField::Frobenius);
                    slopes[method_name(method)] = {{"slope", fit.slope},
                                                   {"intercept", fit.intercept},
                                                   {"r_squared", fit.r_squared}};
                }
                summary["rate_slopes"] = std::move(slopes);
            }
            if (spec.lambda_policy.kind == LambdaPolicy::Kind::Theorem1) {
                const CoverageReport cov = coverage_report(records, spec.delta);
                summary["lemma1_coverage"] = cov.lemma1_coverage;
                summary["theorem1_coverage"] = cov.theorem1_coverage;
            }
            std::ofstream out((fs::path(exp_out) / "summary.json").string());
            out << summary.dump(2) << '\n';
            std::cout << summary.dump(2) << '\n';
            return 0;
        }

        return run_verify();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
