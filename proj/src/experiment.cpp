#include "kroncov/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "kroncov/rng.hpp"

namespace kroncov {

namespace {

constexpr std::uint64_t kModelTag = 0x6d6f64656cULL;
constexpr std::uint64_t kDataTag = 0x64617461ULL;
constexpr std::uint64_t kCvTag = 0x637653656cULL;
constexpr std::uint64_t kPilotTag = 0x70696c6f74ULL;

KronSumCovariance build_model(const BlockShape& shape, Index k_rank,
                              double phi_target, double psi_target,
                              std::uint64_t model_seed) {
    KronSumCovariance cov;
    cov.shape = shape;
    for (Index j = 0; j < k_rank; ++j) {
        cov.factors.push_back(FactorPair{
            random_psd_factor(shape.p, phi_target,
                              mix64(model_seed, 2 * static_cast<std::uint64_t>(j))),
            random_psd_factor(shape.q, psi_target,
                              mix64(model_seed, 2 * static_cast<std::uint64_t>(j) + 1))});
    }
    return cov;
}

std::vector<double> lambda_grid(const LambdaPolicy& policy, const Svd& rearranged_cov) {
    double lambda0 = policy.lambda0;
    if (lambda0 <= 0.0) {
        lambda0 = rearranged_cov.s.size() > 0 ? 2.0 * rearranged_cov.s(0) : 1.0;
        if (lambda0 <= 0.0) lambda0 = 1.0;
    }
    std::vector<double> grid;
    double value = lambda0;
    for (int m = 0; m <= policy.m_max; ++m) {
        grid.push_back(value);
        value *= 0.5;
    }
    return grid;
}

double pick(const TrialRecord& rec, ErrorField field) {
    switch (field) {
        case ErrorField::Frobenius: return rec.frobenius_error;
        case ErrorField::SquaredFrobenius: return rec.squared_frobenius_error;
        case ErrorField::OperatorRearranged: return rec.operator_error_rearranged;
    }
    return rec.frobenius_error;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_opt(const std::optional<double>& x) {
    return x ? fmt(*x) : std::string();
}

} // namespace

void ExperimentSpec::validate() const {
    shape.validate();
    if (k_rank < 1) throw ContractError("ExperimentSpec: k_rank < 1");
    if (trials < 1) throw ContractError("ExperimentSpec: trials < 1");
    if (!(delta > 0.0 && delta < 1.0)) {
        throw ContractError("ExperimentSpec: delta outside (0,1)");
    }
    if (n_grid.empty()) throw ContractError("ExperimentSpec: empty n_grid");
    for (size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw ContractError("ExperimentSpec: n < 1");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
            throw ContractError("ExperimentSpec: n_grid must be strictly increasing");
        }
    }
    if (estimators.empty()) throw ContractError("ExperimentSpec: no estimators");
    if (!(phi_rank_target >= 1.0 && phi_rank_target <= static_cast<double>(shape.p)) ||
        !(psi_rank_target >= 1.0 && psi_rank_target <= static_cast<double>(shape.q))) {
        throw ContractError("ExperimentSpec: factor effective-rank target infeasible");
    }
    if (lambda_policy.kind == LambdaPolicy::Kind::Theorem1) {
        // upfront feasibility check at the target ranks and the smallest n
        BoundInputs probe;
        probe.n = n_grid.front();
        probe.delta = delta;
        probe.max_phi_rank = phi_rank_target;
        probe.max_psi_rank = psi_rank_target;
        if (!delta_condition_holds(probe)) {
            throw ContractError(
                "ExperimentSpec: delta condition fails at n = " +
                std::to_string(n_grid.front()) + " for the target effective ranks");
        }
    }
    if (lambda_policy.kind == LambdaPolicy::Kind::Fixed &&
        lambda_policy.fixed_lambda < 0.0) {
        throw ContractError("ExperimentSpec: fixed lambda < 0");
    }
}

std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, int threads) {
    spec.validate();
    if (threads < 1) threads = 1;

    std::vector<std::vector<TrialRecord>> per_trial(static_cast<size_t>(spec.trials));

    auto run_trial = [&](int trial) {
        const std::uint64_t model_seed =
            mix64(spec.seed, kModelTag,
                  spec.fixed_model ? 0ULL : static_cast<std::uint64_t>(trial));
        const KronSumCovariance cov = build_model(
            spec.shape, spec.k_rank, spec.phi_rank_target, spec.psi_rank_target,
            model_seed);
        const Matrix sigma = assemble_sigma(cov);
        const MatrixModel sampler = factorize_for_sampling(cov);

        std::vector<TrialRecord>& out = per_trial[static_cast<size_t>(trial)];
        for (const Index n : spec.n_grid) {
            const SampleSet data = sample_matrix_model(
                sampler, n,
                mix64(spec.seed, kDataTag, static_cast<std::uint64_t>(trial),
                      static_cast<std::uint64_t>(n)));
            const Matrix sample_cov = sample_covariance(data);
            const double deviation =
                rearranged_deviation_norm(sample_cov, sigma, spec.shape);

            std::optional<double> lemma1_value, theorem1_value;
            double pls_lambda = 0.0;
            if (spec.lambda_policy.kind == LambdaPolicy::Kind::Theorem1) {
                const BoundInputs inputs =
                    bound_inputs_for(cov, spec.lambda_policy.omega, n, spec.delta);
                lemma1_value = lemma1_bound(inputs);
                pls_lambda = 2.0 * *lemma1_value;
                theorem1_value = theorem1_error_bound(pls_lambda, spec.k_rank);
            } else if (spec.lambda_policy.kind == LambdaPolicy::Kind::Fixed) {
                pls_lambda = spec.lambda_policy.fixed_lambda;
            }

            for (const Method method : spec.estimators) {
                TrialRecord rec;
                rec.trial = trial;
                rec.n = n;
                rec.estimator = method;
                rec.p = spec.shape.p;
                rec.q = spec.shape.q;
                rec.k_rank = spec.k_rank;
                rec.seed = spec.seed;
                rec.delta = spec.delta;
                rec.operator_error_rearranged = deviation;
                rec.lemma1_bound_value = lemma1_value;
                rec.theorem1_bound_value = theorem1_value;

                const auto start = std::chrono::steady_clock::now();
                EstimateReport report;
                switch (method) {
                    case Method::Sample:
                        report = sample_estimate(data, spec.shape);
                        break;
                    case Method::PlsSoft: {
                        double lambda = pls_lambda;
                        if (spec.lambda_policy.kind == LambdaPolicy::Kind::GridSelect) {
                            const Svd dec = rearranged_svd(sample_cov, spec.shape);
                            const auto grid = lambda_grid(spec.lambda_policy, dec);
                            lambda = select_lambda(
                                         data, spec.shape, grid,
                                         spec.lambda_policy.split_fraction,
                                         spec.lambda_policy.repetitions,
                                         mix64(spec.seed, kCvTag,
                                               static_cast<std::uint64_t>(trial),
                                               static_cast<std::uint64_t>(n)))
                                         .lambda;
                        }
                        report = pls_estimate(data, spec.shape, lambda);
                        break;
                    }
                    case Method::PcaHard:
                        report = hard_threshold_estimate(data, spec.shape, spec.k_rank);
                        break;
                    case Method::RankOne:
                        report = rank_one_estimate(data, spec.shape);
                        break;
                }
                rec.wall_time = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
                rec.lambda_used = report.lambda_used;
                rec.retained_rank = report.retained_rank;
                rec.frobenius_error = (report.estimate - sigma).norm();
                rec.squared_frobenius_error = rec.frobenius_error * rec.frobenius_error;
                out.push_back(std::move(rec));
            }
        }
    };

    if (threads == 1 || spec.trials == 1) {
        for (int t = 0; t < spec.trials; ++t) run_trial(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int workers = std::min(threads, spec.trials);
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < spec.trials; t = next.fetch_add(1)) {
                    run_trial(t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<TrialRecord> records;
    records.reserve(static_cast<size_t>(spec.trials) * spec.n_grid.size() *
                    spec.estimators.size());
    for (auto& chunk : per_trial) {
        for (auto& rec : chunk) records.push_back(std::move(rec));
    }
    return records;
}

RateFit rate_slope(const std::vector<TrialRecord>& records, Method estimator,
                   ErrorField field) {
    std::vector<Index> ns;
    for (const auto& rec : records) {
        if (rec.estimator == estimator &&
            std::find(ns.begin(), ns.end(), rec.n) == ns.end()) {
            ns.push_back(rec.n);
        }
    }
    if (ns.size() < 3) throw ContractError("rate_slope: need >= 3 distinct n values");
    std::sort(ns.begin(), ns.end());

    std::vector<double> xs, ys;
    for (const Index n : ns) {
        std::vector<double> errs;
        for (const auto& rec : records) {
            if (rec.estimator == estimator && rec.n == n) errs.push_back(pick(rec, field));
        }
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(median(std::move(errs))));
    }

    const double count = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double var_x = sxx - sx * sx / count;
    if (var_x <= 0.0) throw ContractError("rate_slope: degenerate n grid");
    RateFit fit;
    fit.slope = (sxy - sx * sy / count) / var_x;
    fit.intercept = (sy - fit.slope * sx) / count;
    const double var_y = syy - sy * sy / count;
    fit.r_squared = var_y > 0.0
                        ? (sxy - sx * sy / count) * (sxy - sx * sy / count) / (var_x * var_y)
                        : 1.0;
    return fit;
}

CoverageReport coverage_report(const std::vector<TrialRecord>& records, double) {
    if (records.empty()) throw ContractError("coverage_report: no records");
    int lemma_ok = 0, theorem_ok = 0;
    for (const auto& rec : records) {
        if (!rec.lemma1_bound_value || !rec.theorem1_bound_value) {
            throw ContractError(
                "coverage_report: records lack bound values (theorem1 policy required)");
        }
        if (rec.operator_error_rearranged <= *rec.lemma1_bound_value) ++lemma_ok;
        if (rec.squared_frobenius_error < *rec.theorem1_bound_value) ++theorem_ok;
    }
    const double total = static_cast<double>(records.size());
    return CoverageReport{lemma_ok / total, theorem_ok / total};
}

double calibrate_omega(const BlockShape& shape, Index k_rank, double phi_rank_target,
                       double psi_rank_target, Index n_ref, double delta,
                       int pilot_trials, std::uint64_t seed) {
    if (pilot_trials < 1) throw ContractError("calibrate_omega: pilot_trials < 1");
    double omega = 0.0;
    for (int t = 0; t < pilot_trials; ++t) {
        const KronSumCovariance cov = build_model(
            shape, k_rank, phi_rank_target, psi_rank_target,
            mix64(seed, kPilotTag, kModelTag, static_cast<std::uint64_t>(t)));
        const Matrix sigma = assemble_sigma(cov);
        const SampleSet data = sample_matrix_model(
            factorize_for_sampling(cov), n_ref,
            mix64(seed, kPilotTag, kDataTag, static_cast<std::uint64_t>(t)));
        const double deviation =
            rearranged_deviation_norm(sample_covariance(data), sigma, shape);
        const double unit_bound = lemma1_bound(bound_inputs_for(cov, 1.0, n_ref, delta));
        omega = std::max(omega, deviation / unit_bound);
    }
    return omega;
}

std::string records_csv_header() {
    return "trial,n,estimator,p,q,k_rank,seed,delta,lambda_used,frobenius_error,"
           "squared_frobenius_error,operator_error_rearranged,lemma1_bound_value,"
           "theorem1_bound_value,retained_rank";
}

std::string record_csv_row(const TrialRecord& rec) {
    std::string row;
    row += std::to_string(rec.trial);
    row += ',' + std::to_string(rec.n);
    row += ',' + method_name(rec.estimator);
    row += ',' + std::to_string(rec.p);
    row += ',' + std::to_string(rec.q);
    row += ',' + std::to_string(rec.k_rank);
    row += ',' + std::to_string(rec.seed);
    row += ',' + fmt(rec.delta);
    row += ',' + fmt_opt(rec.lambda_used);
    row += ',' + fmt(rec.frobenius_error);
    row += ',' + fmt(rec.squared_frobenius_error);
    row += ',' + fmt(rec.operator_error_rearranged);
    row += ',' + fmt_opt(rec.lemma1_bound_value);
    row += ',' + fmt_opt(rec.theorem1_bound_value);
    row += ',' + std::to_string(rec.retained_rank);
    return row;
}

std::string timing_csv_header() { return "trial,n,estimator,wall_time"; }

std::string timing_csv_row(const TrialRecord& rec) {
    return std::to_string(rec.trial) + ',' + std::to_string(rec.n) + ',' +
           method_name(rec.estimator) + ',' + fmt(rec.wall_time);
}

} // namespace kroncov
