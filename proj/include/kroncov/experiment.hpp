#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kroncov/model.hpp"

namespace kroncov {

struct LambdaPolicy {
    enum class Kind { Theorem1, GridSelect, Fixed };
    Kind kind = Kind::GridSelect;

    // Theorem1
    double omega = 1.0;

    // GridSelect: grid {lambda0 * 2^-m : 0 <= m <= m_max}; lambda0 <= 0 means
    // auto (twice the top singular value of the rearranged sample covariance).
    double lambda0 = 0.0;
    int m_max = 10;
    double split_fraction = 0.5;
    int repetitions = 5;

    // Fixed
    double fixed_lambda = 0.0;
};

struct ExperimentSpec {
    BlockShape shape;
    Index k_rank = 1;
    double phi_rank_target = 1.0;
    double psi_rank_target = 1.0;
    std::vector<Index> n_grid;
    double delta = 0.05;
    std::vector<Method> estimators;
    LambdaPolicy lambda_policy;
    int trials = 1;
    std::uint64_t seed = 0;
    bool fixed_model = false;  // one Sigma per spec instead of one per trial

    void validate() const;
};

struct TrialRecord {
    int trial = 0;
    Index n = 0;
    Method estimator = Method::Sample;
    Index p = 0, q = 0, k_rank = 0;
    std::uint64_t seed = 0;
    double delta = 0.0;
    std::optional<double> lambda_used;
    double frobenius_error = 0.0;
    double squared_frobenius_error = 0.0;
    double operator_error_rearranged = 0.0;  // ||R(sample_cov - sigma)||
    std::optional<double> lemma1_bound_value;
    std::optional<double> theorem1_bound_value;
    Index retained_rank = 0;
    double wall_time = 0.0;  // seconds, estimator call only
};

// Runs trials x |n_grid| x |estimators| estimations. Trials may run on
// several threads; records come back sorted by (trial, n, estimator) and are
// identical for every thread count.
std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, int threads = 1);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

enum class ErrorField { Frobenius, SquaredFrobenius, OperatorRearranged };

// OLS of log(median error over trials) against log(n); needs >= 3 distinct n.
RateFit rate_slope(const std::vector<TrialRecord>& records, Method estimator,
                   ErrorField field);

struct CoverageReport {
    double lemma1_coverage = 0.0;
    double theorem1_coverage = 0.0;
};

// Fractions of records whose deviation statistic / squared error respect the
// recorded bounds. Requires records produced under the theorem1 policy.
CoverageReport coverage_report(const std::vector<TrialRecord>& records, double delta);

// Empirical calibration of the exponential-moment constant: the smallest
// omega for which the operator-norm bound holds on every pilot trial at the
// reference (n, delta). The bound is linear in omega, so this is
// max over trials of deviation / bound(omega = 1).
double calibrate_omega(const BlockShape& shape, Index k_rank, double phi_rank_target,
                       double psi_rank_target, Index n_ref, double delta,
                       int pilot_trials, std::uint64_t seed);

// Records CSV (stable schema; wall times go to a separate file so record
// files are byte-identical across reruns).
std::string records_csv_header();
std::string record_csv_row(const TrialRecord& rec);
std::string timing_csv_header();
std::string timing_csv_row(const TrialRecord& rec);

} // namespace kroncov
