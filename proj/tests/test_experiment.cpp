#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kroncov/experiment.hpp"

using namespace kroncov;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec spec;
    spec.shape = BlockShape{3, 3};
    spec.k_rank = 2;
    spec.phi_rank_target = 2.0;
    spec.psi_rank_target = 2.0;
    spec.n_grid = {32, 64};
    spec.estimators = {Method::Sample, Method::PlsSoft};
    spec.lambda_policy.kind = LambdaPolicy::Kind::GridSelect;
    spec.lambda_policy.m_max = 6;
    spec.lambda_policy.repetitions = 2;
    spec.trials = 4;
    spec.seed = 2024;
    return spec;
}

std::string records_blob(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << records_csv_header() << '\n';
    for (const auto& rec : records) out << record_csv_row(rec) << '\n';
    return out.str();
}

} // namespace

TEST_CASE("experiment spec validation") {
    ExperimentSpec spec = small_spec();
    CHECK_NOTHROW(spec.validate());

    ExperimentSpec bad = small_spec();
    bad.n_grid = {64, 64};
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad.n_grid = {};
    CHECK_THROWS_AS(bad.validate(), ContractError);

    bad = small_spec();
    bad.phi_rank_target = 5.0;  // exceeds p = 3
    CHECK_THROWS_AS(bad.validate(), ContractError);

    // theorem1 policy refuses an infeasible (n, delta) up front
    bad = small_spec();
    bad.lambda_policy.kind = LambdaPolicy::Kind::Theorem1;
    bad.n_grid = {2};
    bad.delta = 0.01;
    CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("run_experiment produces one record per (trial, n, estimator)") {
    const ExperimentSpec spec = small_spec();
    const auto records = run_experiment(spec);
    REQUIRE(records.size() == 4 * 2 * 2);
    size_t idx = 0;
    for (int trial = 0; trial < spec.trials; ++trial) {
        for (const Index n : spec.n_grid) {
            for (const Method method : spec.estimators) {
                const TrialRecord& rec = records[idx++];
                CHECK(rec.trial == trial);
                CHECK(rec.n == n);
                CHECK(rec.estimator == method);
                CHECK(rec.frobenius_error > 0.0);
                CHECK(rec.squared_frobenius_error ==
                      doctest::Approx(rec.frobenius_error * rec.frobenius_error));
                CHECK(rec.operator_error_rearranged > 0.0);
                if (method == Method::PlsSoft) {
                    REQUIRE(rec.lambda_used.has_value());
                    CHECK(*rec.lambda_used > 0.0);
                } else {
                    CHECK_FALSE(rec.lambda_used.has_value());
                }
            }
        }
    }
}

TEST_CASE("records are identical for every thread count") {
    const ExperimentSpec spec = small_spec();
    const std::string one = records_blob(run_experiment(spec, 1));
    const std::string four = records_blob(run_experiment(spec, 4));
    const std::string nine = records_blob(run_experiment(spec, 9));
    CHECK(one == four);
    CHECK(one == nine);
    // and a rerun at the same thread count is byte-identical too
    CHECK(one == records_blob(run_experiment(spec, 1)));

    ExperimentSpec other = spec;
    other.seed = 2025;
    CHECK(one != records_blob(run_experiment(other, 1)));
}

TEST_CASE("fixed_model reuses one covariance across trials") {
    ExperimentSpec spec = small_spec();
    spec.fixed_model = true;
    spec.estimators = {Method::Sample};
    spec.lambda_policy.kind = LambdaPolicy::Kind::Fixed;
    spec.lambda_policy.fixed_lambda = 0.1;
    const auto records = run_experiment(spec);
    // same model and same n means the deviation statistic differs only through
    // the data seed; with per-trial models the bound inputs would differ, so
    // check instead that a per-trial rerun changes nothing but the trial index
    ExperimentSpec per_trial = spec;
    per_trial.fixed_model = false;
    const auto records2 = run_experiment(per_trial);
    REQUIRE(records.size() == records2.size());
    bool any_difference = false;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].frobenius_error != records2[i].frobenius_error)
            any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("rate_slope recovers synthetic decay exponents") {
    auto make = [](double c, double exponent) {
        std::vector<TrialRecord> records;
        for (const Index n : {16, 32, 64, 128, 256}) {
            for (int trial = 0; trial < 3; ++trial) {
                TrialRecord rec;
                rec.trial = trial;
                rec.n = n;
                rec.estimator = Method::PlsSoft;
                rec.frobenius_error = c * std::pow(static_cast<double>(n), exponent);
                records.push_back(rec);
            }
        }
        return records;
    };

    const RateFit half = rate_slope(make(3.0, -0.5), Method::PlsSoft, ErrorField::Frobenius);
    CHECK(half.slope == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(half.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(half.r_squared == doctest::Approx(1.0).epsilon(1e-10));

    const RateFit flat = rate_slope(make(2.0, 0.0), Method::PlsSoft, ErrorField::Frobenius);
    CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-10));

    // too few n values
    std::vector<TrialRecord> short_records = make(1.0, -0.5);
    short_records.erase(
        std::remove_if(short_records.begin(), short_records.end(),
                       [](const TrialRecord& r) { return r.n > 32; }),
        short_records.end());
    CHECK_THROWS_AS(rate_slope(short_records, Method::PlsSoft, ErrorField::Frobenius),
                    ContractError);
    // no records for the requested estimator
    CHECK_THROWS_AS(rate_slope(make(1.0, -0.5), Method::Sample, ErrorField::Frobenius),
                    ContractError);
}

TEST_CASE("rate_slope uses the median over trials") {
    std::vector<TrialRecord> records;
    for (const Index n : {16, 32, 64}) {
        for (int trial = 0; trial < 3; ++trial) {
            TrialRecord rec;
            rec.trial = trial;
            rec.n = n;
            rec.estimator = Method::Sample;
            // median is 1/n; one wild outlier per n must not move the fit
            rec.frobenius_error =
                trial == 2 ? 1e6 : 1.0 / static_cast<double>(n) * (trial == 0 ? 0.5 : 1.0);
            records.push_back(rec);
        }
    }
    const RateFit fit = rate_slope(records, Method::Sample, ErrorField::Frobenius);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("coverage_report counts bound violations") {
    std::vector<TrialRecord> records(10);
    for (size_t i = 0; i < records.size(); ++i) {
        records[i].operator_error_rearranged = 1.0;
        records[i].squared_frobenius_error = 1.0;
        records[i].lemma1_bound_value = i < 7 ? 2.0 : 0.5;   // 7 of 10 covered
        records[i].theorem1_bound_value = i < 4 ? 2.0 : 0.5; // 4 of 10 covered
    }
    const CoverageReport report = coverage_report(records, 0.05);
    CHECK(report.lemma1_coverage == doctest::Approx(0.7));
    CHECK(report.theorem1_coverage == doctest::Approx(0.4));

    records[0].lemma1_bound_value.reset();
    CHECK_THROWS_AS(coverage_report(records, 0.05), ContractError);
    CHECK_THROWS_AS(coverage_report({}, 0.05), ContractError);
}

TEST_CASE("theorem1 policy records bounds and coverage rises with omega") {
    ExperimentSpec spec = small_spec();
    spec.lambda_policy.kind = LambdaPolicy::Kind::Theorem1;
    spec.estimators = {Method::PlsSoft};
    spec.n_grid = {128};
    spec.trials = 20;
    spec.delta = 0.1;

    spec.lambda_policy.omega = 1e-3;
    const auto tiny = run_experiment(spec);
    for (const auto& rec : tiny) {
        REQUIRE(rec.lemma1_bound_value.has_value());
        REQUIRE(rec.theorem1_bound_value.has_value());
        CHECK(*rec.lambda_used == doctest::Approx(2.0 * *rec.lemma1_bound_value));
    }
    const CoverageReport low = coverage_report(tiny, spec.delta);
    CHECK(low.lemma1_coverage == 0.0);  // absurdly small omega covers nothing

    spec.lambda_policy.omega = 1e3;
    const CoverageReport high = coverage_report(run_experiment(spec), spec.delta);
    CHECK(high.lemma1_coverage == 1.0);
    CHECK(high.theorem1_coverage == 1.0);
}

TEST_CASE("calibrate_omega makes every pilot trial covered and is tight") {
    const BlockShape shape{3, 3};
    const double omega = calibrate_omega(shape, 1, 2.0, 2.0, 128, 0.05, 20, 555);
    CHECK(omega > 0.0);
    // rerunning with the same seed is deterministic
    CHECK(omega == calibrate_omega(shape, 1, 2.0, 2.0, 128, 0.05, 20, 555));
    // more pilot trials can only increase the calibrated constant
    const double fewer = calibrate_omega(shape, 1, 2.0, 2.0, 128, 0.05, 5, 555);
    CHECK(fewer <= omega);
    CHECK_THROWS_AS(calibrate_omega(shape, 1, 2.0, 2.0, 128, 0.05, 0, 555),
                    ContractError);
}

TEST_CASE("csv schema is stable") {
    CHECK(records_csv_header() ==
          "trial,n,estimator,p,q,k_rank,seed,delta,lambda_used,frobenius_error,"
          "squared_frobenius_error,operator_error_rearranged,lemma1_bound_value,"
          "theorem1_bound_value,retained_rank");
    CHECK(timing_csv_header() == "trial,n,estimator,wall_time");

    TrialRecord rec;
    rec.trial = 3;
    rec.n = 64;
    rec.estimator = Method::PlsSoft;
    rec.p = 4;
    rec.q = 5;
    rec.k_rank = 2;
    rec.seed = 17;
    rec.delta = 0.05;
    rec.lambda_used = 0.25;
    rec.frobenius_error = 1.5;
    rec.squared_frobenius_error = 2.25;
    rec.operator_error_rearranged = 0.75;
    rec.retained_rank = 2;
    CHECK(record_csv_row(rec) ==
          "3,64,pls_soft,4,5,2,17,0.050000000000000003,0.25,1.5,2.25,0.75,,,2");
    rec.lemma1_bound_value = 0.5;
    rec.theorem1_bound_value = 0.375;
    CHECK(record_csv_row(rec) ==
          "3,64,pls_soft,4,5,2,17,0.050000000000000003,0.25,1.5,2.25,0.75,0.5,0.375,2");
}
