#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kroncov/rearrange.hpp"

namespace kroncov {

// Centered observations, one per column of `observations` (d x n).
struct SampleSet {
    Matrix observations;
    std::optional<std::uint64_t> seed;

    Index n() const { return observations.cols(); }
    Index d() const { return observations.rows(); }
};

enum class Method { Sample, PlsSoft, PcaHard, RankOne };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct EstimateReport {
    Matrix estimate;
    Method method = Method::Sample;
    std::optional<double> lambda_used;          // present iff method == PlsSoft
    Vector singular_values;                     // of the rearranged sample covariance
    Index retained_rank = 0;                    // components kept after thresholding
    std::optional<double> frobenius_error;      // vs. truth, when known
    std::optional<double> operator_error;
    double symmetry_residual = 0.0;             // ||est - est^T||_F / max(1, ||est||_F)
    Index n = 0;
};

Matrix sample_covariance(const SampleSet& data);

// Sample covariance packaged as a report, for uniform estimator sweeps.
EstimateReport sample_estimate(const SampleSet& data, const BlockShape& shape);

// Nuclear-norm penalized permuted least squares: soft-threshold the singular
// values of the rearranged sample covariance and map back.
EstimateReport pls_estimate(const SampleSet& data, const BlockShape& shape,
                            double lambda);

// Keep the top-k singular triples of the rearranged sample covariance.
EstimateReport hard_threshold_estimate(const SampleSet& data, const BlockShape& shape,
                                       Index k);

// Kronecker-rank-one estimator: kron(Phi_hat, Psi_hat) / mean squared norm,
// with Phi_hat, Psi_hat the mode-wise Gram averages of the reshaped samples.
EstimateReport rank_one_estimate(const SampleSet& data, const BlockShape& shape);

struct LambdaSelection {
    double lambda = 0.0;
    std::vector<double> scores;  // averaged validation scores, grid order
};

// Random-split selection over a descending grid. Each repetition splits the
// sample into fit/validation halves and scores each lambda by the Frobenius
// distance between the shrunk fit estimate and the validation sample
// covariance, both in the rearranged domain. Ties go to the larger lambda.
LambdaSelection select_lambda(const SampleSet& data, const BlockShape& shape,
                              const std::vector<double>& grid, double split_fraction,
                              int repetitions, std::uint64_t seed);

struct FactorPair {
    Matrix phi;  // p x p
    Matrix psi;  // q x q
};

struct ExtractedFactors {
    std::vector<FactorPair> factors;
    double reconstruction_residual = 0.0;  // Frobenius, vs. report.estimate
};

// Split the estimate's rearranged SVD into Kronecker factor pairs. Each
// triple (sigma, u, v) becomes (symmetrize(unvec(sqrt(sigma) u)),
// symmetrize(unvec(sqrt(sigma) v))), signed so trace(phi) >= 0. With
// project_psd, negative eigenvalues of both factors are clipped at zero.
ExtractedFactors extract_factors(const EstimateReport& report, const BlockShape& shape,
                                 Index k, bool project_psd = false);

} // namespace kroncov
