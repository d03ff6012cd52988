#pragma once

#include <cstdint>
#include <vector>

#include "kroncov/estimators.hpp"
#include "kroncov/rearrange.hpp"

namespace kroncov {

// Ground truth: Sigma = sum_j kron(phi_j, psi_j) with symmetric PSD factors.
struct KronSumCovariance {
    BlockShape shape;
    std::vector<FactorPair> factors;

    Index kronecker_rank() const { return static_cast<Index>(factors.size()); }
    void validate() const;
};

// Sampling form: X_i = vec(sum_j b_j Y_ij a_j^T) with standard Gaussian Y_ij,
// so the population covariance is sum_j kron(a_j a_j^T, b_j b_j^T).
struct MatrixModel {
    BlockShape shape;
    std::vector<FactorPair> terms;  // phi -> a (p x p), psi -> b (q x q)
};

// Inputs of the Lemma/Theorem bound evaluators. omega is the exponential
// moment constant of the data distribution; it is not computable from the
// model and must be supplied (or calibrated empirically, see experiment).
struct BoundInputs {
    double omega = 1.0;
    Index n = 1;
    double delta = 0.05;
    double max_phi_rank = 1.0;   // max_j r(phi_j)
    double max_psi_rank = 1.0;   // max_j r(psi_j)
    double op_norm_sum = 1.0;    // sum_j ||phi_j|| ||psi_j||
    double trace_sigma = 1.0;
};

Matrix assemble_sigma(const KronSumCovariance& model);

// Symmetric PSD factor with effective rank close to `target`, realized via a
// geometric eigenvalue decay conjugated by a seeded random orthogonal matrix.
Matrix random_psd_factor(Index dim, double target_effective_rank, std::uint64_t seed);

// Gaussian samples from the matrix model; substream per (observation, term)
// so results do not depend on evaluation order.
SampleSet sample_matrix_model(const MatrixModel& model, Index n, std::uint64_t seed);

// Replace each factor by its symmetric PSD square root.
MatrixModel factorize_for_sampling(const KronSumCovariance& cov);

// Tr(M) / ||M|| for symmetric PSD M.
double effective_rank(const Matrix& m);

BoundInputs bound_inputs_for(const KronSumCovariance& cov, double omega, Index n,
                             double delta);

bool delta_condition_holds(const BoundInputs& inputs);

// High-probability bound on ||R(sample_cov - sigma)||.
double lemma1_bound(const BoundInputs& inputs);

// Smallest penalty level certified by the theory: 2 * lemma1_bound.
double theorem1_lambda(const BoundInputs& inputs);

// Squared-Frobenius error bound at penalty `lambda`: 1.5 * lambda^2 * K.
double theorem1_error_bound(double lambda, Index k_rank);

// Unstructured sample-covariance rate (implicit constant taken as 1; a rate
// for slope comparisons, not a certified envelope).
double baseline_bound_rate(double trace_sigma, Index n, double delta);

} // namespace kroncov
