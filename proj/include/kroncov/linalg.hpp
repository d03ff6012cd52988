#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace kroncov {

// All matrices are dense, real, column-major (Eigen's default). Public
// contracts are index-based, so the storage order never leaks.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thin SVD, singular values non-increasing. Sign convention: the first
// nonzero entry of each left vector is positive, so decompositions are
// reproducible across runs.
struct Svd {
    Matrix u;        // rows x r, orthonormal columns
    Vector s;        // r, non-increasing, non-negative
    Matrix v;        // cols x r, orthonormal columns

    Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
};

struct EigenDecomposition {
    Vector eigenvalues;   // non-increasing
    Matrix eigenvectors;  // orthonormal columns, same order
};

void check_finite(const Matrix& m, const char* what);

Matrix kron(const Matrix& a, const Matrix& b);
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index rows, Index cols);

double frobenius_norm(const Matrix& m);
double operator_norm(const Matrix& m);
double nuclear_norm(const Matrix& m);
double trace(const Matrix& m);

// Singular values only (no vectors); same ordering as svd().
Vector singular_values(const Matrix& m);

Svd svd(const Matrix& m);

// Requires symmetry within 1e-10 (relative to the largest entry).
EigenDecomposition symmetric_eigendecomposition(const Matrix& m);

// Proximal operator of lambda * nuclear norm at m:
// sum_j (sigma_j - lambda/2)_+ u_j v_j^T.
Matrix soft_threshold_svd(const Matrix& m, double lambda);

// Best rank-k approximation in Frobenius norm.
Matrix hard_threshold_svd(const Matrix& m, Index k);

// Shrink an existing decomposition; shared by the estimators so the SVD is
// computed once per dataset.
Matrix soft_threshold_of(const Svd& dec, double lambda, Index* retained = nullptr);
Matrix hard_threshold_of(const Svd& dec, Index k);

} // namespace kroncov
