#pragma once

#include "kroncov/linalg.hpp"

namespace kroncov {

// Block geometry of a pq x pq covariance: a p x p grid of q x q blocks.
struct BlockShape {
    Index p = 1;  // outer (block-grid) dimension
    Index q = 1;  // inner (block) dimension

    Index d() const { return p * q; }

    void validate() const {
        if (p < 1 || q < 1) throw ShapeError("BlockShape: p and q must be >= 1");
    }
};

// The rearrangement operator R : R^{pq x pq} -> R^{p^2 x q^2}.
// Row (j-1)p + i (1-based) of R(M) is vec of the q x q block at block-row i,
// block-column j. Internally everything is 0-based: output row j*p + i holds
// vec(M(i, j)) for i, j in [0, p).
Matrix rearrange(const Matrix& m, const BlockShape& shape);

// Inverse index permutation; rearrange(rearrange_inverse(r)) == r exactly.
Matrix rearrange_inverse(const Matrix& r, const BlockShape& shape);

// Operator norm of R(sample_cov - sigma), the statistic controlling the
// penalty level of the soft-threshold estimator.
double rearranged_deviation_norm(const Matrix& sample_cov, const Matrix& sigma,
                                 const BlockShape& shape);

// SVD of rearrange(m) for symmetric m. Symmetry of m makes R(m) invariant
// under the pair-swap permutations on both sides, so the decomposition splits
// into symmetric/antisymmetric blocks of roughly half the side length; the
// two block SVDs cost about a quarter of the full one. Falls back to the
// plain dense SVD when m is not symmetric.
Svd rearranged_svd(const Matrix& m, const BlockShape& shape);

} // namespace kroncov
