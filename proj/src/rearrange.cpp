#include "kroncov/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace kroncov {

namespace {

void check_ambient(const Matrix& m, const BlockShape& shape, const char* what) {
    shape.validate();
    if (m.rows() != shape.d() || m.cols() != shape.d()) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(shape.d()) +
                         "x" + std::to_string(shape.d()) + ", got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

} // namespace

Matrix rearrange(const Matrix& m, const BlockShape& shape) {
    check_ambient(m, shape, "rearrange");
    const Index p = shape.p, q = shape.q;
    Matrix out(p * p, q * q);
    for (Index t = 0; t < q; ++t)
        for (Index s = 0; s < q; ++s)
            for (Index j = 0; j < p; ++j)
                for (Index i = 0; i < p; ++i)
                    out(j * p + i, t * q + s) = m(i * q + s, j * q + t);
    return out;
}

Matrix rearrange_inverse(const Matrix& r, const BlockShape& shape) {
    shape.validate();
    const Index p = shape.p, q = shape.q;
    if (r.rows() != p * p || r.cols() != q * q) {
        throw ShapeError("rearrange_inverse: expected " + std::to_string(p * p) + "x" +
                         std::to_string(q * q) + ", got " + std::to_string(r.rows()) +
                         "x" + std::to_string(r.cols()));
    }
    Matrix out(p * q, p * q);
    for (Index t = 0; t < q; ++t)
        for (Index s = 0; s < q; ++s)
            for (Index j = 0; j < p; ++j)
                for (Index i = 0; i < p; ++i)
                    out(i * q + s, j * q + t) = r(j * p + i, t * q + s);
    return out;
}

double rearranged_deviation_norm(const Matrix& sample_cov, const Matrix& sigma,
                                 const BlockShape& shape) {
    check_ambient(sample_cov, shape, "rearranged_deviation_norm");
    check_ambient(sigma, shape, "rearranged_deviation_norm");
    return operator_norm(rearrange(sample_cov - sigma, shape));
}

namespace {

// Pair-index bases for the symmetric/antisymmetric split. Row index j*p + i of
// the rearranged matrix carries the ordered pair (i, j); symmetry of the input
// covariance ties (i, j) to (j, i).
struct PairBasis {
    std::vector<Index> first;   // a
    std::vector<Index> second;  // b >= a (symmetric) or b > a (antisymmetric)
};

PairBasis symmetric_pairs(Index p) {
    PairBasis basis;
    for (Index a = 0; a < p; ++a)
        for (Index b = a; b < p; ++b) {
            basis.first.push_back(a);
            basis.second.push_back(b);
        }
    return basis;
}

PairBasis antisymmetric_pairs(Index p) {
    PairBasis basis;
    for (Index a = 0; a < p; ++a)
        for (Index b = a + 1; b < p; ++b) {
            basis.first.push_back(a);
            basis.second.push_back(b);
        }
    return basis;
}

} // namespace

Svd rearranged_svd(const Matrix& m, const BlockShape& shape) {
    check_ambient(m, shape, "rearranged_svd");
    const Index p = shape.p, q = shape.q;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale || (p == 1 && q == 1)) {
        return svd(rearrange(m, shape));
    }
    const Matrix ms = 0.5 * (m + m.transpose());
    const double inv_sqrt2 = 0.70710678118654752440;

    const PairBasis rows_s = symmetric_pairs(p);
    const PairBasis cols_s = symmetric_pairs(q);
    const PairBasis rows_a = antisymmetric_pairs(p);
    const PairBasis cols_a = antisymmetric_pairs(q);

    // Projected blocks. For a symmetric input the cross blocks vanish, so the
    // full SVD is the union of the two block SVDs.
    Matrix block_s(static_cast<Index>(rows_s.first.size()),
                   static_cast<Index>(cols_s.first.size()));
    for (Index cj = 0; cj < block_s.cols(); ++cj) {
        const Index s = cols_s.first[cj], t = cols_s.second[cj];
        for (Index ri = 0; ri < block_s.rows(); ++ri) {
            const Index a = rows_s.first[ri], b = rows_s.second[ri];
            // R[(a,b),(s,t)] = ms(a*q+s, b*q+t)
            if (a == b && s == t) {
                block_s(ri, cj) = ms(a * q + s, a * q + s);
            } else if (a == b) {
                block_s(ri, cj) =
                    (ms(a * q + s, a * q + t) + ms(a * q + t, a * q + s)) * inv_sqrt2;
            } else if (s == t) {
                block_s(ri, cj) =
                    (ms(a * q + s, b * q + s) + ms(b * q + s, a * q + s)) * inv_sqrt2;
            } else {
                block_s(ri, cj) = 0.5 * (ms(a * q + s, b * q + t) + ms(b * q + s, a * q + t) +
                                         ms(a * q + t, b * q + s) + ms(b * q + t, a * q + s));
            }
        }
    }
    Matrix block_a(static_cast<Index>(rows_a.first.size()),
                   static_cast<Index>(cols_a.first.size()));
    for (Index cj = 0; cj < block_a.cols(); ++cj) {
        const Index s = cols_a.first[cj], t = cols_a.second[cj];
        for (Index ri = 0; ri < block_a.rows(); ++ri) {
            const Index a = rows_a.first[ri], b = rows_a.second[ri];
            block_a(ri, cj) = 0.5 * (ms(a * q + s, b * q + t) - ms(b * q + s, a * q + t) -
                                     ms(a * q + t, b * q + s) + ms(b * q + t, a * q + s));
        }
    }

    const Svd dec_s = svd(block_s);
    const Svd dec_a = block_a.size() > 0 ? svd(block_a) : Svd{Matrix(block_a.rows(), 0),
                                                              Vector(), Matrix(block_a.cols(), 0)};

    // Expand block singular vectors back to the full p^2 / q^2 spaces.
    const Index total = dec_s.s.size() + dec_a.s.size();
    Svd out;
    out.u = Matrix::Zero(p * p, total);
    out.v = Matrix::Zero(q * q, total);
    out.s.resize(total);

    std::vector<Index> order(static_cast<size_t>(total));
    std::iota(order.begin(), order.end(), Index(0));
    Vector merged(total);
    for (Index k = 0; k < dec_s.s.size(); ++k) merged(k) = dec_s.s(k);
    for (Index k = 0; k < dec_a.s.size(); ++k) merged(dec_s.s.size() + k) = dec_a.s(k);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index lhs, Index rhs) { return merged(lhs) > merged(rhs); });

    for (Index pos = 0; pos < total; ++pos) {
        const Index src = order[pos];
        out.s(pos) = merged(src);
        if (src < dec_s.s.size()) {
            for (Index ri = 0; ri < block_s.rows(); ++ri) {
                const Index a = rows_s.first[ri], b = rows_s.second[ri];
                const double w = (a == b) ? 1.0 : inv_sqrt2;
                out.u(b * p + a, pos) = w * dec_s.u(ri, src);
                out.u(a * p + b, pos) = w * dec_s.u(ri, src);
            }
            for (Index cj = 0; cj < block_s.cols(); ++cj) {
                const Index s = cols_s.first[cj], t = cols_s.second[cj];
                const double w = (s == t) ? 1.0 : inv_sqrt2;
                out.v(t * q + s, pos) = w * dec_s.v(cj, src);
                out.v(s * q + t, pos) = w * dec_s.v(cj, src);
            }
        } else {
            const Index k = src - dec_s.s.size();
            for (Index ri = 0; ri < block_a.rows(); ++ri) {
                const Index a = rows_a.first[ri], b = rows_a.second[ri];
                out.u(b * p + a, pos) = inv_sqrt2 * dec_a.u(ri, k);
                out.u(a * p + b, pos) = -inv_sqrt2 * dec_a.u(ri, k);
            }
            for (Index cj = 0; cj < block_a.cols(); ++cj) {
                const Index s = cols_a.first[cj], t = cols_a.second[cj];
                out.v(t * q + s, pos) = inv_sqrt2 * dec_a.v(cj, k);
                out.v(s * q + t, pos) = -inv_sqrt2 * dec_a.v(cj, k);
            }
        }
    }

    // re-apply the global sign convention on the expanded vectors
    for (Index j = 0; j < out.u.cols(); ++j) {
        for (Index i = 0; i < out.u.rows(); ++i) {
            if (out.u(i, j) != 0.0) {
                if (out.u(i, j) < 0.0) {
                    out.u.col(j) = -out.u.col(j);
                    out.v.col(j) = -out.v.col(j);
                }
                break;
            }
        }
    }
    return out;
}

} // namespace kroncov
