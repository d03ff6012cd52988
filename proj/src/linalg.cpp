#include "kroncov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <lapacke.h>

extern "C" void openblas_set_num_threads(int);

namespace kroncov {

namespace {

// Linear algebra inside a trial is single-threaded; parallelism lives at the
// trial level of the experiment runner.
struct BlasThreadGuard {
    BlasThreadGuard() { openblas_set_num_threads(1); }
};
const BlasThreadGuard blas_thread_guard{};

void normalize_signs(Matrix& u, Matrix& v) {
    for (Index j = 0; j < u.cols(); ++j) {
        for (Index i = 0; i < u.rows(); ++i) {
            const double x = u(i, j);
            if (x != 0.0) {
                if (x < 0.0) {
                    u.col(j) = -u.col(j);
                    if (j < v.cols()) v.col(j) = -v.col(j);
                }
                break;
            }
        }
    }
}

} // namespace

void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw ContractError(std::string(what) + ": non-finite entries");
    }
}

Matrix kron(const Matrix& a, const Matrix& b) {
    check_finite(a, "kron");
    check_finite(b, "kron");
    constexpr Index kMaxSide = Index(1) << 24;
    if (a.rows() > kMaxSide / (b.rows() > 0 ? b.rows() : 1) ||
        a.cols() > kMaxSide / (b.cols() > 0 ? b.cols() : 1)) {
        throw ShapeError("kron: product dimensions overflow");
    }
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vector vec(const Matrix& m) {
    // column-major storage makes this a straight copy
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) {
        throw ShapeError("unvec: length " + std::to_string(v.size()) +
                         " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double frobenius_norm(const Matrix& m) {
    check_finite(m, "frobenius_norm");
    return m.norm();
}

double operator_norm(const Matrix& m) {
    Vector s = singular_values(m);
    return s.size() > 0 ? s(0) : 0.0;
}

double nuclear_norm(const Matrix& m) {
    return singular_values(m).sum();
}

double trace(const Matrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("trace: non-square input");
    check_finite(m, "trace");
    return m.trace();
}

Vector singular_values(const Matrix& m) {
    check_finite(m, "singular_values");
    const Index r = std::min(m.rows(), m.cols());
    if (r == 0) return Vector();
    Matrix a = m;
    Vector s(r);
    const lapack_int info = LAPACKE_dgesdd(
        LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(a.rows()),
        static_cast<lapack_int>(a.cols()), a.data(),
        static_cast<lapack_int>(a.rows()), s.data(), nullptr, 1, nullptr, 1);
    if (info != 0) {
        throw NumericalError("singular_values: dgesdd did not converge (info=" +
                             std::to_string(info) + ")");
    }
    return s;
}

Svd svd(const Matrix& m) {
    check_finite(m, "svd");
    const Index rows = m.rows(), cols = m.cols();
    const Index r = std::min(rows, cols);
    Svd out;
    if (r == 0) {
        out.u = Matrix(rows, 0);
        out.s = Vector();
        out.v = Matrix(cols, 0);
        return out;
    }
    Matrix a = m;
    out.s.resize(r);
    out.u.resize(rows, r);
    Matrix vt(r, cols);
    const lapack_int info = LAPACKE_dgesdd(
        LAPACK_COL_MAJOR, 'S', static_cast<lapack_int>(rows),
        static_cast<lapack_int>(cols), a.data(), static_cast<lapack_int>(rows),
        out.s.data(), out.u.data(), static_cast<lapack_int>(rows), vt.data(),
        static_cast<lapack_int>(r));
    if (info != 0) {
        // residual of the failed factorization is not recoverable from dgesdd;
        // report the failing superdiagonal count instead
        throw NumericalError("svd: dgesdd did not converge (info=" +
                             std::to_string(info) + ")");
    }
    out.v = vt.transpose();
    normalize_signs(out.u, out.v);
    return out;
}

EigenDecomposition symmetric_eigendecomposition(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ShapeError("symmetric_eigendecomposition: non-square input");
    }
    check_finite(m, "symmetric_eigendecomposition");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw ContractError("symmetric_eigendecomposition: input asymmetric by " +
                            std::to_string(asym));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric_eigendecomposition: solver failed");
    }
    const Index n = m.rows();
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        out.eigenvalues(j) = solver.eigenvalues()(n - 1 - j);
        out.eigenvectors.col(j) = solver.eigenvectors().col(n - 1 - j);
    }
    Matrix dummy(0, 0);
    normalize_signs(out.eigenvectors, dummy);
    return out;
}

Matrix soft_threshold_of(const Svd& dec, double lambda, Index* retained) {
    if (lambda < 0.0) throw ContractError("soft_threshold: negative lambda");
    Index keep = 0;
    while (keep < dec.s.size() && dec.s(keep) - lambda / 2.0 > 0.0) ++keep;
    if (retained) *retained = keep;
    if (keep == 0) return Matrix::Zero(dec.u.rows(), dec.v.rows());
    Vector shrunk = (dec.s.head(keep).array() - lambda / 2.0).matrix();
    return dec.u.leftCols(keep) * shrunk.asDiagonal() * dec.v.leftCols(keep).transpose();
}

Matrix hard_threshold_of(const Svd& dec, Index k) {
    if (k < 0 || k > dec.s.size()) {
        throw ContractError("hard_threshold: rank " + std::to_string(k) +
                            " out of range");
    }
    if (k == 0) return Matrix::Zero(dec.u.rows(), dec.v.rows());
    return dec.u.leftCols(k) * dec.s.head(k).asDiagonal() * dec.v.leftCols(k).transpose();
}

Matrix soft_threshold_svd(const Matrix& m, double lambda) {
    if (lambda < 0.0) throw ContractError("soft_threshold_svd: negative lambda");
    return soft_threshold_of(svd(m), lambda);
}

Matrix hard_threshold_svd(const Matrix& m, Index k) {
    if (k < 0 || k > std::min(m.rows(), m.cols())) {
        throw ContractError("hard_threshold_svd: rank out of range");
    }
    return hard_threshold_of(svd(m), k);
}

} // namespace kroncov
