#include "kroncov/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kroncov/rng.hpp"

namespace kroncov {

std::string method_name(Method m) {
    switch (m) {
        case Method::Sample: return "sample";
        case Method::PlsSoft: return "pls_soft";
        case Method::PcaHard: return "pca_hard";
        case Method::RankOne: return "rank_one";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "sample") return Method::Sample;
    if (name == "pls_soft" || name == "pls") return Method::PlsSoft;
    if (name == "pca_hard" || name == "hard") return Method::PcaHard;
    if (name == "rank_one") return Method::RankOne;
    throw ContractError("unknown estimator: " + name);
}

namespace {

void check_data(const SampleSet& data, const BlockShape& shape, const char* what) {
    shape.validate();
    if (data.n() < 1) throw ContractError(std::string(what) + ": empty sample");
    if (data.d() != shape.d()) {
        throw ShapeError(std::string(what) + ": data dimension " +
                         std::to_string(data.d()) + " != p*q = " +
                         std::to_string(shape.d()));
    }
    check_finite(data.observations, what);
}

double symmetry_residual_of(const Matrix& m) {
    return (m - m.transpose()).norm() / std::max(1.0, m.norm());
}

} // namespace

Matrix sample_covariance(const SampleSet& data) {
    if (data.n() < 1) throw ContractError("sample_covariance: empty sample");
    check_finite(data.observations, "sample_covariance");
    const Index d = data.d();
    Matrix cov = Matrix::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(data.observations,
                                                   1.0 / static_cast<double>(data.n()));
    cov.triangularView<Eigen::StrictlyUpper>() =
        cov.transpose().triangularView<Eigen::StrictlyUpper>();
    return cov;
}

EstimateReport pls_estimate(const SampleSet& data, const BlockShape& shape,
                            double lambda) {
    check_data(data, shape, "pls_estimate");
    if (lambda < 0.0) throw ContractError("pls_estimate: negative lambda");
    const Matrix cov = sample_covariance(data);
    const Svd dec = rearranged_svd(cov, shape);
    Index retained = 0;
    EstimateReport report;
    if (lambda == 0.0) {
        // zero penalty is the identity map; keep the sample covariance bit-exact
        report.estimate = cov;
        while (retained < dec.s.size() && dec.s(retained) > 0.0) ++retained;
    } else {
        report.estimate = rearrange_inverse(soft_threshold_of(dec, lambda, &retained), shape);
    }
    report.method = Method::PlsSoft;
    report.lambda_used = lambda;
    report.singular_values = dec.s;
    report.retained_rank = retained;
    report.symmetry_residual = symmetry_residual_of(report.estimate);
    report.n = data.n();
    return report;
}

EstimateReport hard_threshold_estimate(const SampleSet& data, const BlockShape& shape,
                                       Index k) {
    check_data(data, shape, "hard_threshold_estimate");
    const Index max_k = std::min(shape.p * shape.p, shape.q * shape.q);
    if (k < 1 || k > max_k) {
        throw ContractError("hard_threshold_estimate: k = " + std::to_string(k) +
                            " out of [1, " + std::to_string(max_k) + "]");
    }
    const Matrix cov = sample_covariance(data);
    const Svd dec = rearranged_svd(cov, shape);
    EstimateReport report;
    report.estimate = rearrange_inverse(hard_threshold_of(dec, k), shape);
    report.method = Method::PcaHard;
    report.singular_values = dec.s;
    report.retained_rank = k;
    report.symmetry_residual = symmetry_residual_of(report.estimate);
    report.n = data.n();
    return report;
}

EstimateReport sample_estimate(const SampleSet& data, const BlockShape& shape) {
    check_data(data, shape, "sample_estimate");
    EstimateReport report;
    report.estimate = sample_covariance(data);
    report.method = Method::Sample;
    report.singular_values = singular_values(rearrange(report.estimate, shape));
    report.retained_rank = report.singular_values.size();
    report.symmetry_residual = symmetry_residual_of(report.estimate);
    report.n = data.n();
    return report;
}

EstimateReport rank_one_estimate(const SampleSet& data, const BlockShape& shape) {
    check_data(data, shape, "rank_one_estimate");
    const Index p = shape.p, q = shape.q, n = data.n();
    Matrix phi = Matrix::Zero(p, p);
    Matrix psi = Matrix::Zero(q, q);
    double normalizer = 0.0;
    for (Index i = 0; i < n; ++i) {
        const Matrix xi = unvec(data.observations.col(i), q, p);
        phi.noalias() += xi.transpose() * xi;
        psi.noalias() += xi * xi.transpose();
        normalizer += data.observations.col(i).squaredNorm();
    }
    phi /= static_cast<double>(n);
    psi /= static_cast<double>(n);
    normalizer /= static_cast<double>(n);
    if (normalizer <= 0.0) {
        throw ContractError("rank_one_estimate: all-zero data (degenerate normalizer)");
    }
    EstimateReport report;
    report.estimate = kron(phi, psi) / normalizer;
    report.method = Method::RankOne;
    report.singular_values =
        singular_values(rearrange(sample_covariance(data), shape));
    report.retained_rank = 1;
    report.symmetry_residual = symmetry_residual_of(report.estimate);
    report.n = n;
    return report;
}

LambdaSelection select_lambda(const SampleSet& data, const BlockShape& shape,
                              const std::vector<double>& grid, double split_fraction,
                              int repetitions, std::uint64_t seed) {
    check_data(data, shape, "select_lambda");
    if (grid.empty()) throw ContractError("select_lambda: empty grid");
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw ContractError("select_lambda: non-positive lambda");
        if (i > 0 && grid[i] > grid[i - 1]) {
            throw ContractError("select_lambda: grid must be sorted descending");
        }
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw ContractError("select_lambda: split_fraction must be in (0,1)");
    }
    if (repetitions < 1) throw ContractError("select_lambda: repetitions < 1");
    const Index n = data.n();
    if (n < 2) throw ContractError("select_lambda: need at least two observations");

    const Index n_fit = std::clamp<Index>(
        static_cast<Index>(std::lround(split_fraction * static_cast<double>(n))),
        Index(1), n - 1);

    std::vector<double> scores(grid.size(), 0.0);
    std::vector<Index> perm(static_cast<size_t>(n));
    for (int rep = 0; rep < repetitions; ++rep) {
        SeededRng rng(mix64(seed, 0x73706c6974ULL, static_cast<std::uint64_t>(rep)));
        std::iota(perm.begin(), perm.end(), Index(0));
        for (Index i = n - 1; i > 0; --i) {
            const Index j = static_cast<Index>(
                rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
        }
        SampleSet fit{Matrix(data.d(), n_fit), data.seed};
        SampleSet val{Matrix(data.d(), n - n_fit), data.seed};
        for (Index i = 0; i < n_fit; ++i)
            fit.observations.col(i) = data.observations.col(perm[static_cast<size_t>(i)]);
        for (Index i = n_fit; i < n; ++i)
            val.observations.col(i - n_fit) =
                data.observations.col(perm[static_cast<size_t>(i)]);

        const Svd dec = rearranged_svd(sample_covariance(fit), shape);
        const Matrix r_val = rearrange(sample_covariance(val), shape);
        for (size_t g = 0; g < grid.size(); ++g) {
            scores[g] += (soft_threshold_of(dec, grid[g]) - r_val).squaredNorm();
        }
    }
    for (double& s : scores) s /= static_cast<double>(repetitions);

    // grid is descending, so the first strict minimum breaks ties upward
    size_t best = 0;
    for (size_t g = 1; g < grid.size(); ++g) {
        if (scores[g] < scores[best]) best = g;
    }
    return LambdaSelection{grid[best], scores};
}

ExtractedFactors extract_factors(const EstimateReport& report, const BlockShape& shape,
                                 Index k, bool project_psd) {
    shape.validate();
    if (k < 0 || k > report.retained_rank) {
        throw ContractError("extract_factors: k exceeds retained rank " +
                            std::to_string(report.retained_rank));
    }
    const Svd dec = rearranged_svd(report.estimate, shape);
    ExtractedFactors out;
    Matrix recon = Matrix::Zero(report.estimate.rows(), report.estimate.cols());
    for (Index j = 0; j < k; ++j) {
        const double scale = std::sqrt(std::max(dec.s(j), 0.0));
        Matrix phi = unvec(scale * dec.u.col(j), shape.p, shape.p);
        Matrix psi = unvec(scale * dec.v.col(j), shape.q, shape.q);
        phi = 0.5 * (phi + phi.transpose()).eval();
        psi = 0.5 * (psi + psi.transpose()).eval();
        if (phi.trace() < 0.0) {
            phi = -phi;
            psi = -psi;
        }
        if (project_psd) {
            for (Matrix* f : {&phi, &psi}) {
                const EigenDecomposition ed = symmetric_eigendecomposition(*f);
                const Vector clipped = ed.eigenvalues.cwiseMax(0.0);
                *f = ed.eigenvectors * clipped.asDiagonal() * ed.eigenvectors.transpose();
            }
        }
        recon += kron(phi, psi);
        out.factors.push_back(FactorPair{std::move(phi), std::move(psi)});
    }
    out.reconstruction_residual = (recon - report.estimate).norm();
    return out;
}

} // namespace kroncov
