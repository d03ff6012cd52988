#include "kroncov/model.hpp"

#include <cmath>
#include <string>

#include "kroncov/rng.hpp"

namespace kroncov {

namespace {

// symmetry + PSD check shared by validate() and effective_rank()
EigenDecomposition checked_psd_decomposition(const Matrix& m, const std::string& what) {
    const EigenDecomposition ed = symmetric_eigendecomposition(m);
    const double tr = m.trace();
    const double min_eig = ed.eigenvalues(ed.eigenvalues.size() - 1);
    if (min_eig < -1e-10 * std::max(tr, 1.0)) {
        throw ContractError(what + ": not PSD (min eigenvalue " +
                            std::to_string(min_eig) + ")");
    }
    return ed;
}

} // namespace

void KronSumCovariance::validate() const {
    shape.validate();
    if (factors.empty()) throw ContractError("KronSumCovariance: no factors");
    for (size_t j = 0; j < factors.size(); ++j) {
        const auto& f = factors[j];
        if (f.phi.rows() != shape.p || f.phi.cols() != shape.p ||
            f.psi.rows() != shape.q || f.psi.cols() != shape.q) {
            throw ShapeError("KronSumCovariance: factor " + std::to_string(j) +
                             " has wrong dimensions");
        }
        checked_psd_decomposition(f.phi, "phi[" + std::to_string(j) + "]");
        checked_psd_decomposition(f.psi, "psi[" + std::to_string(j) + "]");
    }
}

Matrix assemble_sigma(const KronSumCovariance& model) {
    model.validate();
    Matrix sigma = Matrix::Zero(model.shape.d(), model.shape.d());
    for (const auto& f : model.factors) sigma += kron(f.phi, f.psi);
    return sigma;
}

Matrix random_psd_factor(Index dim, double target_effective_rank, std::uint64_t seed) {
    if (dim < 1) throw ContractError("random_psd_factor: dim < 1");
    if (!(target_effective_rank >= 1.0 &&
          target_effective_rank <= static_cast<double>(dim))) {
        throw ContractError("random_psd_factor: target effective rank " +
                            std::to_string(target_effective_rank) +
                            " outside [1, " + std::to_string(dim) + "]");
    }
    if (dim == 1) return Matrix::Identity(1, 1);
    if (target_effective_rank == static_cast<double>(dim)) {
        return Matrix::Identity(dim, dim);
    }

    // geometric spectrum lambda_i = rho^i; sum_i rho^i == target pins rho
    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double rho = 0.5 * (lo + hi);
        double sum = 0.0, pw = 1.0;
        for (Index i = 0; i < dim; ++i) {
            sum += pw;
            pw *= rho;
        }
        (sum < target_effective_rank ? lo : hi) = rho;
    }
    const double rho = 0.5 * (lo + hi);
    Vector spectrum(dim);
    double pw = 1.0;
    for (Index i = 0; i < dim; ++i) {
        spectrum(i) = pw;
        pw *= rho;
    }

    SeededRng rng(mix64(seed, 0x70736466ULL));
    Matrix g(dim, dim);
    for (Index j = 0; j < dim; ++j)
        for (Index i = 0; i < dim; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix orth = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix r_factor = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < dim; ++j) {
        if (r_factor(j, j) < 0.0) orth.col(j) = -orth.col(j);
    }
    Matrix out = orth * spectrum.asDiagonal() * orth.transpose();
    return 0.5 * (out + out.transpose());
}

MatrixModel factorize_for_sampling(const KronSumCovariance& cov) {
    cov.validate();
    MatrixModel model;
    model.shape = cov.shape;
    auto psd_sqrt = [](const Matrix& f) {
        const EigenDecomposition ed = symmetric_eigendecomposition(f);
        const double lmax = ed.eigenvalues.size() > 0 ? ed.eigenvalues(0) : 0.0;
        Vector roots(ed.eigenvalues.size());
        for (Index i = 0; i < roots.size(); ++i) {
            const double lam = ed.eigenvalues(i);
            roots(i) = lam > 1e-12 * lmax ? std::sqrt(lam) : 0.0;
        }
        Matrix root = ed.eigenvectors * roots.asDiagonal() * ed.eigenvectors.transpose();
        return Matrix(0.5 * (root + root.transpose()));
    };
    for (const auto& f : cov.factors) {
        model.terms.push_back(FactorPair{psd_sqrt(f.phi), psd_sqrt(f.psi)});
    }
    return model;
}

SampleSet sample_matrix_model(const MatrixModel& model, Index n, std::uint64_t seed) {
    model.shape.validate();
    if (n < 1) throw ContractError("sample_matrix_model: n < 1");
    const Index p = model.shape.p, q = model.shape.q;
    SampleSet data{Matrix(p * q, n), seed};
    Matrix y(q, p);
    for (Index i = 0; i < n; ++i) {
        Matrix x = Matrix::Zero(q, p);
        for (size_t j = 0; j < model.terms.size(); ++j) {
            SeededRng rng(mix64(seed, 0x6d6f64656cULL, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(j)));
            for (Index c = 0; c < p; ++c)
                for (Index r = 0; r < q; ++r) y(r, c) = rng.normal();
            x.noalias() += model.terms[j].psi * y * model.terms[j].phi.transpose();
        }
        data.observations.col(i) = vec(x);
    }
    return data;
}

double effective_rank(const Matrix& m) {
    const EigenDecomposition ed = checked_psd_decomposition(m, "effective_rank");
    const double top = ed.eigenvalues(0);
    if (!(top > 0.0)) throw ContractError("effective_rank: zero matrix");
    return m.trace() / top;
}

BoundInputs bound_inputs_for(const KronSumCovariance& cov, double omega, Index n,
                             double delta) {
    cov.validate();
    BoundInputs inputs;
    inputs.omega = omega;
    inputs.n = n;
    inputs.delta = delta;
    inputs.max_phi_rank = 0.0;
    inputs.max_psi_rank = 0.0;
    inputs.op_norm_sum = 0.0;
    inputs.trace_sigma = 0.0;
    for (const auto& f : cov.factors) {
        const double phi_norm = symmetric_eigendecomposition(f.phi).eigenvalues(0);
        const double psi_norm = symmetric_eigendecomposition(f.psi).eigenvalues(0);
        inputs.max_phi_rank = std::max(inputs.max_phi_rank, f.phi.trace() / phi_norm);
        inputs.max_psi_rank = std::max(inputs.max_psi_rank, f.psi.trace() / psi_norm);
        inputs.op_norm_sum += phi_norm * psi_norm;
        inputs.trace_sigma += f.phi.trace() * f.psi.trace();
    }
    return inputs;
}

bool delta_condition_holds(const BoundInputs& inputs) {
    const double nn = static_cast<double>(inputs.n);
    const double lhs = (inputs.max_phi_rank * inputs.max_phi_rank +
                        inputs.max_psi_rank * inputs.max_psi_rank) /
                           (2.0 * nn) +
                       std::log(4.0 / inputs.delta) / nn;
    return lhs <= 1.0;
}

double lemma1_bound(const BoundInputs& inputs) {
    if (!delta_condition_holds(inputs)) {
        const double nn = static_cast<double>(inputs.n);
        const double lhs = (inputs.max_phi_rank * inputs.max_phi_rank +
                            inputs.max_psi_rank * inputs.max_psi_rank) /
                               (2.0 * nn) +
                           std::log(4.0 / inputs.delta) / nn;
        throw ContractError("lemma1_bound: delta condition violated (lhs = " +
                            std::to_string(lhs) + " > 1)");
    }
    const double nn = static_cast<double>(inputs.n);
    const double inner = 13.0 / (2.0 * nn) *
                             (inputs.max_phi_rank * inputs.max_phi_rank +
                              inputs.max_psi_rank * inputs.max_psi_rank) +
                         13.0 * std::log(4.0 / inputs.delta) / nn;
    return inputs.omega * inputs.op_norm_sum * std::sqrt(inner);
}

double theorem1_lambda(const BoundInputs& inputs) {
    return 2.0 * lemma1_bound(inputs);
}

double theorem1_error_bound(double lambda, Index k_rank) {
    if (lambda < 0.0) throw ContractError("theorem1_error_bound: negative lambda");
    if (k_rank < 1) throw ContractError("theorem1_error_bound: k_rank < 1");
    return 1.5 * lambda * lambda * static_cast<double>(k_rank);
}

double baseline_bound_rate(double trace_sigma, Index n, double delta) {
    if (n < 1) throw ContractError("baseline_bound_rate: n < 1");
    if (!(delta > 0.0 && delta < 1.0)) {
        throw ContractError("baseline_bound_rate: delta outside (0,1)");
    }
    const double ratio = std::log(2.0 / delta) / static_cast<double>(n);
    return trace_sigma * std::max(std::sqrt(ratio), ratio);
}

} // namespace kroncov
