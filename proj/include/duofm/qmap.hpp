// Copyright 2026 The duofm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <duofm/descriptors.hpp>
#include <duofm/fmap.hpp>
#include <duofm/operators.hpp>
#include <duofm/spectral.hpp>

namespace duofm {

/// Complex functional map for tangent fields. Direction convention is the
/// opposite of the real map: Q consumes source-shape (M) coefficients and
/// produces target-shape (N) coefficients, Q B_M ~ B_N, so Q is k_N x k_M.
struct ComplexFunctionalMap {
    Eigen::MatrixXcd Q;
    double lambda = 0.0;
    bool rank_warning = false;
};

struct ComplexLossValue {
    double value = 0.0;
    // Wirtinger co-gradient dL/d(conj Q): descent steps follow its negative,
    // and finite differences satisfy dL/dRe = 2 Re(g), dL/dIm = 2 Im(g).
    Eigen::MatrixXcd gradient;
};

/// Spectral coefficients of descriptor gradients: B = Psi^H M (G D).
inline Eigen::MatrixXcd complex_spectral_coeffs(const ComplexSpectralBasis& basis,
                                                const SparseMatrixcd& grad,
                                                const DescriptorSet& descriptors) {
    if (descriptors.values.rows() != basis.num_vertices() || grad.rows() != basis.num_vertices())
        throw DimensionError("complex_spectral_coeffs: dimension chain mismatch");
    const Eigen::MatrixXcd fields = grad * descriptors.values.cast<Complex>();
    return project_complex(basis, fields);
}

namespace detail {

inline Eigen::MatrixXcd pinv_truncated_cd(const Eigen::MatrixXcd& m, double rel_tol,
                                          bool* deficient) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? rel_tol * sv[0] : 0.0;
    Eigen::VectorXcd inv = Eigen::VectorXcd::Zero(sv.size());
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cutoff && sv[i] > 0.0) {
            inv[i] = Complex(1.0 / sv[i], 0.0);
            ++rank;
        }
    }
    if (deficient) *deficient = rank < std::min(m.rows(), m.cols());
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

} // namespace detail

/// Plain complex least squares Q = B_N pinv(B_M).
inline ComplexFunctionalMap estimate_Q_plain(const Eigen::MatrixXcd& coeffs_m,
                                             const Eigen::MatrixXcd& coeffs_n) {
    if (coeffs_m.cols() != coeffs_n.cols())
        throw DimensionError("estimate_Q_plain: descriptor dimensions differ");
    ComplexFunctionalMap map;
    bool deficient = false;
    map.Q = coeffs_n * detail::pinv_truncated_cd(coeffs_m, 1e-10, &deficient);
    map.rank_warning = deficient || coeffs_m.cols() < coeffs_m.rows();
    return map;
}

/// Regularized complex estimate: row i solves the Hermitian system
/// (B_M B_M^H + lambda diag((m_M,j - m_N,i)^2)) x = B_M b_i^H, q_i = x^H.
inline ComplexFunctionalMap estimate_Q_regularized(const Eigen::MatrixXcd& coeffs_m,
                                                   const Eigen::MatrixXcd& coeffs_n,
                                                   const Eigen::VectorXd& spectrum_m,
                                                   const Eigen::VectorXd& spectrum_n,
                                                   double lambda) {
    if (coeffs_m.cols() != coeffs_n.cols())
        throw DimensionError("estimate_Q_regularized: descriptor dimensions differ");
    if (spectrum_m.size() != coeffs_m.rows() || spectrum_n.size() != coeffs_n.rows())
        throw DimensionError("estimate_Q_regularized: spectra do not match coefficients");
    const Eigen::Index k_m = coeffs_m.rows();
    const Eigen::Index k_n = coeffs_n.rows();

    ComplexFunctionalMap map;
    map.lambda = lambda;
    map.Q.resize(k_n, k_m);
    map.rank_warning = coeffs_m.cols() < k_m;

    const Eigen::MatrixXcd gram = coeffs_m * coeffs_m.adjoint();
    for (Eigen::Index i = 0; i < k_n; ++i) {
        Eigen::MatrixXcd system = gram;
        for (Eigen::Index j = 0; j < k_m; ++j) {
            const double diff = spectrum_m[j] - spectrum_n[i];
            system(j, j) += Complex(lambda * diff * diff, 0.0);
        }
        const Eigen::VectorXcd rhs = coeffs_m * coeffs_n.row(i).adjoint();
        Eigen::LDLT<Eigen::MatrixXcd> solver(system);
        if (solver.info() != Eigen::Success)
            throw SolveError("estimate_Q_regularized: row " + std::to_string(i) +
                             " system is singular");
        const Eigen::VectorXcd x = solver.solve(rhs);
        if (!x.allFinite())
            throw SolveError("estimate_Q_regularized: row " + std::to_string(i) +
                             " produced non-finite values");
        map.Q.row(i) = x.adjoint();
    }
    return map;
}

/// Complex orthogonality energy ||Q^H Q - I||_F^2, co-gradient 2 Q (Q^H Q - I).
inline ComplexLossValue loss_ortho_Q(const Eigen::MatrixXcd& Q) {
    if (Q.rows() != Q.cols()) throw DimensionError("loss_ortho_Q: Q must be square");
    const Eigen::MatrixXcd residual =
        Q.adjoint() * Q - Eigen::MatrixXcd::Identity(Q.cols(), Q.cols());
    ComplexLossValue loss;
    loss.value = residual.squaredNorm();
    loss.gradient = 2.0 * Q * residual;
    return loss;
}

/// Connection-Laplacian commutativity energy sum (m_M,j - m_N,i)^2 |Q_ij|^2,
/// co-gradient entrywise (m_M,j - m_N,i)^2 Q_ij.
inline ComplexLossValue loss_iso_Q(const Eigen::MatrixXcd& Q, const Eigen::VectorXd& spectrum_m,
                                   const Eigen::VectorXd& spectrum_n) {
    if (spectrum_n.size() != Q.rows() || spectrum_m.size() != Q.cols())
        throw DimensionError("loss_iso_Q: spectra do not match Q");
    ComplexLossValue loss;
    loss.gradient.resize(Q.rows(), Q.cols());
    loss.value = 0.0;
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        for (Eigen::Index j = 0; j < Q.cols(); ++j) {
            const double diff = spectrum_m[j] - spectrum_n[i];
            loss.value += diff * diff * std::norm(Q(i, j));
            loss.gradient(i, j) = diff * diff * Q(i, j);
        }
    }
    return loss;
}

/// Discrete check of the pushforward identity: for probe pairs (f on N, X on
/// M), compares the integrated pairings <X, grad(C f)>_M and <Q X, grad f>_N.
/// Residuals are normalized by the product of the factor norms on each side.
struct PushforwardReport {
    Eigen::VectorXd residuals; // one per probe pair
    double max_residual = 0.0;
    double mean_residual = 0.0;
    double q_ortho = 0.0; // orientation certificate: L_Q-ortho of Q
};

inline PushforwardReport verify_pushforward_relation(
    const FunctionalMap& C, const ComplexFunctionalMap& Q, const RealSpectralBasis& basis_m,
    const RealSpectralBasis& basis_n, const ComplexSpectralBasis& cx_basis_m,
    const ComplexSpectralBasis& cx_basis_n, const SparseMatrixcd& grad_m,
    const SparseMatrixcd& grad_n, const Eigen::MatrixXd& probe_funcs_n,
    const Eigen::MatrixXcd& probe_fields_m) {
    if (probe_funcs_n.cols() != probe_fields_m.cols())
        throw DimensionError("verify_pushforward_relation: probe counts differ");
    if (probe_funcs_n.rows() != basis_n.num_vertices() ||
        probe_fields_m.rows() != basis_m.num_vertices())
        throw DimensionError("verify_pushforward_relation: probe sizes do not match shapes");

    const Eigen::Index m = probe_funcs_n.cols();
    const Eigen::VectorXd& mass_m = basis_m.mass;
    const Eigen::VectorXd& mass_n = basis_n.mass;

    // Pull functions back through C, push fields forward through Q.
    const Eigen::MatrixXd coeffs_f = project_real(basis_n, probe_funcs_n);
    const Eigen::MatrixXd pulled = unproject_real(basis_m, C.C * coeffs_f); // on M
    const Eigen::MatrixXcd coeffs_x = project_complex(cx_basis_m, probe_fields_m);
    const Eigen::MatrixXcd pushed = unproject_complex(cx_basis_n, Q.Q * coeffs_x); // on N

    const Eigen::MatrixXcd grad_pulled = grad_m * pulled.cast<Complex>();
    const Eigen::MatrixXcd grad_f = grad_n * probe_funcs_n.cast<Complex>();

    auto pair_m = [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
        return (a.conjugate().array() * mass_m.array().cast<Complex>() * b.array()).sum().real();
    };
    auto pair_n = [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
        return (a.conjugate().array() * mass_n.array().cast<Complex>() * b.array()).sum().real();
    };
    auto norm_m = [&](const Eigen::VectorXcd& a) { return std::sqrt(pair_m(a, a)); };
    auto norm_n = [&](const Eigen::VectorXcd& a) { return std::sqrt(pair_n(a, a)); };

    PushforwardReport report;
    report.residuals.resize(m);
    for (Eigen::Index p = 0; p < m; ++p) {
        const double lhs = pair_m(probe_fields_m.col(p), grad_pulled.col(p));
        const double rhs = pair_n(pushed.col(p), grad_f.col(p));
        const double scale_l = norm_m(probe_fields_m.col(p)) * norm_m(grad_pulled.col(p));
        const double scale_r = norm_n(pushed.col(p)) * norm_n(grad_f.col(p));
        const double denom = std::max({scale_l, scale_r, 1e-300});
        report.residuals[p] = std::abs(lhs - rhs) / denom;
    }
    report.max_residual = report.residuals.maxCoeff();
    report.mean_residual = report.residuals.mean();
    report.q_ortho = loss_ortho_Q(Q.Q).value;
    return report;
}

} // namespace duofm
