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

#include <Eigen/Dense>

#include <duofm/errors.hpp>

namespace duofm {

/// Real functional map. Direction convention: C consumes target-shape (N)
/// coefficients and produces source-shape (M) coefficients, C = A_M pinv(A_N),
/// so C is k_M x k_N.
struct FunctionalMap {
    Eigen::MatrixXd C;
    double lambda = 0.0;
    bool rank_warning = false;

    Eigen::Index rows() const noexcept { return C.rows(); }
    Eigen::Index cols() const noexcept { return C.cols(); }
};

struct FmapOptions {
    double lambda = 1e-3;
    bool use_normalized_spectra = true;
};

struct LossValue {
    double value = 0.0;
    Eigen::MatrixXd gradient;
};

namespace detail {

inline Eigen::MatrixXd pinv_truncated(const Eigen::MatrixXd& m, double rel_tol, bool* deficient) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? rel_tol * sv[0] : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cutoff && sv[i] > 0.0) {
            inv[i] = 1.0 / sv[i];
            ++rank;
        }
    }
    if (deficient) *deficient = rank < std::min(m.rows(), m.cols());
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

} // namespace detail

/// Plain least-squares estimate C = A_M pinv(A_N); singular values below
/// 1e-10 * sigma_max are truncated. Underdetermined systems (d < k) set the
/// rank warning instead of failing.
inline FunctionalMap estimate_C_plain(const Eigen::MatrixXd& coeffs_m,
                                      const Eigen::MatrixXd& coeffs_n) {
    if (coeffs_m.cols() != coeffs_n.cols())
        throw DimensionError("estimate_C_plain: descriptor dimensions differ");
    FunctionalMap map;
    bool deficient = false;
    map.C = coeffs_m * detail::pinv_truncated(coeffs_n, 1e-10, &deficient);
    map.rank_warning = deficient || coeffs_n.cols() < coeffs_n.rows();
    return map;
}

/// Laplacian-commutativity regularized estimate. The penalty
/// ||C diag(l_N) - diag(l_M) C||^2 decouples per entry, so each row i solves
/// (A_N A_N^T + lambda D_i) c_i = A_N a_i with D_i = diag((l_N,j - l_M,i)^2).
inline FunctionalMap estimate_C_regularized(const Eigen::MatrixXd& coeffs_m,
                                            const Eigen::MatrixXd& coeffs_n,
                                            const Eigen::VectorXd& spectrum_m,
                                            const Eigen::VectorXd& spectrum_n,
                                            const FmapOptions& opts = {}) {
    if (coeffs_m.cols() != coeffs_n.cols())
        throw DimensionError("estimate_C_regularized: descriptor dimensions differ");
    if (spectrum_m.size() != coeffs_m.rows() || spectrum_n.size() != coeffs_n.rows())
        throw DimensionError("estimate_C_regularized: spectra do not match coefficients");
    const Eigen::Index k_m = coeffs_m.rows();
    const Eigen::Index k_n = coeffs_n.rows();

    FunctionalMap map;
    map.lambda = opts.lambda;
    map.C.resize(k_m, k_n);
    map.rank_warning = coeffs_n.cols() < k_n;

    const Eigen::MatrixXd gram = coeffs_n * coeffs_n.transpose();
    for (Eigen::Index i = 0; i < k_m; ++i) {
        Eigen::MatrixXd system = gram;
        for (Eigen::Index j = 0; j < k_n; ++j) {
            const double diff = spectrum_n[j] - spectrum_m[i];
            system(j, j) += opts.lambda * diff * diff;
        }
        const Eigen::VectorXd rhs = coeffs_n * coeffs_m.row(i).transpose();
        Eigen::LDLT<Eigen::MatrixXd> solver(system);
        if (solver.info() != Eigen::Success)
            throw SolveError("estimate_C_regularized: row " + std::to_string(i) +
                             " system is singular");
        const Eigen::VectorXd row = solver.solve(rhs);
        if (!row.allFinite())
            throw SolveError("estimate_C_regularized: row " + std::to_string(i) +
                             " produced non-finite values");
        map.C.row(i) = row.transpose();
    }
    return map;
}

/// Orthogonality energy ||C^T C - I||_F^2 with gradient 4 C (C^T C - I).
inline LossValue loss_ortho_C(const Eigen::MatrixXd& C) {
    if (C.rows() != C.cols()) throw DimensionError("loss_ortho_C: C must be square");
    const Eigen::MatrixXd residual =
        C.transpose() * C - Eigen::MatrixXd::Identity(C.cols(), C.cols());
    LossValue loss;
    loss.value = residual.squaredNorm();
    loss.gradient = 4.0 * C * residual;
    return loss;
}

/// Commutativity energy sum_ij (l_N,j - l_M,i)^2 C_ij^2 with entrywise
/// gradient 2 (l_N,j - l_M,i)^2 C_ij.
inline LossValue loss_iso_C(const Eigen::MatrixXd& C, const Eigen::VectorXd& spectrum_m,
                            const Eigen::VectorXd& spectrum_n) {
    if (spectrum_m.size() != C.rows() || spectrum_n.size() != C.cols())
        throw DimensionError("loss_iso_C: spectra do not match C");
    LossValue loss;
    loss.gradient.resize(C.rows(), C.cols());
    loss.value = 0.0;
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
        for (Eigen::Index j = 0; j < C.cols(); ++j) {
            const double diff = spectrum_n[j] - spectrum_m[i];
            loss.value += diff * diff * C(i, j) * C(i, j);
            loss.gradient(i, j) = 2.0 * diff * diff * C(i, j);
        }
    }
    return loss;
}

} // namespace duofm
