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

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <duofm/errors.hpp>
#include <duofm/operators.hpp>

namespace duofm {

struct EigenOptions {
    double shift = -1e-8;         // fixed shift for the shift-invert transform
    int max_iteration_factor = 50; // Lanczos step budget = factor * k
    double residual_tol = 1e-9;    // relative residual for Ritz acceptance
};

namespace detail {

template <typename Scalar>
struct LanczosPairs {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
    Eigen::VectorXd values;
};

template <typename Scalar>
double real_part(const Scalar& z) {
    if constexpr (std::is_same_v<Scalar, double>) return z;
    else return z.real();
}

/// Smallest-k generalized eigenpairs of (A, diag(mass)) for symmetric or
/// Hermitian PSD A, via shift-invert Lanczos with full reorthogonalization
/// and lock-and-restart deflation. Deterministic: the first block starts from
/// the all-ones vector, later blocks from a fixed-seed generic stream.
///
/// Locking alone is not enough for completeness: the all-ones start can span
/// an invariant subspace (symmetric meshes), hiding eigenpairs from the first
/// block entirely. Termination therefore requires a generic block to converge
/// its frontier past the k-th locked eigenvalue: generic blocks surface the
/// remaining spectrum in ascending order, so a frontier beyond lambda_k
/// certifies that nothing below it was missed.
template <typename Scalar>
LanczosPairs<Scalar> shift_invert_lanczos(const Eigen::SparseMatrix<Scalar>& A,
                                          const Eigen::VectorXd& mass, int k,
                                          const EigenOptions& opts) {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    const Eigen::Index n = A.rows();
    if (k <= 0 || k >= n) throw DimensionError("eigensolve requires 0 < k < n");
    if (mass.size() != n) throw DimensionError("mass size does not match operator");
    if ((mass.array() <= 0.0).any()) throw NumericalError("mass matrix must be positive");

    Eigen::SparseMatrix<Scalar> shifted = A;
    for (Eigen::Index i = 0; i < n; ++i)
        shifted.coeffRef(i, i) -= Scalar(opts.shift * mass[i]);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> factor(shifted);
    if (factor.info() != Eigen::Success)
        throw FactorizationError("shifted operator factorization failed");

    auto dot_m = [&](const Vector& u, const Vector& v) -> Scalar {
        if constexpr (std::is_same_v<Scalar, double>) return (u.array() * mass.array() * v.array()).sum();
        else return (u.conjugate().array() * mass.array() * v.array()).sum();
    };
    auto norm_m = [&](const Vector& v) { return std::sqrt(std::abs(real_part(dot_m(v, v)))); };

    // Row-sum estimate of the operator scale, for relative residuals.
    double op_scale = 0.0;
    {
        Eigen::VectorXd abs_row = Eigen::VectorXd::Zero(n);
        for (int outer = 0; outer < A.outerSize(); ++outer)
            for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, outer); it; ++it)
                abs_row[it.row()] += std::abs(it.value());
        op_scale = abs_row.maxCoeff();
    }
    const double mass_scale = mass.maxCoeff();

    std::vector<Vector> locked;          // accepted eigenvectors, M-orthonormal
    std::vector<double> locked_values;   // matching eigenvalues, ascending order kept by sort
    std::vector<Vector> basis;           // current block's Lanczos vectors
    std::vector<double> alpha, beta;

    std::mt19937_64 restart_rng(0x5eedUL);
    auto orthogonalize = [&](Vector& w) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : locked) w -= q * dot_m(q, w);
            for (const auto& q : basis) w -= q * dot_m(q, w);
        }
    };
    auto generic_vector = [&]() -> Vector {
        for (int attempt = 0; attempt < 4; ++attempt) {
            if (static_cast<Eigen::Index>(locked.size() + basis.size()) >= n) break;
            Vector w(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double re =
                    2.0 * (static_cast<double>(restart_rng() >> 11) * 0x1.0p-53) - 1.0;
                if constexpr (std::is_same_v<Scalar, double>) {
                    w[i] = re;
                } else {
                    const double im =
                        2.0 * (static_cast<double>(restart_rng() >> 11) * 0x1.0p-53) - 1.0;
                    w[i] = Scalar(re, im);
                }
            }
            orthogonalize(w);
            const double nw = norm_m(w);
            if (nw > 1e-10) return w / Scalar(nw);
        }
        return Vector(); // locked + basis span the whole space
    };

    auto residual_ok = [&](const Vector& x, double lam) {
        Vector mx = x;
        for (Eigen::Index row = 0; row < n; ++row) mx[row] *= Scalar(mass[row]);
        const Vector r = A * x - Scalar(lam) * mx;
        const double denom = (op_scale + std::abs(lam) * mass_scale) * x.norm();
        return r.norm() <= opts.residual_tol * denom;
    };

    // Extracts the current block's verified Ritz prefix (descending nu =
    // ascending lambda) into the locked set. Returns how many pairs locked.
    auto lock_verified_prefix = [&]() -> int {
        const int dim = static_cast<int>(alpha.size());
        if (dim == 0) return 0;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) T(i, i) = alpha[static_cast<std::size_t>(i)];
        for (int i = 0; i + 1 < dim; ++i)
            T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        if (es.info() != Eigen::Success) return 0;
        const Eigen::VectorXd& nu = es.eigenvalues(); // ascending
        const Eigen::MatrixXd& S = es.eigenvectors();

        int locked_now = 0;
        for (int i = 0; i < dim; ++i) {
            const int col = dim - 1 - i; // largest nu first
            if (!(nu[col] > 0.0)) break;
            const double lam = opts.shift + 1.0 / nu[col];
            Vector x = Vector::Zero(n);
            for (int j = 0; j < dim; ++j)
                x += basis[static_cast<std::size_t>(j)] * Scalar(S(j, col));
            const double nx = norm_m(x);
            if (!(nx > 0.0)) break;
            x /= Scalar(nx);
            if (!residual_ok(x, lam)) break; // prefix ends at the first unconverged pair
            locked.push_back(std::move(x));
            locked_values.push_back(lam);
            ++locked_now;
        }
        return locked_now;
    };

    auto kth_locked_value = [&]() {
        std::vector<double> sorted = locked_values;
        std::sort(sorted.begin(), sorted.end());
        return sorted[static_cast<std::size_t>(k - 1)];
    };

    const long max_total_steps = static_cast<long>(opts.max_iteration_factor) * k;
    long total_steps = 0;
    bool block_is_generic = false;
    bool exhausted = false;

    // First block starts from the deterministic all-ones vector.
    {
        Vector v0 = Vector::Ones(n);
        v0 /= Scalar(norm_m(v0));
        basis.push_back(std::move(v0));
    }

    while (!exhausted && total_steps < max_total_steps) {
        bool block_done = false;
        int locked_this_block = 0;
        double block_frontier = 0.0; // first (smallest) eigenvalue locked by this block
        while (!block_done && total_steps < max_total_steps) {
            const Vector& q = basis.back();
            Vector mq = q;
            for (Eigen::Index row = 0; row < n; ++row) mq[row] *= Scalar(mass[row]);
            Vector w = factor.solve(mq);
            ++total_steps;

            const double solve_scale = norm_m(w);
            const double a = real_part(dot_m(q, w));
            alpha.push_back(a);
            w -= q * Scalar(a);
            if (basis.size() >= 2 && !beta.empty())
                w -= basis[basis.size() - 2] * Scalar(beta.back());
            orthogonalize(w);

            const double b = norm_m(w);
            const bool breakdown = b < 1e-13 * std::max(solve_scale, 1e-300);
            if (!breakdown) {
                beta.push_back(b);
                basis.push_back(w / Scalar(b));
            }

            const bool checkpoint = breakdown || (alpha.size() % 5 == 0);
            if (checkpoint) {
                const int locked_now = lock_verified_prefix();
                if (locked_now > 0 && locked_this_block == 0)
                    block_frontier = locked_values[locked_values.size() -
                                                   static_cast<std::size_t>(locked_now)];
                locked_this_block += locked_now;
            }
            if (locked_this_block > 0 || breakdown) block_done = true;
        }

        const bool enough = static_cast<int>(locked.size()) >= k;
        // Completeness certificate: a generic block's FIRST lock is the
        // smallest remaining eigenvalue (one Krylov block sees each eigenspace
        // once, ordered), so a generic frontier at or beyond lambda_k proves
        // nothing smaller was skipped. The batch's deeper locks say nothing.
        if (enough && block_is_generic && locked_this_block > 0 &&
            block_frontier >= kth_locked_value() * (1.0 - 1e-9) - 1e-13)
            break;

        alpha.clear();
        beta.clear();
        basis.clear();
        Vector fresh = generic_vector();
        if (fresh.size() == 0) {
            exhausted = true; // nothing left to search
        } else {
            basis.push_back(std::move(fresh));
            block_is_generic = true;
        }
    }

    if (static_cast<int>(locked.size()) < k)
        throw ConvergenceError("eigensolver locked only " + std::to_string(locked.size()) +
                               " of " + std::to_string(k) + " pairs within " +
                               std::to_string(max_total_steps) + " iterations");

    // k smallest eigenvalues, ascending; ties keep locking order.
    std::vector<int> order(locked.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return locked_values[static_cast<std::size_t>(a)] <
               locked_values[static_cast<std::size_t>(b)];
    });
    LanczosPairs<Scalar> out;
    out.vectors.resize(n, k);
    out.values.resize(k);
    for (int i = 0; i < k; ++i) {
        out.vectors.col(i) = locked[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        out.values[i] = locked_values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    return out;
}

inline void fix_sign_gauge(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = std::abs(vectors(0, c));
        for (Eigen::Index r = 1; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > best_abs) { // strict: ties keep the lowest index
                best_abs = a;
                best = r;
            }
        }
        if (vectors(best, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

inline void fix_phase_gauge(Eigen::MatrixXcd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = std::abs(vectors(0, c));
        for (Eigen::Index r = 1; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (best_abs > 0.0) vectors.col(c) *= std::conj(vectors(best, c)) / best_abs;
    }
}

inline Eigen::VectorXd normalized_spectrum(const Eigen::VectorXd& values) {
    const double top = values[values.size() - 1];
    if (!(top > 0.0)) return Eigen::VectorXd::Zero(values.size());
    return values / top;
}

} // namespace detail

/// Truncated generalized eigenbasis of the Laplace-Beltrami pair (W, M).
/// Columns of phi are M-orthonormal; lambda ascending; lambda_hat = lambda
/// normalized by the top retained eigenvalue (used by the commutativity
/// regularizers so weights transfer across mesh scales).
struct RealSpectralBasis {
    Eigen::MatrixXd phi;
    Eigen::VectorXd lambda;
    Eigen::VectorXd lambda_hat;
    Eigen::VectorXd mass;

    Eigen::Index size() const noexcept { return lambda.size(); }
    Eigen::Index num_vertices() const noexcept { return phi.rows(); }
};

struct ComplexSpectralBasis {
    Eigen::MatrixXcd psi;
    Eigen::VectorXd mu;
    Eigen::VectorXd mu_hat;
    Eigen::VectorXd mass;

    Eigen::Index size() const noexcept { return mu.size(); }
    Eigen::Index num_vertices() const noexcept { return psi.rows(); }
};

inline RealSpectralBasis eigensolve_lb(const SparseMatrixd& stiffness,
                                       const Eigen::VectorXd& mass, int k,
                                       const EigenOptions& opts = {}) {
    auto pairs = detail::shift_invert_lanczos<double>(stiffness, mass, k, opts);
    detail::fix_sign_gauge(pairs.vectors);
    RealSpectralBasis basis;
    basis.phi = std::move(pairs.vectors);
    basis.lambda = std::move(pairs.values);
    basis.lambda_hat = detail::normalized_spectrum(basis.lambda);
    basis.mass = mass;
    return basis;
}

inline ComplexSpectralBasis eigensolve_connection(const SparseMatrixcd& connection,
                                                  const Eigen::VectorXd& mass, int k,
                                                  const EigenOptions& opts = {}) {
    auto pairs = detail::shift_invert_lanczos<Complex>(connection, mass, k, opts);
    detail::fix_phase_gauge(pairs.vectors);
    ComplexSpectralBasis basis;
    basis.psi = std::move(pairs.vectors);
    basis.mu = std::move(pairs.values);
    basis.mu_hat = detail::normalized_spectrum(basis.mu);
    basis.mass = mass;
    return basis;
}

/// Spectral coefficients of real functions: Phi^T M D. Exact projection since
/// the basis is M-orthonormal.
inline Eigen::MatrixXd project_real(const RealSpectralBasis& basis, const Eigen::MatrixXd& funcs) {
    if (funcs.rows() != basis.num_vertices())
        throw DimensionError("project_real: row count does not match basis");
    return basis.phi.transpose() * basis.mass.asDiagonal() * funcs;
}

/// Spectral coefficients of tangent fields: Psi^H M X.
inline Eigen::MatrixXcd project_complex(const ComplexSpectralBasis& basis,
                                        const Eigen::MatrixXcd& fields) {
    if (fields.rows() != basis.num_vertices())
        throw DimensionError("project_complex: row count does not match basis");
    return basis.psi.adjoint() * basis.mass.asDiagonal() * fields;
}

/// Reconstruct functions from real spectral coefficients.
inline Eigen::MatrixXd unproject_real(const RealSpectralBasis& basis,
                                      const Eigen::MatrixXd& coeffs) {
    if (coeffs.rows() != basis.size())
        throw DimensionError("unproject_real: coefficient count does not match basis");
    return basis.phi * coeffs;
}

inline Eigen::MatrixXcd unproject_complex(const ComplexSpectralBasis& basis,
                                          const Eigen::MatrixXcd& coeffs) {
    if (coeffs.rows() != basis.size())
        throw DimensionError("unproject_complex: coefficient count does not match basis");
    return basis.psi * coeffs;
}

} // namespace duofm
