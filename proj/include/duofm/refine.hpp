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

#include <duofm/pipeline.hpp>

namespace duofm {

struct TrainConfig {
    double w_ortho = 1.0;
    double w_q_ortho = 1.0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 15;
    std::uint64_t seed = 0;
};

struct LinearProbe {
    Eigen::MatrixXd W; // d_in x d_out
};

/// Precomputed spectral projections for one training pair. The probe enters
/// all downstream quantities linearly: A = P W and B = PB W, so loss and
/// gradient evaluations stay in the small spectral dimensions.
struct PairState {
    Eigen::MatrixXd proj_m, proj_n;    // k_C x d_in: Phi^T M Base
    Eigen::MatrixXcd cx_proj_m, cx_proj_n; // k_Q x d_in: Psi^H M G Base
    Eigen::VectorXd lambda_hat_m, lambda_hat_n;
    Eigen::VectorXd mu_hat_m, mu_hat_n;
    double lambda = 1e-3; // regularizer weight for both blocks
    std::string id;
};

/// Builds the pair state. With `compose_target_symmetry`, the target's
/// descriptor assignment is composed with its self-symmetry before
/// projection; this realizes the "other" solution of a symmetric pair.
inline PairState make_pair_state(const ShapeData& source, const ShapeData& target,
                                 const PipelineConfig& cfg,
                                 bool compose_target_symmetry = false,
                                 const SelfSymmetry* target_symmetry = nullptr,
                                 std::string id = "") {
    Eigen::MatrixXd base_n = target.inputs.values;
    if (compose_target_symmetry) {
        if (!target_symmetry)
            throw DimensionError("composed pair state needs the target symmetry");
        base_n = compose_with_symmetry(base_n, target_symmetry->permutation);
    }
    PairState pair;
    pair.proj_m = source.basis.phi.transpose() * source.mass.asDiagonal() * source.inputs.values;
    pair.proj_n = target.basis.phi.transpose() * target.mass.asDiagonal() * base_n;
    pair.cx_proj_m = source.cx_basis.psi.adjoint() * source.mass.asDiagonal() *
                     (source.grad * source.inputs.values.cast<Complex>());
    pair.cx_proj_n = target.cx_basis.psi.adjoint() * target.mass.asDiagonal() *
                     (target.grad * base_n.cast<Complex>());
    pair.lambda_hat_m = source.basis.lambda_hat;
    pair.lambda_hat_n = target.basis.lambda_hat;
    pair.mu_hat_m = source.cx_basis.mu_hat;
    pair.mu_hat_n = target.cx_basis.mu_hat;
    pair.lambda = cfg.lambda;
    pair.id = std::move(id);
    return pair;
}

struct LossBreakdown {
    double final_loss = 0.0;
    double ortho_c = 0.0;
    double ortho_q = 0.0;
    double iso_c = 0.0;  // monitored, not optimized
    double iso_q = 0.0;  // monitored, not optimized
    FunctionalMap C;
    ComplexFunctionalMap Q;
};

inline LossBreakdown total_loss(const PairState& pair, const Eigen::MatrixXd& probe,
                                const TrainConfig& cfg) {
    const Eigen::MatrixXd a_m = pair.proj_m * probe;
    const Eigen::MatrixXd a_n = pair.proj_n * probe;
    if (!(a_m.norm() > 0.0) || !(a_n.norm() > 0.0))
        throw RankError("total_loss: probe produced zero descriptors");

    LossBreakdown out;
    FmapOptions fopts;
    fopts.lambda = pair.lambda;
    out.C = estimate_C_regularized(a_m, a_n, pair.lambda_hat_m, pair.lambda_hat_n, fopts);

    const Eigen::MatrixXcd probe_cd = probe.cast<Complex>();
    const Eigen::MatrixXcd b_m = pair.cx_proj_m * probe_cd;
    const Eigen::MatrixXcd b_n = pair.cx_proj_n * probe_cd;
    out.Q = estimate_Q_regularized(b_m, b_n, pair.mu_hat_m, pair.mu_hat_n, pair.lambda);

    out.ortho_c = loss_ortho_C(out.C.C).value;
    out.ortho_q = loss_ortho_Q(out.Q.Q).value;
    out.iso_c = loss_iso_C(out.C.C, pair.lambda_hat_m, pair.lambda_hat_n).value;
    out.iso_q = loss_iso_Q(out.Q.Q, pair.mu_hat_m, pair.mu_hat_n).value;
    out.final_loss = cfg.w_ortho * out.ortho_c + cfg.w_q_ortho * out.ortho_q;
    return out;
}

namespace detail {

/// Adjoint of the per-row regularized real solve. Given dL/dC, accumulates
/// dL/dA_M and dL/dA_N by re-solving each row system against the row
/// cogradient: one extra solve per row, reusing the forward factorizations'
/// structure.
inline void backprop_C_block(const Eigen::MatrixXd& a_m, const Eigen::MatrixXd& a_n,
                             const Eigen::VectorXd& spec_m, const Eigen::VectorXd& spec_n,
                             double lambda, const Eigen::MatrixXd& C,
                             const Eigen::MatrixXd& dL_dC, Eigen::MatrixXd& grad_a_m,
                             Eigen::MatrixXd& grad_a_n) {
    const Eigen::Index k_m = a_m.rows();
    const Eigen::Index k_n = a_n.rows();
    grad_a_m = Eigen::MatrixXd::Zero(k_m, a_m.cols());
    grad_a_n = Eigen::MatrixXd::Zero(k_n, a_n.cols());
    const Eigen::MatrixXd gram = a_n * a_n.transpose();
    for (Eigen::Index i = 0; i < k_m; ++i) {
        Eigen::MatrixXd system = gram;
        for (Eigen::Index j = 0; j < k_n; ++j) {
            const double diff = spec_n[j] - spec_m[i];
            system(j, j) += lambda * diff * diff;
        }
        Eigen::LDLT<Eigen::MatrixXd> solver(system);
        const Eigen::VectorXd y = solver.solve(dL_dC.row(i).transpose());
        const Eigen::VectorXd c = C.row(i).transpose();
        const Eigen::RowVectorXd yt_an = y.transpose() * a_n; // 1 x d
        const Eigen::RowVectorXd ct_an = c.transpose() * a_n; // 1 x d
        grad_a_m.row(i) = yt_an;
        grad_a_n += y * a_m.row(i) - y * ct_an - c * yt_an;
    }
}

/// Complex counterpart, in the Wirtinger convention: inputs and outputs are
/// co-gradients with respect to conjugated variables, so a real parameter w
/// feeding B = P w receives dL/dw = 2 Re(P^H dL/dconj(B)).
inline void backprop_Q_block(const Eigen::MatrixXcd& b_m, const Eigen::MatrixXcd& b_n,
                             const Eigen::VectorXd& spec_m, const Eigen::VectorXd& spec_n,
                             double lambda, const Eigen::MatrixXcd& Q,
                             const Eigen::MatrixXcd& coQ, Eigen::MatrixXcd& grad_b_m,
                             Eigen::MatrixXcd& grad_b_n) {
    const Eigen::Index k_m = b_m.rows();
    const Eigen::Index k_n = b_n.rows();
    grad_b_m = Eigen::MatrixXcd::Zero(k_m, b_m.cols());
    grad_b_n = Eigen::MatrixXcd::Zero(k_n, b_n.cols());
    const Eigen::MatrixXcd gram = b_m * b_m.adjoint();
    for (Eigen::Index i = 0; i < k_n; ++i) {
        Eigen::MatrixXcd system = gram;
        for (Eigen::Index j = 0; j < k_m; ++j) {
            const double diff = spec_m[j] - spec_n[i];
            system(j, j) += Complex(lambda * diff * diff, 0.0);
        }
        Eigen::LDLT<Eigen::MatrixXcd> solver(system);
        const Eigen::VectorXcd x = Q.row(i).adjoint();          // forward solution
        const Eigen::VectorXcd g = coQ.row(i).adjoint();        // conj(coQ row) as column
        const Eigen::VectorXcd y = solver.solve(g);
        const Eigen::VectorXcd bh_x = b_m.adjoint() * x; // d-vector
        const Eigen::VectorXcd bh_y = b_m.adjoint() * y;
        grad_b_m += y * b_n.row(i) - y * bh_x.adjoint() - x * bh_y.adjoint();
        grad_b_n.row(i) = bh_y.conjugate().transpose();
    }
}

} // namespace detail

struct LossAndGradient {
    LossBreakdown loss;
    Eigen::MatrixXd gradient; // dL/dW
};

/// Analytic gradient of the final loss with respect to the probe, propagated
/// through both regularized estimation blocks by implicit differentiation.
inline LossAndGradient grad_total_loss(const PairState& pair, const Eigen::MatrixXd& probe,
                                       const TrainConfig& cfg) {
    const Eigen::MatrixXd a_m = pair.proj_m * probe;
    const Eigen::MatrixXd a_n = pair.proj_n * probe;
    if (!(a_m.norm() > 0.0) || !(a_n.norm() > 0.0))
        throw RankError("grad_total_loss: probe produced zero descriptors");

    LossAndGradient out;
    FmapOptions fopts;
    fopts.lambda = pair.lambda;
    out.loss.C = estimate_C_regularized(a_m, a_n, pair.lambda_hat_m, pair.lambda_hat_n, fopts);

    const Eigen::MatrixXcd probe_cd = probe.cast<Complex>();
    const Eigen::MatrixXcd b_m = pair.cx_proj_m * probe_cd;
    const Eigen::MatrixXcd b_n = pair.cx_proj_n * probe_cd;
    out.loss.Q = estimate_Q_regularized(b_m, b_n, pair.mu_hat_m, pair.mu_hat_n, pair.lambda);

    const LossValue ortho_c = loss_ortho_C(out.loss.C.C);
    const ComplexLossValue ortho_q = loss_ortho_Q(out.loss.Q.Q);
    out.loss.ortho_c = ortho_c.value;
    out.loss.ortho_q = ortho_q.value;
    out.loss.iso_c = loss_iso_C(out.loss.C.C, pair.lambda_hat_m, pair.lambda_hat_n).value;
    out.loss.iso_q = loss_iso_Q(out.loss.Q.Q, pair.mu_hat_m, pair.mu_hat_n).value;
    out.loss.final_loss = cfg.w_ortho * out.loss.ortho_c + cfg.w_q_ortho * out.loss.ortho_q;

    out.gradient = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
    if (cfg.w_ortho != 0.0) {
        Eigen::MatrixXd grad_a_m, grad_a_n;
        detail::backprop_C_block(a_m, a_n, pair.lambda_hat_m, pair.lambda_hat_n, pair.lambda,
                                 out.loss.C.C, cfg.w_ortho * ortho_c.gradient, grad_a_m,
                                 grad_a_n);
        out.gradient += pair.proj_m.transpose() * grad_a_m + pair.proj_n.transpose() * grad_a_n;
    }
    if (cfg.w_q_ortho != 0.0) {
        Eigen::MatrixXcd grad_b_m, grad_b_n;
        detail::backprop_Q_block(b_m, b_n, pair.mu_hat_m, pair.mu_hat_n, pair.lambda,
                                 out.loss.Q.Q, cfg.w_q_ortho * ortho_q.gradient, grad_b_m,
                                 grad_b_n);
        out.gradient += 2.0 * (pair.cx_proj_m.adjoint() * grad_b_m +
                               pair.cx_proj_n.adjoint() * grad_b_n)
                                  .real();
    }
    return out;
}

struct StepRecord {
    int step = 0;
    int pair_index = 0;
    double final_loss = 0.0;
    double ortho_c = 0.0;
    double ortho_q = 0.0;
    double iso_c = 0.0;
    double iso_q = 0.0;
    double grad_norm = 0.0;
};

struct TrainResult {
    LinearProbe probe;
    std::vector<StepRecord> history;
};

/// Seeded probe initialization: identity block plus uniform noise.
inline Eigen::MatrixXd initial_probe(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                     double noise_scale = 0.05) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            w(i, j) = (i == j ? 1.0 : 0.0) +
                      noise_scale * (2.0 * detail::canonical_uniform(rng) - 1.0);
    return w;
}

/// ADAM over epochs x pairs steps, one pair per step, order shuffled per
/// epoch by the seeded generator. Deterministic for a fixed seed.
inline TrainResult optimize(const std::vector<PairState>& pairs, const TrainConfig& cfg,
                            Eigen::MatrixXd probe) {
    if (pairs.empty()) throw DimensionError("optimize: need at least one pair");
    std::mt19937_64 rng(cfg.seed);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
    long t = 0;

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.epochs) * pairs.size());
    std::vector<int> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the shared stream; modulo bias is irrelevant here.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);
        for (int idx : order) {
            const LossAndGradient eval =
                grad_total_loss(pairs[static_cast<std::size_t>(idx)], probe, cfg);
            if (!std::isfinite(eval.loss.final_loss) || !eval.gradient.allFinite())
                throw DivergenceError("training loss became non-finite at step " +
                                      std::to_string(t + 1));
            ++t;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * eval.gradient;
            v = cfg.beta2 * v +
                (1.0 - cfg.beta2) * eval.gradient.cwiseProduct(eval.gradient);
            const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            const Eigen::MatrixXd m_hat = m / bias1;
            const Eigen::MatrixXd v_hat = v / bias2;
            probe -= cfg.learning_rate *
                     (m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon)).matrix();

            StepRecord record;
            record.step = static_cast<int>(t);
            record.pair_index = idx;
            record.final_loss = eval.loss.final_loss;
            record.ortho_c = eval.loss.ortho_c;
            record.ortho_q = eval.loss.ortho_q;
            record.iso_c = eval.loss.iso_c;
            record.iso_q = eval.loss.iso_q;
            record.grad_norm = eval.gradient.norm();
            result.history.push_back(record);
        }
    }
    result.probe.W = std::move(probe);
    return result;
}

/// Probe checkpoint: (d, d') as u32 then row-major f64.
inline void save_probe(const LinearProbe& probe, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    detail::write_pod(os, static_cast<std::uint32_t>(probe.W.rows()));
    detail::write_pod(os, static_cast<std::uint32_t>(probe.W.cols()));
    for (Eigen::Index i = 0; i < probe.W.rows(); ++i)
        for (Eigen::Index j = 0; j < probe.W.cols(); ++j) detail::write_pod(os, probe.W(i, j));
    if (!os) throw ParseError("write failed for " + path);
}

inline LinearProbe load_probe(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path);
    const auto rows = detail::read_pod<std::uint32_t>(is);
    const auto cols = detail::read_pod<std::uint32_t>(is);
    LinearProbe probe;
    probe.W.resize(rows, cols);
    for (Eigen::Index i = 0; i < probe.W.rows(); ++i)
        for (Eigen::Index j = 0; j < probe.W.cols(); ++j)
            probe.W(i, j) = detail::read_pod<double>(is);
    return probe;
}

/// Training-log line for one step: space-separated key=value fields.
inline std::string format_step_record(const StepRecord& r, const std::string& pair_id) {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "step=%d pair=%s L_final=%.17g L_ortho=%.17g L_Q_ortho=%.17g L_iso=%.17g "
                  "L_Q_iso=%.17g grad_norm=%.17g",
                  r.step, pair_id.c_str(), r.final_loss, r.ortho_c, r.ortho_q, r.iso_c, r.iso_q,
                  r.grad_norm);
    return buf;
}

/// Loss tuples for the direct solution and for the solution composed with the
/// target's self-symmetry. For an exact combinatorial symmetry the intrinsic
/// tuple (ortho_c, iso_c) ties; the complex tuple separates the two.
struct AmbiguityReport {
    LossBreakdown direct;
    LossBreakdown composed;

    double intrinsic_relative_gap() const {
        // The losses are dimensionless with natural scale 1; flooring the
        // denominator makes the gap absolute for pairs whose losses are both
        // numerically zero (exactly isometric pairs).
        const double scale = std::max({std::abs(direct.ortho_c), std::abs(composed.ortho_c),
                                       std::abs(direct.iso_c), std::abs(composed.iso_c), 1.0});
        return std::max(std::abs(direct.ortho_c - composed.ortho_c),
                        std::abs(direct.iso_c - composed.iso_c)) /
               scale;
    }
    double q_ortho_margin() const { return composed.ortho_q - direct.ortho_q; }
};

inline AmbiguityReport symmetry_ambiguity_probe(const ShapeData& source, const ShapeData& target,
                                                const SelfSymmetry& target_symmetry,
                                                const Eigen::MatrixXd& probe,
                                                const PipelineConfig& pipeline_cfg,
                                                const TrainConfig& train_cfg) {
    const PairState direct = make_pair_state(source, target, pipeline_cfg);
    const PairState composed =
        make_pair_state(source, target, pipeline_cfg, true, &target_symmetry);
    AmbiguityReport report;
    report.direct = total_loss(direct, probe, train_cfg);
    report.composed = total_loss(composed, probe, train_cfg);
    return report;
}

} // namespace duofm
