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

#include <optional>

#include <duofm/cache.hpp>
#include <duofm/convert.hpp>
#include <duofm/descriptors.hpp>
#include <duofm/fmap.hpp>
#include <duofm/generators.hpp>
#include <duofm/operators.hpp>
#include <duofm/qmap.hpp>
#include <duofm/spectral.hpp>

namespace duofm {

struct PipelineConfig {
    int k_c = 50;     // Laplace-Beltrami basis size
    int k_q = 20;     // connection-Laplacian basis size
    double lambda = 1e-3;
    WksParams wks;
    OrientationChannelParams channels;
    EigenOptions eig;
};

/// Everything the matching and training stages need for one shape.
struct ShapeData {
    explicit ShapeData(TriangleMesh m) : mesh(std::move(m)) {}

    TriangleMesh mesh;
    SparseMatrixd stiffness;
    Eigen::VectorXd mass;
    TangentFrameField frames;
    SparseMatrixcd connection;
    SparseMatrixcd grad;
    RealSpectralBasis basis;
    ComplexSpectralBasis cx_basis;
    DescriptorSet inputs; // WKS plus gradient channels; the probe input
};

namespace detail {

inline RealSpectralBasis slice_basis(const RealSpectralBasis& basis, int k) {
    if (k > basis.size()) throw DimensionError("cached basis is smaller than requested k");
    RealSpectralBasis out;
    out.phi = basis.phi.leftCols(k);
    out.lambda = basis.lambda.head(k);
    out.lambda_hat = normalized_spectrum(out.lambda);
    out.mass = basis.mass;
    return out;
}

inline ComplexSpectralBasis slice_basis(const ComplexSpectralBasis& basis, int k) {
    if (k > basis.size()) throw DimensionError("cached basis is smaller than requested k");
    ComplexSpectralBasis out;
    out.psi = basis.psi.leftCols(k);
    out.mu = basis.mu.head(k);
    out.mu_hat = normalized_spectrum(out.mu);
    out.mass = basis.mass;
    return out;
}

} // namespace detail

/// Full per-shape precompute: operators, both eigensolves, WKS inputs.
/// When `cached` is given its bases are reused (sliced to the requested
/// sizes) instead of re-solving.
inline ShapeData prepare_shape(TriangleMesh mesh, const PipelineConfig& cfg,
                               const SpectralCacheBundle* cached = nullptr) {
    ShapeData shape(std::move(mesh));
    if (cached) {
        if (cached->mesh_hash != shape.mesh.content_hash())
            throw HashMismatchError("cache was built for a different mesh");
        shape.stiffness = cached->stiffness;
        shape.mass = cached->mass;
        shape.basis = detail::slice_basis(cached->real_basis, cfg.k_c);
        shape.cx_basis = detail::slice_basis(cached->cx_basis, cfg.k_q);
        shape.frames = build_tangent_frames(shape.mesh);
        shape.connection = connection_laplacian(shape.mesh, shape.frames);
    } else {
        LaplacianPair lap = cotan_laplacian(shape.mesh);
        shape.stiffness = std::move(lap.stiffness);
        shape.mass = std::move(lap.mass);
        shape.frames = build_tangent_frames(shape.mesh);
        shape.connection = connection_laplacian(shape.mesh, shape.frames);
        shape.basis = eigensolve_lb(shape.stiffness, shape.mass, cfg.k_c, cfg.eig);
        shape.cx_basis = eigensolve_connection(shape.connection, shape.mass, cfg.k_q, cfg.eig);
    }
    shape.grad = gradient_operator(shape.mesh, shape.frames);
    shape.inputs = augment_with_gradient_channels(wks(shape.basis, cfg.wks), shape.grad,
                                                  shape.mass, cfg.channels);
    return shape;
}

inline SpectralCacheBundle make_cache_bundle(const ShapeData& shape) {
    SpectralCacheBundle bundle;
    bundle.mesh_hash = shape.mesh.content_hash();
    bundle.stiffness = shape.stiffness;
    bundle.mass = shape.mass;
    bundle.real_basis = shape.basis;
    bundle.cx_basis = shape.cx_basis;
    return bundle;
}

/// Row-permutes descriptors by a symmetry: out[i] = in[T(i)].
inline Eigen::MatrixXd compose_with_symmetry(const Eigen::MatrixXd& values,
                                             const std::vector<int>& permutation) {
    if (values.rows() != static_cast<Eigen::Index>(permutation.size()))
        throw DimensionError("compose_with_symmetry: permutation length mismatch");
    Eigen::MatrixXd out(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        out.row(i) = values.row(permutation[static_cast<std::size_t>(i)]);
    return out;
}

/// Band-limited probe pairs for the pushforward check: low-frequency
/// eigenfunctions on the target paired with connection-basis fields on the
/// source.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXcd> default_pushforward_probes(
    const ShapeData& source, const ShapeData& target) {
    const int m = static_cast<int>(
        std::min({target.basis.size() - 1, source.cx_basis.size(), Eigen::Index(9)}));
    Eigen::MatrixXd funcs = target.basis.phi.middleCols(1, m);
    Eigen::MatrixXcd fields = source.cx_basis.psi.leftCols(m);
    return {std::move(funcs), std::move(fields)};
}

struct MatchOptions {
    std::optional<Eigen::MatrixXd> probe; // optional refinement probe
    bool mirrored_descriptors = false;    // compose target descriptors with its symmetry
    const SelfSymmetry* target_symmetry = nullptr;
};

struct MatchResult {
    FunctionalMap C;
    ComplexFunctionalMap Q;
    PointMap p2p_c;
    PointMap p2p_q;
    PushforwardReport pushforward;
};

/// End-to-end matching: regularized C and Q from the shapes' descriptor
/// inputs, both point-map extractions, orientation votes, and the
/// pushforward-consistency report.
inline MatchResult match_shapes(const ShapeData& source, const ShapeData& target,
                                const MatchOptions& options = {}) {
    DescriptorSet desc_m = source.inputs;
    DescriptorSet desc_n = target.inputs;
    if (options.probe) {
        desc_m = apply_probe(desc_m, *options.probe);
        desc_n = apply_probe(desc_n, *options.probe);
    }
    if (options.mirrored_descriptors) {
        if (!options.target_symmetry)
            throw DimensionError("mirrored descriptors need the target symmetry");
        desc_n.values = compose_with_symmetry(desc_n.values, options.target_symmetry->permutation);
    }

    const Eigen::MatrixXd coeffs_m = project_real(source.basis, desc_m.values);
    const Eigen::MatrixXd coeffs_n = project_real(target.basis, desc_n.values);

    MatchResult result;
    FmapOptions fopts;
    result.C = estimate_C_regularized(coeffs_m, coeffs_n, source.basis.lambda_hat,
                                      target.basis.lambda_hat, fopts);

    const Eigen::MatrixXcd b_m = complex_spectral_coeffs(source.cx_basis, source.grad, desc_m);
    const Eigen::MatrixXcd b_n = complex_spectral_coeffs(target.cx_basis, target.grad, desc_n);
    result.Q = estimate_Q_regularized(b_m, b_n, source.cx_basis.mu_hat, target.cx_basis.mu_hat,
                                      fopts.lambda);

    result.p2p_c = p2p_from_C(result.C, source.basis, target.basis);
    result.p2p_c.orientation = orientation_sign(result.p2p_c, source.mesh, target.mesh);
    result.p2p_q =
        p2p_from_Q(result.Q, source.cx_basis, target.cx_basis, source.grad, target.grad);
    result.p2p_q.orientation = orientation_sign(result.p2p_q, source.mesh, target.mesh);

    const auto [funcs, fields] = default_pushforward_probes(source, target);
    result.pushforward = verify_pushforward_relation(
        result.C, result.Q, source.basis, target.basis, source.cx_basis, target.cx_basis,
        source.grad, target.grad, funcs, fields);
    return result;
}

/// Functional-map file: text header "duofm-C k_m=<> k_n=<> lambda=<>" then
/// row-major little-endian f64 payload.
inline void save_functional_map(const FunctionalMap& map, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    os << "duofm-C k_m=" << map.C.rows() << " k_n=" << map.C.cols() << " lambda=" << map.lambda
       << '\n';
    for (Eigen::Index i = 0; i < map.C.rows(); ++i)
        for (Eigen::Index j = 0; j < map.C.cols(); ++j) detail::write_pod(os, map.C(i, j));
    if (!os) throw ParseError("write failed for " + path);
}

/// Complex map file: text header "duofm-Q k_n=<> k_m=<> lambda=<>" then
/// interleaved (re, im) row-major f64.
inline void save_complex_map(const ComplexFunctionalMap& map, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    os << "duofm-Q k_n=" << map.Q.rows() << " k_m=" << map.Q.cols() << " lambda=" << map.lambda
       << '\n';
    for (Eigen::Index i = 0; i < map.Q.rows(); ++i)
        for (Eigen::Index j = 0; j < map.Q.cols(); ++j) {
            detail::write_pod(os, map.Q(i, j).real());
            detail::write_pod(os, map.Q(i, j).imag());
        }
    if (!os) throw ParseError("write failed for " + path);
}

/// Descriptor export: (n, d) as u32 then row-major f64, plus a text sidecar
/// of parameters.
inline void save_descriptors(const DescriptorSet& desc, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    detail::write_pod(os, static_cast<std::uint32_t>(desc.values.rows()));
    detail::write_pod(os, static_cast<std::uint32_t>(desc.values.cols()));
    for (Eigen::Index i = 0; i < desc.values.rows(); ++i)
        for (Eigen::Index j = 0; j < desc.values.cols(); ++j)
            detail::write_pod(os, desc.values(i, j));
    if (!os) throw ParseError("write failed for " + path);
    std::ofstream sidecar(path + ".txt");
    sidecar << "kind=" << (desc.kind == DescriptorKind::WKS ? "wks" : "refined") << '\n'
            << "provenance=" << desc.provenance << '\n';
}

} // namespace duofm
