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

#include <catch2/catch_amalgamated.hpp>

#include <duofm/descriptors.hpp>
#include <duofm/generators.hpp>
#include <duofm/operators.hpp>
#include <duofm/spectral.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace duofm;

namespace {

struct Shape {
    TriangleMesh mesh;
    LaplacianPair lap;
    RealSpectralBasis basis;
};

Shape make_shape(const TriangleMesh& mesh, int k) {
    LaplacianPair lap = cotan_laplacian(mesh);
    RealSpectralBasis basis = eigensolve_lb(lap.stiffness, lap.mass, k);
    return {mesh, std::move(lap), std::move(basis)};
}

TriangleMesh rigidly_moved(const TriangleMesh& mesh) {
    // Rotation about a generic axis plus translation.
    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(0.83, Eigen::Vector3d(0.3, -0.5, 0.81).normalized()).toRotationMatrix();
    Eigen::MatrixX3d v = (mesh.vertices() * R.transpose()).rowwise() +
                         Eigen::RowVector3d(0.4, -2.0, 11.0);
    return TriangleMesh::create(std::move(v), mesh.faces());
}

} // namespace

TEST_CASE("WKS is invariant under rigid motion") {
    auto [mesh, sym] = generate_symmetric_blob(41, 8);
    const Shape a = make_shape(mesh, 24);
    const Shape b = make_shape(rigidly_moved(mesh), 24);
    const WksParams params{.num_energies = 32};
    const Eigen::MatrixXd wa = wks(a.basis, params).values;
    const Eigen::MatrixXd wb = wks(b.basis, params).values;
    CHECK((wa - wb).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("WKS respects the blob's intrinsic symmetry") {
    auto [mesh, sym] = generate_symmetric_blob(42, 8);
    const Shape shape = make_shape(mesh, 24);
    const Eigen::MatrixXd w = wks(shape.basis, {.num_energies = 32}).values;
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
        const Eigen::Index j = sym.permutation[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            CHECK(std::abs(w(i, c) - w(j, c)) <= 1e-6 * std::max(1.0, std::abs(w(i, c))));
    }
}

TEST_CASE("WKS columns are nonnegative and bounded by the squared basis peak") {
    auto [mesh, sym] = generate_symmetric_blob(43, 8);
    const Shape shape = make_shape(mesh, 24);
    const Eigen::MatrixXd w = wks(shape.basis, {.num_energies = 32}).values;
    CHECK(w.minCoeff() >= 0.0);
    // Each entry is a convex combination of squared eigenfunction values.
    const double bound = shape.basis.phi.rightCols(23).cwiseAbs().maxCoeff();
    CHECK(w.maxCoeff() <= bound * bound + 1e-12);
}

TEST_CASE("WKS is permutation-equivariant") {
    auto [mesh, sym] = generate_symmetric_blob(44, 7);
    const Eigen::Index n = mesh.num_vertices();
    // Deterministic relabeling.
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
    std::mt19937_64 rng(7);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);

    Eigen::MatrixX3d v(n, 3);
    Eigen::MatrixX3i f(mesh.num_faces(), 3);
    for (Eigen::Index i = 0; i < n; ++i)
        v.row(perm[static_cast<std::size_t>(i)]) = mesh.vertices().row(i);
    for (Eigen::Index t = 0; t < mesh.num_faces(); ++t)
        for (int c = 0; c < 3; ++c)
            f(t, c) = perm[static_cast<std::size_t>(mesh.faces()(t, c))];
    const TriangleMesh permuted = TriangleMesh::create(std::move(v), std::move(f));

    const WksParams params{.num_energies = 16};
    const Eigen::MatrixXd w = wks(make_shape(mesh, 20).basis, params).values;
    const Eigen::MatrixXd wp = wks(make_shape(permuted, 20).basis, params).values;
    for (Eigen::Index i = 0; i < n; ++i)
        CHECK((wp.row(perm[static_cast<std::size_t>(i)]) - w.row(i)).cwiseAbs().maxCoeff() <
              1e-6);
}

TEST_CASE("WKS rejects degenerate spectra") {
    RealSpectralBasis basis;
    basis.phi = Eigen::MatrixXd::Identity(10, 10);
    basis.lambda = Eigen::VectorXd::Zero(10); // no positive eigenvalues
    basis.lambda_hat = basis.lambda;
    basis.mass = Eigen::VectorXd::Ones(10);
    CHECK_THROWS_AS(wks(basis, {}), SpectrumError);
}

TEST_CASE("apply_probe") {
    DescriptorSet base;
    base.values = oracles::random_matrix(50, 8, 99);
    SECTION("identity probe is a no-op") {
        const DescriptorSet out = apply_probe(base, Eigen::MatrixXd::Identity(8, 8));
        CHECK(out.values == base.values);
        CHECK(out.kind == DescriptorKind::Refined);
    }
    SECTION("matches a dense product oracle") {
        const Eigen::MatrixXd probe = oracles::random_matrix(8, 4, 100);
        const DescriptorSet out = apply_probe(base, probe);
        Eigen::MatrixXd expected(50, 4);
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (int l = 0; l < 8; ++l) acc += base.values(i, l) * probe(l, j);
                expected(i, j) = acc;
            }
        CHECK((out.values - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("zero probe gives zero descriptors") {
        const DescriptorSet out = apply_probe(base, Eigen::MatrixXd::Zero(8, 3));
        CHECK(out.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("dimension mismatch raises") {
        CHECK_THROWS_AS(apply_probe(base, Eigen::MatrixXd::Identity(7, 7)), DimensionError);
    }
}

TEST_CASE("gradient channels are gauge-invariant and orientation-odd") {
    auto [mesh, sym] = generate_symmetric_blob(45, 8);
    const Shape shape = make_shape(mesh, 20);
    const TangentFrameField frames = build_tangent_frames(mesh);
    const SparseMatrixcd grad = gradient_operator(mesh, frames);
    const DescriptorSet base = wks(shape.basis, {.num_energies = 16});
    const OrientationChannelParams params{.num_gradient_channels = 4};
    const DescriptorSet augmented =
        augment_with_gradient_channels(base, grad, shape.lap.mass, params);
    const int d = 16;
    REQUIRE(augmented.values.cols() == augmented_dimension(d, params));

    SECTION("conjugated frames flip only the odd channels") {
        const SparseMatrixcd grad_flipped =
            gradient_operator(mesh, conjugate_orientation(frames));
        const DescriptorSet flipped =
            augment_with_gradient_channels(base, grad_flipped, shape.lap.mass, params);
        const int odd_start = first_odd_channel(d, params);
        // Even part identical.
        CHECK((augmented.values.leftCols(odd_start) - flipped.values.leftCols(odd_start))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
        // Odd part negated.
        CHECK((augmented.values.rightCols(3) + flipped.values.rightCols(3))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
    SECTION("odd channels are antisymmetric under the blob mirror") {
        const int odd_start = first_odd_channel(d, params);
        for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
            const Eigen::Index j = sym.permutation[static_cast<std::size_t>(i)];
            for (Eigen::Index c = odd_start; c < augmented.values.cols(); ++c)
                CHECK(std::abs(augmented.values(i, c) + augmented.values(j, c)) < 1e-5);
            for (Eigen::Index c = d; c < odd_start; ++c) // moduli are symmetric
                CHECK(std::abs(augmented.values(i, c) - augmented.values(j, c)) < 1e-5);
        }
    }
}
