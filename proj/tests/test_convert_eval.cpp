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

#include <duofm/evaluate.hpp>
#include <duofm/pipeline.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace duofm;

namespace {

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.k_c = 14;
    cfg.k_q = 7;
    cfg.wks.num_energies = 16;
    cfg.channels.num_gradient_channels = 3;
    return cfg;
}

struct PermutedCopy {
    TriangleMesh mesh;
    std::vector<int> forward; // forward[i] = index of source vertex i in the copy
};

PermutedCopy permuted_copy(const TriangleMesh& mesh, std::uint64_t seed) {
    const Eigen::Index n = mesh.num_vertices();
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
    std::mt19937_64 rng(seed);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    Eigen::MatrixX3d v(n, 3);
    Eigen::MatrixX3i f(mesh.num_faces(), 3);
    for (Eigen::Index i = 0; i < n; ++i)
        v.row(perm[static_cast<std::size_t>(i)]) = mesh.vertices().row(i);
    for (Eigen::Index t = 0; t < mesh.num_faces(); ++t)
        for (int c = 0; c < 3; ++c)
            f(t, c) = perm[static_cast<std::size_t>(mesh.faces()(t, c))];
    return {TriangleMesh::create(std::move(v), std::move(f)), std::move(perm)};
}

double agreement(const std::vector<int>& indices, const std::vector<int>& expected) {
    long hits = 0;
    for (std::size_t i = 0; i < indices.size(); ++i)
        if (indices[i] == expected[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

} // namespace

TEST_CASE("p2p extraction on the identity pair") {
    auto [mesh, sym] = generate_symmetric_blob(91, 8);
    const PipelineConfig cfg = small_config();
    const ShapeData shape = prepare_shape(mesh, cfg);
    const MatchResult result = match_shapes(shape, shape);

    std::vector<int> identity(static_cast<std::size_t>(mesh.num_vertices()));
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
    CHECK(agreement(result.p2p_c.indices, identity) >= 0.999);
    CHECK(agreement(result.p2p_q.indices, identity) >= 0.99);
    CHECK(result.p2p_c.orientation == 1);
    CHECK(result.p2p_q.orientation == 1);
    CHECK(result.pushforward.max_residual <= 1e-6);
}

TEST_CASE("p2p extraction recovers an exact vertex permutation") {
    auto [mesh, sym] = generate_symmetric_blob(92, 8);
    const PermutedCopy copy = permuted_copy(mesh, 93);
    const PipelineConfig cfg = small_config();
    const ShapeData source = prepare_shape(mesh, cfg);
    const ShapeData target = prepare_shape(copy.mesh, cfg);
    const MatchResult result = match_shapes(source, target);

    CHECK(agreement(result.p2p_c.indices, copy.forward) >= 0.95);
    CHECK(agreement(result.p2p_q.indices, copy.forward) >= 0.95);
    CHECK(result.p2p_c.orientation == 1);
    CHECK(result.pushforward.max_residual <= 1e-5);
    CHECK((result.C.C.cwiseAbs2().sum() -
           result.C.C.diagonal().cwiseAbs2().sum()) /
              result.C.C.cwiseAbs2().sum() <
          1e-6); // C is essentially diagonal in matched bases
}

TEST_CASE("both extractors match the brute-force scan exactly") {
    auto [mesh, sym] = generate_symmetric_blob(94, 7); // n = 184 <= 2000
    const PipelineConfig cfg = small_config();
    const ShapeData shape = prepare_shape(mesh, cfg);
    const MatchResult result = match_shapes(shape, shape);

    const Eigen::MatrixXd embedded_m = shape.basis.phi * result.C.C;
    CHECK(result.p2p_c.indices ==
          oracles::brute_force_nearest_rows(embedded_m, shape.basis.phi));

    const Eigen::MatrixXd div_m =
        divergence(shape.grad, shape.mass, Eigen::MatrixXcd(shape.cx_basis.psi));
    const Eigen::MatrixXd div_n = divergence(
        shape.grad, shape.mass, Eigen::MatrixXcd(shape.cx_basis.psi * result.Q.Q));
    CHECK(result.p2p_q.indices == oracles::brute_force_nearest_rows(div_m, div_n));
}

TEST_CASE("orientation_sign") {
    auto [mesh, sym] = generate_symmetric_blob(95, 7);
    std::vector<int> identity(static_cast<std::size_t>(mesh.num_vertices()));
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);

    SECTION("identity map preserves orientation") {
        PointMap map{identity, P2PMethod::RowNNC, 0};
        CHECK(orientation_sign(map, mesh, mesh) == 1);
    }
    SECTION("the mirror permutation reverses orientation") {
        PointMap map{sym.permutation, P2PMethod::RowNNC, 0};
        CHECK(orientation_sign(map, mesh, mesh) == -1);
    }
    SECTION("a random map is undetermined") {
        std::mt19937_64 rng(96);
        std::vector<int> random(identity);
        for (std::size_t i = random.size(); i > 1; --i)
            std::swap(random[i - 1], random[rng() % i]);
        PointMap map{random, P2PMethod::RowNNC, 0};
        // Report only; shuffled maps overwhelmingly land in the dead zone.
        const int sign = orientation_sign(map, mesh, mesh);
        INFO("random-map orientation vote: " << sign);
        CHECK((sign == 0 || sign == 1 || sign == -1));
    }
}

TEST_CASE("geodesic distances") {
    SECTION("adjacent vertices get the edge length") {
        const TriangleMesh tet = test_util::tetrahedron();
        const Eigen::MatrixXd d = geodesic_distances(tet, {0});
        for (int j = 1; j < 4; ++j) CHECK(d(0, j) == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("antipodal distance on the icosphere overestimates pi boundedly") {
        const TriangleMesh ico = generate_icosphere(3, 1.0);
        // Vertex 0 and its antipode (exact by icosahedral symmetry).
        const Eigen::Vector3d target = -ico.vertices().row(0).transpose();
        int antipode = 0;
        double best = 1e9;
        for (Eigen::Index i = 0; i < ico.num_vertices(); ++i) {
            const double dist = (ico.vertices().row(i).transpose() - target).norm();
            if (dist < best) {
                best = dist;
                antipode = static_cast<int>(i);
            }
        }
        REQUIRE(best < 1e-9);
        const Eigen::MatrixXd d = geodesic_distances(ico, {0});
        CHECK(d(0, antipode) >= kPi);
        CHECK(d(0, antipode) <= 1.1 * kPi);
    }
    SECTION("symmetry of the distance") {
        auto [mesh, sym] = generate_symmetric_blob(97, 6);
        const Eigen::MatrixXd d = geodesic_distances(mesh, {3, 17});
        const Eigen::MatrixXd back = geodesic_distances(mesh, {17});
        CHECK(std::abs(d(0, 17) - back(0, 3)) < 1e-12);
    }
    SECTION("disconnected meshes are reported") {
        Eigen::MatrixX3d v(6, 3);
        v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 5, 5, 5, 6, 5, 5, 5, 6, 5;
        Eigen::MatrixX3i f(2, 3);
        f << 0, 1, 2, 3, 4, 5;
        const TriangleMesh two = TriangleMesh::create(v, f);
        CHECK_THROWS_AS(geodesic_distances(two, {0}), DisconnectedError);
    }
}

TEST_CASE("evaluate") {
    const TriangleMesh tet = test_util::tetrahedron();
    std::vector<int> identity = {0, 1, 2, 3};

    SECTION("perfect map scores zero and saturates the curve") {
        PointMap map{identity, P2PMethod::RowNNC, 1};
        const EvalReport report = evaluate(map, identity, tet);
        CHECK(report.mean_error_x100 == 0.0);
        CHECK(report.pmf.front().second == 1.0);
        CHECK(report.pmf.back().second == 1.0);
    }
    SECTION("one-edge offset on a uniform mesh") {
        // Every vertex maps one edge away; all edges have length 1.
        PointMap map{{1, 2, 3, 0}, P2PMethod::RowNNC, 1};
        const EvalReport report = evaluate(map, identity, tet);
        const double expected = 100.0 / std::sqrt(total_area(tet));
        CHECK(report.mean_error_x100 == Catch::Approx(expected).epsilon(1e-9));
    }
    SECTION("rescaling the target leaves the report unchanged") {
        auto [mesh, sym] = generate_symmetric_blob(98, 6);
        const Eigen::Index n = mesh.num_vertices();
        std::vector<int> gt(static_cast<std::size_t>(n));
        std::vector<int> predicted(static_cast<std::size_t>(n));
        std::mt19937_64 rng(99);
        for (Eigen::Index i = 0; i < n; ++i) {
            gt[static_cast<std::size_t>(i)] = static_cast<int>(i);
            predicted[static_cast<std::size_t>(i)] = static_cast<int>(rng() % n);
        }
        PointMap map{predicted, P2PMethod::RowNNC, 0};
        const EvalReport base = evaluate(map, gt, mesh);
        const TriangleMesh scaled =
            TriangleMesh::create(3.0 * mesh.vertices(), mesh.faces());
        const EvalReport rescaled = evaluate(map, gt, scaled);
        CHECK(std::abs(base.mean_error_x100 - rescaled.mean_error_x100) <=
              1e-9 * base.mean_error_x100);
        for (std::size_t i = 0; i < base.pmf.size(); ++i)
            CHECK(base.pmf[i].second == rescaled.pmf[i].second);
    }
    SECTION("pmf is monotone and ends at the 0.25 threshold") {
        auto [mesh, sym] = generate_symmetric_blob(100, 6);
        const Eigen::Index n = mesh.num_vertices();
        std::vector<int> gt(static_cast<std::size_t>(n)), predicted(static_cast<std::size_t>(n));
        std::mt19937_64 rng(101);
        for (Eigen::Index i = 0; i < n; ++i) {
            gt[static_cast<std::size_t>(i)] = static_cast<int>(i);
            predicted[static_cast<std::size_t>(i)] = static_cast<int>(rng() % n);
        }
        const EvalReport report = evaluate({predicted, P2PMethod::RowNNC, 0}, gt, mesh);
        REQUIRE(report.pmf.size() == 100);
        CHECK(report.pmf.back().first == Catch::Approx(0.25));
        for (std::size_t i = 1; i < report.pmf.size(); ++i)
            CHECK(report.pmf[i].second >= report.pmf[i - 1].second);
    }
}

TEST_CASE("point map file round trip") {
    test_util::TempDir dir;
    PointMap map{{3, 1, 4, 1, 5}, P2PMethod::DiracDivQ, -1};
    save_point_map(map, dir.file("map.txt"));
    const PointMap back = load_point_map(dir.file("map.txt"));
    CHECK(back.indices == map.indices);
    CHECK(back.method == map.method);
    CHECK(back.orientation == map.orientation);
}

TEST_CASE("eval report JSON has fixed key order") {
    EvalReport report;
    report.mean_error_x100 = 1.5;
    report.n_evaluated = 3;
    report.pmf = {{0.0, 0.5}, {0.25, 1.0}};
    const std::string json = to_json(report);
    CHECK(json.find("mean_geodesic_error_x100") < json.find("n_evaluated"));
    CHECK(json.find("n_evaluated") < json.find("pmf"));
}
