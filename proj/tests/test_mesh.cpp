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

#include <set>

#include <duofm/generators.hpp>
#include <duofm/mesh.hpp>
#include <duofm/mesh_io.hpp>

#include "test_util.hpp"

using namespace duofm;

namespace {

long edge_count(const TriangleMesh& mesh) { return static_cast<long>(mesh.edges().size()); }

long euler_characteristic(const TriangleMesh& mesh) {
    return mesh.num_vertices() - edge_count(mesh) + mesh.num_faces();
}

} // namespace

TEST_CASE("OFF single triangle parses") {
    test_util::TempDir dir;
    test_util::write_file(dir.file("tri.off"), "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    const TriangleMesh mesh = load_mesh(dir.file("tri.off"));
    CHECK(mesh.num_vertices() == 3);
    CHECK(mesh.num_faces() == 1);
    CHECK_FALSE(mesh.is_closed());
}

TEST_CASE("OFF tetrahedron is closed and consistently oriented") {
    test_util::TempDir dir;
    test_util::write_file(dir.file("tet.off"),
                          "OFF\n4 4 0\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
                          "3 0 1 2\n3 0 2 3\n3 0 3 1\n3 1 3 2\n");
    const TriangleMesh mesh = load_mesh(dir.file("tet.off"));
    CHECK(mesh.num_vertices() == 4);
    CHECK(mesh.num_faces() == 4);
    CHECK(mesh.is_closed());
    CHECK(euler_characteristic(mesh) == 2);
}

TEST_CASE("OBJ strip with a flipped face raises a winding error") {
    test_util::TempDir dir;
    // Faces (0,1,2) and (1,2,3) both traverse edge 1->2 in the same
    // direction; a consistent strip would use (1,3,2).
    test_util::write_file(dir.file("strip.obj"),
                          "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf 2 3 4\n");
    CHECK_THROWS_AS(load_mesh(dir.file("strip.obj")), TopologyError);

    // The consistent version loads.
    test_util::write_file(dir.file("ok.obj"),
                          "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf 2 4 3\n");
    CHECK(load_mesh(dir.file("ok.obj")).num_faces() == 2);
}

TEST_CASE("degenerate and non-manifold inputs are rejected") {
    Eigen::MatrixX3d v(4, 3);
    v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    SECTION("repeated index") {
        Eigen::MatrixX3i f(1, 3);
        f << 0, 1, 1;
        CHECK_THROWS_AS(TriangleMesh::create(v, f), TopologyError);
    }
    SECTION("zero area") {
        Eigen::MatrixX3d vv(3, 3);
        vv << 0, 0, 0, 1, 0, 0, 2, 0, 0;
        Eigen::MatrixX3i f(1, 3);
        f << 0, 1, 2;
        CHECK_THROWS_AS(TriangleMesh::create(vv, f), TopologyError);
    }
    SECTION("edge shared by three faces") {
        Eigen::MatrixX3d vv(5, 3);
        vv << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, -1, 0;
        Eigen::MatrixX3i f(3, 3);
        f << 0, 1, 2, 1, 0, 3, 0, 1, 4;
        CHECK_THROWS_AS(TriangleMesh::create(vv, f), TopologyError);
    }
    SECTION("out of range index") {
        Eigen::MatrixX3i f(1, 3);
        f << 0, 1, 9;
        CHECK_THROWS_AS(TriangleMesh::create(v, f), TopologyError);
    }
}

TEST_CASE("binary PLY is rejected with a distinct error") {
    test_util::TempDir dir;
    test_util::write_file(dir.file("bin.ply"),
                          "ply\nformat binary_little_endian 1.0\nelement vertex 0\n"
                          "element face 0\nend_header\n");
    CHECK_THROWS_AS(load_mesh(dir.file("bin.ply")), UnsupportedFormatError);
}

TEST_CASE("PLY ascii round trip") {
    test_util::TempDir dir;
    const TriangleMesh tet = test_util::tetrahedron();
    save_mesh(tet, dir.file("tet.ply"));
    const TriangleMesh back = load_mesh(dir.file("tet.ply"));
    CHECK((back.vertices() - tet.vertices()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(back.faces() == tet.faces());
}

TEST_CASE("icosphere counts and radii") {
    SECTION("base icosahedron") {
        const TriangleMesh ico = generate_icosphere(0, 1.0);
        CHECK(ico.num_vertices() == 12);
        CHECK(ico.num_faces() == 20);
    }
    SECTION("three subdivisions") {
        const TriangleMesh ico = generate_icosphere(3, 1.0);
        CHECK(ico.num_vertices() == 642); // 10 * 4^3 + 2
        CHECK(ico.num_faces() == 1280);
        CHECK(euler_characteristic(ico) == 2);
    }
    SECTION("radius scaling") {
        const TriangleMesh ico = generate_icosphere(1, 2.0);
        for (Eigen::Index i = 0; i < ico.num_vertices(); ++i)
            CHECK(std::abs(ico.vertices().row(i).norm() - 2.0) < 2.0 * 1e-12);
    }
    SECTION("subdivision bound") {
        CHECK_THROWS_AS(generate_icosphere(7, 1.0), GenerationError);
    }
}

TEST_CASE("symmetric blob: involution, face images, exact edge isometry") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull, 6ull, 7ull, 8ull, 9ull, 10ull,
                               11ull, 12ull, 13ull, 14ull, 15ull, 16ull, 17ull, 18ull, 19ull,
                               20ull}) {
        auto [mesh, sym] = generate_symmetric_blob(seed, 8);
        CAPTURE(seed);
        REQUIRE(sym.orientation == -1);
        REQUIRE(mesh.is_closed());
        CHECK(euler_characteristic(mesh) == 2);

        // Involution.
        for (std::size_t i = 0; i < sym.permutation.size(); ++i)
            REQUIRE(sym.permutation[static_cast<std::size_t>(
                        sym.permutation[i])] == static_cast<int>(i));

        // Face images with reversed winding (throws if violated).
        validate_symmetry(mesh, sym);

        // Edge lengths are preserved exactly.
        for (const auto& e : mesh.edges()) {
            const double direct =
                (mesh.vertices().row(e[0]) - mesh.vertices().row(e[1])).norm();
            const double mirrored = (mesh.vertices().row(sym.permutation[e[0]]) -
                                     mesh.vertices().row(sym.permutation[e[1]]))
                                        .norm();
            REQUIRE(direct == mirrored);
        }
    }
}

TEST_CASE("blob vertex count formula and mirrored volume") {
    auto [mesh, sym] = generate_symmetric_blob(7, 16);
    CHECK(mesh.num_vertices() == 4 * 16 * 16 - 2 * 16 + 2); // 994

    // Mirrored embedding (positions reflected, winding rewound) has the same
    // signed volume.
    Eigen::MatrixX3d v = mesh.vertices();
    v.col(0) = -v.col(0);
    Eigen::MatrixX3i f = mesh.faces();
    f.col(1).swap(f.col(2));
    const TriangleMesh mirrored = TriangleMesh::create(v, f, "mirrored");
    CHECK(std::abs(signed_volume(mirrored) - signed_volume(mesh)) <=
          1e-12 * std::abs(signed_volume(mesh)));
}

TEST_CASE("vertex areas") {
    SECTION("unit right triangle splits its area three ways") {
        Eigen::MatrixX3d v(3, 3);
        v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
        Eigen::MatrixX3i f(1, 3);
        f << 0, 1, 2;
        const TriangleMesh tri = TriangleMesh::create(v, f);
        const Eigen::VectorXd areas = vertex_areas(tri);
        for (int i = 0; i < 3; ++i) CHECK(areas[i] == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
    }
    SECTION("area sum matches the face total exactly") {
        auto [mesh, sym] = generate_symmetric_blob(3, 10);
        const double total = total_area(mesh);
        CHECK(std::abs(vertex_areas(mesh).sum() - total) <= 1e-12 * total);
    }
    SECTION("icosphere(3,1) approximates the unit sphere area") {
        const TriangleMesh ico = generate_icosphere(3, 1.0);
        const double sum = vertex_areas(ico).sum();
        CHECK(sum < 4.0 * kPi);
        CHECK(sum > 0.99 * 4.0 * kPi);
    }
    SECTION("unit-edge tetrahedron") {
        const Eigen::VectorXd areas = vertex_areas(test_util::tetrahedron());
        for (int i = 0; i < 4; ++i)
            CHECK(areas[i] == Catch::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("save/load round trip on every format") {
    test_util::TempDir dir;
    auto [mesh, sym] = generate_symmetric_blob(11, 6);
    for (const char* name : {"m.off", "m.obj", "m.ply"}) {
        CAPTURE(name);
        save_mesh(mesh, dir.file(name));
        const TriangleMesh back = load_mesh(dir.file(name));
        REQUIRE(back.num_vertices() == mesh.num_vertices());
        CHECK((back.vertices() - mesh.vertices()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(back.faces() == mesh.faces());
    }
}

TEST_CASE("symmetry file round trip") {
    test_util::TempDir dir;
    auto [mesh, sym] = generate_symmetric_blob(2, 5);
    save_symmetry(sym, dir.file("m.sym"));
    const SelfSymmetry back = load_symmetry(dir.file("m.sym"));
    CHECK(back.orientation == sym.orientation);
    CHECK(back.permutation == sym.permutation);
}

TEST_CASE("parse errors carry line numbers") {
    test_util::TempDir dir;
    test_util::write_file(dir.file("bad.off"), "OFF\n3 1 0\n0 0 0\n1 0 nope\n0 1 0\n3 0 1 2\n");
    try {
        load_mesh(dir.file("bad.off"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
}
