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

#include <duofm/cache.hpp>
#include <duofm/generators.hpp>
#include <duofm/operators.hpp>

#include "test_util.hpp"

using namespace duofm;

namespace {

SpectralCacheBundle make_bundle(std::uint64_t seed) {
    auto [mesh, sym] = generate_symmetric_blob(seed, 6);
    const LaplacianPair lap = cotan_laplacian(mesh);
    const TangentFrameField frames = build_tangent_frames(mesh);
    const SparseMatrixcd connection = connection_laplacian(mesh, frames);
    SpectralCacheBundle bundle;
    bundle.mesh_hash = mesh.content_hash();
    bundle.stiffness = lap.stiffness;
    bundle.mass = lap.mass;
    bundle.real_basis = eigensolve_lb(lap.stiffness, lap.mass, 12);
    bundle.cx_basis = eigensolve_connection(connection, lap.mass, 8);
    return bundle;
}

} // namespace

TEST_CASE("cache round trip is bit exact") {
    test_util::TempDir dir;
    const SpectralCacheBundle bundle = make_bundle(31);
    cache_write(dir.file("a.duof"), bundle);
    const SpectralCacheBundle back = cache_read(dir.file("a.duof"));

    CHECK(back.mesh_hash == bundle.mesh_hash);
    CHECK(back.real_basis.phi == bundle.real_basis.phi);
    CHECK(back.real_basis.lambda == bundle.real_basis.lambda);
    CHECK(back.cx_basis.psi == bundle.cx_basis.psi);
    CHECK(back.cx_basis.mu == bundle.cx_basis.mu);
    CHECK(back.mass == bundle.mass);
    CHECK((back.stiffness - bundle.stiffness).norm() == 0.0);

    // Two writes of the same bundle produce identical bytes.
    cache_write(dir.file("b.duof"), bundle);
    CHECK(test_util::read_file(dir.file("a.duof")) == test_util::read_file(dir.file("b.duof")));
}

TEST_CASE("tampered cache raises CorruptionError") {
    test_util::TempDir dir;
    cache_write(dir.file("a.duof"), make_bundle(32));
    std::string bytes = test_util::read_file(dir.file("a.duof"));
    bytes[bytes.size() / 2] ^= 0x40;
    test_util::write_file(dir.file("a.duof"), bytes);
    CHECK_THROWS_AS(cache_read(dir.file("a.duof")), CorruptionError);
}

TEST_CASE("truncated cache raises CorruptionError") {
    test_util::TempDir dir;
    cache_write(dir.file("a.duof"), make_bundle(33));
    std::string bytes = test_util::read_file(dir.file("a.duof"));
    test_util::write_file(dir.file("a.duof"), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(cache_read(dir.file("a.duof")), CorruptionError);
}

TEST_CASE("wrong magic raises CacheVersionError") {
    test_util::TempDir dir;
    cache_write(dir.file("a.duof"), make_bundle(34));
    std::string bytes = test_util::read_file(dir.file("a.duof"));
    bytes[0] = 'X';
    // Keep the checksum honest so the version check is what fires.
    {
        detail::Crc32 crc;
        crc.update(bytes.data(), bytes.size() - 4);
        const std::uint32_t digest = crc.digest();
        std::memcpy(bytes.data() + bytes.size() - 4, &digest, 4);
    }
    test_util::write_file(dir.file("a.duof"), bytes);
    CHECK_THROWS_AS(cache_read(dir.file("a.duof")), CacheVersionError);
}

TEST_CASE("mesh hash mismatch raises HashMismatchError") {
    test_util::TempDir dir;
    cache_write(dir.file("a.duof"), make_bundle(35));
    auto [other_mesh, sym] = generate_symmetric_blob(36, 6);
    CHECK_THROWS_AS(cache_read_for_mesh(dir.file("a.duof"), other_mesh), HashMismatchError);
}

TEST_CASE("content hash is sensitive to geometry and connectivity") {
    auto [mesh, sym] = generate_symmetric_blob(37, 5);
    Eigen::MatrixX3d v = mesh.vertices();
    v(0, 0) += 1e-12;
    const TriangleMesh moved = TriangleMesh::create(v, mesh.faces());
    CHECK(moved.content_hash() != mesh.content_hash());
}
