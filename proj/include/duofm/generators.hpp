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

#include <cmath>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include <duofm/mesh.hpp>

namespace duofm {

namespace detail {

/// Uniform double in [0, 1) drawn portably from a mt19937_64 stream.
inline double canonical_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * canonical_uniform(rng);
}

} // namespace detail

/// Icosahedron subdivided `subdivisions` times and projected onto the sphere
/// of the given radius. 10*4^s + 2 vertices.
inline TriangleMesh generate_icosphere(int subdivisions, double radius) {
    if (subdivisions < 0 || subdivisions > 6)
        throw GenerationError("icosphere subdivisions must be in [0, 6]");
    if (!(radius > 0.0)) throw GenerationError("icosphere radius must be positive");

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    std::vector<Eigen::Vector3i> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (auto& v : verts) v.normalize();

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto midpoint_of = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Eigen::Vector3d m = (verts[static_cast<std::size_t>(a)] +
                                 verts[static_cast<std::size_t>(b)])
                                    .normalized();
            verts.push_back(m);
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = midpoint_of(f[0], f[1]);
            const int bc = midpoint_of(f[1], f[2]);
            const int ca = midpoint_of(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    Eigen::MatrixX3d V(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i)
        V.row(static_cast<Eigen::Index>(i)) = verts[i] * radius;
    Eigen::MatrixX3i F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = faces[i];
    return TriangleMesh::create(std::move(V), std::move(F),
                                "icosphere_" + std::to_string(subdivisions));
}

namespace detail {

struct BlobField {
    std::vector<Eigen::Vector3d> centers;
    std::vector<double> amplitude;
    std::vector<double> sharpness;

    double radius_at(const Eigen::Vector3d& unit_dir) const {
        double r = 1.0;
        for (std::size_t b = 0; b < centers.size(); ++b)
            r += amplitude[b] * std::exp(-sharpness[b] * (1.0 - unit_dir.dot(centers[b])));
        return r;
    }
};

inline BlobField seeded_blob_field(std::mt19937_64& rng) {
    BlobField field;
    const int bumps = 10;
    for (int b = 0; b < bumps; ++b) {
        // Random unit direction.
        const double z = uniform_in(rng, -1.0, 1.0);
        const double phi = uniform_in(rng, 0.0, 2.0 * kPi);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        field.centers.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
        field.amplitude.push_back(uniform_in(rng, -0.10, 0.22));
        field.sharpness.push_back(uniform_in(rng, 2.0, 10.0));
    }
    return field;
}

inline double min_corner_angle(const TriangleMesh& mesh) {
    double min_angle = kPi;
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const Eigen::Vector3d p = mesh.vertices().row(mesh.faces()(f, c));
            const Eigen::Vector3d q = mesh.vertices().row(mesh.faces()(f, (c + 1) % 3));
            const Eigen::Vector3d r = mesh.vertices().row(mesh.faces()(f, (c + 2) % 3));
            const Eigen::Vector3d u = q - p, v = r - p;
            min_angle = std::min(min_angle, std::atan2(u.cross(v).norm(), u.dot(v)));
        }
    }
    return min_angle;
}

} // namespace detail

/// Closed genus-0 mesh with an exact combinatorial mirror symmetry about the
/// x=0 plane. One half (x >= 0) is a bumpy radial graph over the half sphere;
/// the other half is its reflected copy with reversed winding, so the returned
/// SelfSymmetry is an exact orientation-reversing isometry of the edge graph.
/// Vertex count is 4r^2 - 2r + 2 for resolution r.
inline std::pair<TriangleMesh, SelfSymmetry> generate_symmetric_blob(std::uint64_t seed,
                                                                     int resolution) {
    if (resolution < 2) throw GenerationError("blob resolution must be at least 2");
    const long n_estimate = 4L * resolution * resolution - 2L * resolution + 2L;
    if (n_estimate > 5000) throw GenerationError("blob resolution exceeds 5000 vertices");

    for (int attempt = 0; attempt < 10; ++attempt) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
        const detail::BlobField field = detail::seeded_blob_field(rng);

        const int r = resolution;
        const int seg = 2 * r;
        // Half sphere around the +x pole; ring r sits exactly on x = 0.
        std::vector<Eigen::Vector3d> verts;
        std::vector<Eigen::Vector3i> faces;
        std::vector<int> mirror; // filled after the lower half is appended

        auto displaced = [&](const Eigen::Vector3d& unit_dir) {
            return unit_dir * field.radius_at(unit_dir);
        };

        verts.push_back(displaced(Eigen::Vector3d(1, 0, 0))); // +x pole, index 0
        auto ring_index = [&](int ring, int j) {
            return 1 + (ring - 1) * seg + ((j % seg + seg) % seg);
        };
        for (int ring = 1; ring <= r; ++ring) {
            const double alpha = static_cast<double>(ring) * (kPi / 2.0) / r;
            const double x = (ring == r) ? 0.0 : std::cos(alpha); // equator exactly on x=0
            const double s = (ring == r) ? 1.0 : std::sin(alpha);
            for (int j = 0; j < seg; ++j) {
                const double phi = 2.0 * kPi * j / seg;
                verts.push_back(
                    displaced(Eigen::Vector3d(x, s * std::cos(phi), s * std::sin(phi))));
            }
        }
        // Pole fan.
        for (int j = 0; j < seg; ++j)
            faces.push_back({0, ring_index(1, j), ring_index(1, j + 1)});
        // Bands.
        for (int ring = 1; ring < r; ++ring) {
            for (int j = 0; j < seg; ++j) {
                const int a = ring_index(ring, j), b = ring_index(ring, j + 1);
                const int c = ring_index(ring + 1, j), d = ring_index(ring + 1, j + 1);
                faces.push_back({a, c, d});
                faces.push_back({a, d, b});
            }
        }

        // Mirror: equator vertices are fixed, everything else is duplicated
        // with x negated; mirrored faces get reversed winding.
        const int upper_count = static_cast<int>(verts.size());
        const int equator_start = ring_index(r, 0);
        mirror.resize(static_cast<std::size_t>(upper_count), -1);
        for (int i = 0; i < upper_count; ++i) {
            if (i >= equator_start) {
                mirror[static_cast<std::size_t>(i)] = i; // on the x=0 plane
            } else {
                Eigen::Vector3d m = verts[static_cast<std::size_t>(i)];
                m.x() = -m.x();
                verts.push_back(m);
                mirror[static_cast<std::size_t>(i)] = static_cast<int>(verts.size()) - 1;
            }
        }
        mirror.resize(verts.size());
        for (int i = equator_start; i < upper_count; ++i) mirror[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < equator_start; ++i)
            mirror[static_cast<std::size_t>(mirror[static_cast<std::size_t>(i)])] = i;

        const int upper_faces = static_cast<int>(faces.size());
        for (int f = 0; f < upper_faces; ++f) {
            const Eigen::Vector3i face = faces[static_cast<std::size_t>(f)];
            faces.push_back({mirror[static_cast<std::size_t>(face[0])],
                             mirror[static_cast<std::size_t>(face[2])],
                             mirror[static_cast<std::size_t>(face[1])]});
        }

        Eigen::MatrixX3d V(static_cast<Eigen::Index>(verts.size()), 3);
        for (std::size_t i = 0; i < verts.size(); ++i)
            V.row(static_cast<Eigen::Index>(i)) = verts[i];
        Eigen::MatrixX3i F(static_cast<Eigen::Index>(faces.size()), 3);
        for (std::size_t i = 0; i < faces.size(); ++i)
            F.row(static_cast<Eigen::Index>(i)) = faces[i];

        try {
            TriangleMesh mesh =
                TriangleMesh::create(std::move(V), std::move(F),
                                     "blob_" + std::to_string(seed));
            if (detail::min_corner_angle(mesh) < 1e-3) continue; // retry with perturbed seed
            SelfSymmetry sym{std::move(mirror), -1};
            validate_symmetry(mesh, sym);
            return {std::move(mesh), std::move(sym)};
        } catch (const TopologyError&) {
            continue;
        }
    }
    throw GenerationError("blob generation failed after 10 seed perturbations");
}

} // namespace duofm
