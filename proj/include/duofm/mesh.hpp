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

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <duofm/detail/binio.hpp>
#include <duofm/errors.hpp>

namespace duofm {

inline constexpr double kPi = 3.14159265358979323846;

/// Immutable, validated triangle mesh. Faces are counter-clockwise as seen
/// from outside; construction rejects non-manifold edges, degenerate faces
/// and inconsistent winding.
class TriangleMesh {
public:
    static TriangleMesh create(Eigen::MatrixX3d vertices, Eigen::MatrixX3i faces,
                               std::string name = "") {
        TriangleMesh mesh;
        mesh.vertices_ = std::move(vertices);
        mesh.faces_ = std::move(faces);
        mesh.name_ = std::move(name);
        mesh.validate();
        return mesh;
    }

    const Eigen::MatrixX3d& vertices() const noexcept { return vertices_; }
    const Eigen::MatrixX3i& faces() const noexcept { return faces_; }
    const std::string& name() const noexcept { return name_; }
    Eigen::Index num_vertices() const noexcept { return vertices_.rows(); }
    Eigen::Index num_faces() const noexcept { return faces_.rows(); }

    /// True when every edge is shared by exactly two faces.
    bool is_closed() const noexcept { return closed_; }

    /// Undirected edges as (min, max) vertex pairs, sorted lexicographically.
    const std::vector<std::array<int, 2>>& edges() const noexcept { return edges_; }

    /// Hash over the canonical vertex/face byte layout; identifies cache entries.
    std::uint64_t content_hash() const {
        detail::Fnv1a h;
        const std::uint64_t n = static_cast<std::uint64_t>(num_vertices());
        const std::uint64_t f = static_cast<std::uint64_t>(num_faces());
        h.update_pod(n);
        for (Eigen::Index i = 0; i < vertices_.rows(); ++i)
            for (int c = 0; c < 3; ++c) h.update_pod(vertices_(i, c));
        h.update_pod(f);
        for (Eigen::Index i = 0; i < faces_.rows(); ++i)
            for (int c = 0; c < 3; ++c) h.update_pod(static_cast<std::int32_t>(faces_(i, c)));
        return h.digest();
    }

private:
    TriangleMesh() = default;

    static std::uint64_t directed_key(int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    }

    void validate() {
        const int n = static_cast<int>(vertices_.rows());
        std::unordered_map<std::uint64_t, int> undirected_count;
        std::unordered_map<std::uint64_t, int> directed_face;
        undirected_count.reserve(static_cast<std::size_t>(faces_.rows()) * 3);
        directed_face.reserve(static_cast<std::size_t>(faces_.rows()) * 3);

        for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
            const int a = faces_(f, 0), b = faces_(f, 1), c = faces_(f, 2);
            if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n)
                throw TopologyError("face " + std::to_string(f) + " references invalid vertex");
            if (a == b || b == c || a == c)
                throw TopologyError("degenerate face " + std::to_string(f) +
                                    " (repeated vertex index)");
            const Eigen::Vector3d u = vertices_.row(b) - vertices_.row(a);
            const Eigen::Vector3d v = vertices_.row(c) - vertices_.row(a);
            if (u.cross(v).norm() <= 0.0)
                throw TopologyError("degenerate face " + std::to_string(f) + " (zero area)");
            const std::array<std::array<int, 2>, 3> dir = {{{a, b}, {b, c}, {c, a}}};
            for (const auto& e : dir) {
                undirected_count[directed_key(std::min(e[0], e[1]), std::max(e[0], e[1]))]++;
            }
        }
        for (const auto& [key, count] : undirected_count) {
            if (count > 2)
                throw TopologyError("non-manifold edge (" +
                                    std::to_string(static_cast<int>(key >> 32)) + ", " +
                                    std::to_string(static_cast<int>(key & 0xffffffffu)) +
                                    ") shared by " + std::to_string(count) + " faces");
        }
        for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
            const int a = faces_(f, 0), b = faces_(f, 1), c = faces_(f, 2);
            const std::array<std::array<int, 2>, 3> dir = {{{a, b}, {b, c}, {c, a}}};
            for (const auto& e : dir) {
                auto [it, inserted] = directed_face.emplace(directed_key(e[0], e[1]),
                                                            static_cast<int>(f));
                if (!inserted)
                    throw TopologyError("inconsistent winding: edge (" + std::to_string(e[0]) +
                                        ", " + std::to_string(e[1]) + ") traversed twice, faces " +
                                        std::to_string(it->second) + " and " + std::to_string(f));
            }
        }

        closed_ = true;
        edges_.reserve(undirected_count.size());
        for (const auto& [key, count] : undirected_count) {
            if (count != 2) closed_ = false;
            edges_.push_back({static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu)});
        }
        std::sort(edges_.begin(), edges_.end());
    }

    Eigen::MatrixX3d vertices_;
    Eigen::MatrixX3i faces_;
    std::string name_;
    std::vector<std::array<int, 2>> edges_;
    bool closed_ = false;
};

/// A combinatorial self-map of a mesh: vertex permutation plus the sign of
/// the orientation it induces (-1 for mirror symmetries).
struct SelfSymmetry {
    std::vector<int> permutation;
    int orientation = 1; // +1 or -1
};

namespace detail {

inline std::array<int, 3> canonical_rotation(int a, int b, int c) {
    if (a <= b && a <= c) return {a, b, c};
    if (b <= a && b <= c) return {b, c, a};
    return {c, a, b};
}

struct FaceKeyHash {
    std::size_t operator()(const std::array<int, 3>& k) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (int v : k) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

} // namespace detail

/// Checks that `sym` is a bijection mapping faces to faces (with reversed
/// winding when orientation is -1). Throws TopologyError otherwise.
inline void validate_symmetry(const TriangleMesh& mesh, const SelfSymmetry& sym) {
    const int n = static_cast<int>(mesh.num_vertices());
    if (static_cast<int>(sym.permutation.size()) != n)
        throw TopologyError("symmetry permutation length does not match vertex count");
    if (sym.orientation != 1 && sym.orientation != -1)
        throw TopologyError("symmetry orientation must be +1 or -1");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int img : sym.permutation) {
        if (img < 0 || img >= n || seen[static_cast<std::size_t>(img)])
            throw TopologyError("symmetry permutation is not a bijection");
        seen[static_cast<std::size_t>(img)] = 1;
    }

    // Faces keyed by canonical cyclic rotation, so winding is preserved in the key.
    std::unordered_map<std::array<int, 3>, int, detail::FaceKeyHash> oriented_faces;
    oriented_faces.reserve(static_cast<std::size_t>(mesh.num_faces()));
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f)
        oriented_faces[detail::canonical_rotation(mesh.faces()(f, 0), mesh.faces()(f, 1),
                                                  mesh.faces()(f, 2))] = static_cast<int>(f);
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        int a = sym.permutation[static_cast<std::size_t>(mesh.faces()(f, 0))];
        int b = sym.permutation[static_cast<std::size_t>(mesh.faces()(f, 1))];
        int c = sym.permutation[static_cast<std::size_t>(mesh.faces()(f, 2))];
        if (sym.orientation == -1) std::swap(b, c);
        if (!oriented_faces.count(detail::canonical_rotation(a, b, c)))
            throw TopologyError("symmetry image of face " + std::to_string(f) +
                                " is not a mesh face");
    }
}

/// Per-face areas.
inline Eigen::VectorXd face_areas(const TriangleMesh& mesh) {
    Eigen::VectorXd areas(mesh.num_faces());
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Vector3d u =
            mesh.vertices().row(mesh.faces()(f, 1)) - mesh.vertices().row(mesh.faces()(f, 0));
        const Eigen::Vector3d v =
            mesh.vertices().row(mesh.faces()(f, 2)) - mesh.vertices().row(mesh.faces()(f, 0));
        areas[f] = 0.5 * u.cross(v).norm();
    }
    return areas;
}

/// Barycentric lumped vertex areas: one third of each incident face area.
inline Eigen::VectorXd vertex_areas(const TriangleMesh& mesh) {
    const Eigen::VectorXd fa = face_areas(mesh);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f)
        for (int c = 0; c < 3; ++c) va[mesh.faces()(f, c)] += fa[f] / 3.0;
    return va;
}

inline double total_area(const TriangleMesh& mesh) { return face_areas(mesh).sum(); }

/// Signed volume via the divergence theorem; positive for outward winding.
inline double signed_volume(const TriangleMesh& mesh) {
    double vol = 0.0;
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Vector3d a = mesh.vertices().row(mesh.faces()(f, 0));
        const Eigen::Vector3d b = mesh.vertices().row(mesh.faces()(f, 1));
        const Eigen::Vector3d c = mesh.vertices().row(mesh.faces()(f, 2));
        vol += a.dot(b.cross(c)) / 6.0;
    }
    return vol;
}

} // namespace duofm
