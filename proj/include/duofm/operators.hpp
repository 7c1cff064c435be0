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
#include <complex>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <duofm/mesh.hpp>

namespace duofm {

using Complex = std::complex<double>;
using SparseMatrixd = Eigen::SparseMatrix<double>;
using SparseMatrixcd = Eigen::SparseMatrix<Complex>;

struct LaplacianPair {
    SparseMatrixd stiffness; // weak form, positive semi-definite
    Eigen::VectorXd mass;    // lumped vertex areas (diagonal)
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(std::min(a, b))) << 32) |
           static_cast<std::uint32_t>(std::max(a, b));
}

/// Half cotangent weights per undirected edge, accumulated in face order.
inline std::unordered_map<std::uint64_t, double> edge_cotan_weights(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, double> weights;
    weights.reserve(static_cast<std::size_t>(mesh.num_faces()) * 3);
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int a = mesh.faces()(f, c);
            const int b = mesh.faces()(f, (c + 1) % 3);
            const int d = mesh.faces()(f, (c + 2) % 3);
            const Eigen::Vector3d u = mesh.vertices().row(b) - mesh.vertices().row(a);
            const Eigen::Vector3d v = mesh.vertices().row(d) - mesh.vertices().row(a);
            const double cross_norm = u.cross(v).norm();
            const double angle = std::atan2(cross_norm, u.dot(v));
            if (angle < 1e-6)
                throw NumericalError("near-degenerate corner in face " + std::to_string(f) +
                                     " (angle " + std::to_string(angle) + " rad)");
            // cot of the corner at `a` weights the opposite edge (b, d).
            weights[edge_key(b, d)] += 0.5 * u.dot(v) / cross_norm;
        }
    }
    return weights;
}

} // namespace detail

/// Cotangent stiffness matrix and lumped mass. W_ij = -(cot a + cot b)/2 on
/// edges, diagonal holds the negated row sum; the pair (W, M) defines the
/// generalized problem W phi = lambda M phi.
inline LaplacianPair cotan_laplacian(const TriangleMesh& mesh) {
    const auto weights = detail::edge_cotan_weights(mesh);
    const Eigen::Index n = mesh.num_vertices();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(weights.size() * 2 + static_cast<std::size_t>(n));
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (const auto& e : mesh.edges()) { // sorted order: canonical entries
        const double w = weights.at(detail::edge_key(e[0], e[1]));
        triplets.emplace_back(e[0], e[1], -w);
        triplets.emplace_back(e[1], e[0], -w);
        diag[e[0]] += w;
        diag[e[1]] += w;
    }
    for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, diag[i]);
    LaplacianPair out;
    out.stiffness.resize(n, n);
    out.stiffness.setFromTriplets(triplets.begin(), triplets.end());
    out.mass = vertex_areas(mesh);
    return out;
}

/// Per-vertex orthonormal tangent frames plus the intrinsic angular layout of
/// each one-ring. Neighbors are stored counter-clockwise; layout angles are
/// the cumulative corner angles rescaled to 2*pi (interior) or pi (boundary).
/// e1 points along the first ring edge, e2 = n x e1.
struct TangentFrameField {
    Eigen::MatrixX3d e1, e2, normal;
    std::vector<std::vector<int>> ring;         // neighbor indices, CCW
    std::vector<std::vector<double>> angle;     // layout angle per ring edge
    std::vector<std::vector<double>> length;    // 3D length per ring edge
    std::vector<std::vector<int>> reverse_slot; // position of i in ring[ring[i][k]]
    std::vector<char> interior;

    Eigen::Index num_vertices() const { return e1.rows(); }

    /// Intrinsic edge vector of ring slot k at vertex i, as a complex number
    /// in frame i.
    Complex edge_vector(int i, int k) const {
        const double a = angle[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        const double l = length[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        return {l * std::cos(a), l * std::sin(a)};
    }

    /// Parallel transport coefficient carrying frame-j coordinates to frame i,
    /// for ring slot k of vertex i (j = ring[i][k]). Unit modulus.
    Complex transport(int i, int k) const {
        const int j = ring[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        const int slot = reverse_slot[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        const double delta = angle[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] -
                             angle[static_cast<std::size_t>(j)][static_cast<std::size_t>(slot)];
        return {-std::cos(delta), -std::sin(delta)};
    }
};

inline TangentFrameField build_tangent_frames(const TriangleMesh& mesh) {
    const Eigen::Index n = mesh.num_vertices();
    const auto& V = mesh.vertices();
    const auto& F = mesh.faces();

    // third[(v,w)] = u for each face corner (v,w,u); drives the CCW ring walk.
    std::unordered_map<std::uint64_t, int> third;
    third.reserve(static_cast<std::size_t>(mesh.num_faces()) * 3);
    auto dkey = [](int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    };
    std::vector<int> first_target(static_cast<std::size_t>(n), -1);
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int a = F(f, c), b = F(f, (c + 1) % 3), d = F(f, (c + 2) % 3);
            third[dkey(a, b)] = d;
            if (first_target[static_cast<std::size_t>(a)] < 0)
                first_target[static_cast<std::size_t>(a)] = b;
        }
    }

    TangentFrameField frames;
    frames.e1.resize(n, 3);
    frames.e2.resize(n, 3);
    frames.normal.resize(n, 3);
    frames.ring.resize(static_cast<std::size_t>(n));
    frames.angle.resize(static_cast<std::size_t>(n));
    frames.length.resize(static_cast<std::size_t>(n));
    frames.reverse_slot.resize(static_cast<std::size_t>(n));
    frames.interior.assign(static_cast<std::size_t>(n), 0);

    // Area-weighted vertex normals.
    Eigen::MatrixX3d vertex_normals = Eigen::MatrixX3d::Zero(n, 3);
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Vector3d u = V.row(F(f, 1)) - V.row(F(f, 0));
        const Eigen::Vector3d w = V.row(F(f, 2)) - V.row(F(f, 0));
        const Eigen::Vector3d area_normal = 0.5 * u.cross(w);
        for (int c = 0; c < 3; ++c) vertex_normals.row(F(f, c)) += area_normal.transpose();
    }

    for (int v = 0; v < n; ++v) {
        if (first_target[static_cast<std::size_t>(v)] < 0)
            throw FrameError("vertex " + std::to_string(v) + " has no incident face");

        // Walk the fan CCW from the first incident edge. If the walk hits a
        // boundary, restart from the CCW-most boundary edge so the ring stays
        // a single contiguous fan.
        auto walk = [&](int start) {
            std::vector<int> targets;
            int current = start;
            while (true) {
                targets.push_back(current);
                auto it = third.find(dkey(v, current));
                if (it == third.end()) return std::make_pair(targets, false); // hit boundary
                current = it->second;
                if (current == start) return std::make_pair(targets, true); // closed fan
                if (targets.size() > static_cast<std::size_t>(n))
                    throw FrameError("non-manifold fan at vertex " + std::to_string(v));
            }
        };
        auto [targets, closed] = walk(first_target[static_cast<std::size_t>(v)]);
        if (!closed) {
            // Boundary vertex: restart from the CCW-most boundary edge, the
            // outgoing edge that is not the successor of any other outgoing
            // edge, so the ring is one contiguous fan.
            std::vector<int> outgoing;
            for (Eigen::Index f = 0; f < mesh.num_faces(); ++f)
                for (int c = 0; c < 3; ++c)
                    if (F(f, c) == v) outgoing.push_back(F(f, (c + 1) % 3));
            int start = -1;
            for (int candidate : outgoing) {
                bool is_successor = false;
                for (int other : outgoing)
                    if (third.at(dkey(v, other)) == candidate) is_successor = true;
                if (!is_successor) {
                    start = candidate;
                    break;
                }
            }
            if (start < 0) throw FrameError("non-manifold fan at vertex " + std::to_string(v));
            auto [boundary_targets, boundary_closed] = walk(start);
            targets = std::move(boundary_targets);
            closed = boundary_closed;
        }
        frames.interior[static_cast<std::size_t>(v)] = closed ? 1 : 0;

        const std::size_t m = targets.size();
        if ((closed && m < 3) || (!closed && m < 2))
            throw FrameError("one-ring of vertex " + std::to_string(v) + " is too small");

        // Corner angles between consecutive ring edges, rescaled layout.
        std::vector<double> corner(m, 0.0);
        double total = 0.0;
        const Eigen::Vector3d p = V.row(v);
        const std::size_t corners = closed ? m : m - 1;
        for (std::size_t k = 0; k < corners; ++k) {
            const Eigen::Vector3d a = Eigen::Vector3d(V.row(targets[k])) - p;
            const Eigen::Vector3d b =
                Eigen::Vector3d(V.row(targets[(k + 1) % m])) - p;
            corner[k] = std::atan2(a.cross(b).norm(), a.dot(b));
            total += corner[k];
        }
        if (!(total > 0.0))
            throw FrameError("zero total incident angle at vertex " + std::to_string(v));
        // Interior fans rescale to 2*pi; boundary fans keep their raw angles
        // (a pi convention would fold convex corners onto a line).
        const double scale = closed ? 2.0 * kPi / total : 1.0;

        auto& ring = frames.ring[static_cast<std::size_t>(v)];
        auto& angle = frames.angle[static_cast<std::size_t>(v)];
        auto& length = frames.length[static_cast<std::size_t>(v)];
        ring = targets;
        angle.resize(m);
        length.resize(m);
        double cumulative = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            angle[k] = cumulative;
            length[k] = (Eigen::Vector3d(V.row(targets[k])) - p).norm();
            cumulative += corner[k] * scale;
        }

        // Frame: normal from area-weighted average, e1 along the first ring
        // edge projected to the tangent plane.
        Eigen::Vector3d nrm = vertex_normals.row(v);
        const double nrm_len = nrm.norm();
        if (!(nrm_len > 0.0))
            throw FrameError("degenerate normal at vertex " + std::to_string(v));
        nrm /= nrm_len;
        Eigen::Vector3d first_edge = Eigen::Vector3d(V.row(targets[0])) - p;
        Eigen::Vector3d t1 = first_edge - first_edge.dot(nrm) * nrm;
        const double t1_len = t1.norm();
        if (!(t1_len > 0.0))
            throw FrameError("first incident edge is normal to the surface at vertex " +
                             std::to_string(v));
        t1 /= t1_len;
        frames.normal.row(v) = nrm.transpose();
        frames.e1.row(v) = t1.transpose();
        frames.e2.row(v) = nrm.cross(t1).transpose();
    }

    // Reverse slots, needed for the per-edge transport lookups.
    for (int v = 0; v < n; ++v) {
        auto& rev = frames.reverse_slot[static_cast<std::size_t>(v)];
        const auto& ring = frames.ring[static_cast<std::size_t>(v)];
        rev.resize(ring.size(), -1);
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const auto& other = frames.ring[static_cast<std::size_t>(ring[k])];
            for (std::size_t s = 0; s < other.size(); ++s)
                if (other[s] == v) rev[k] = static_cast<int>(s);
            if (rev[k] < 0)
                throw FrameError("asymmetric ring adjacency at vertex " + std::to_string(v));
        }
    }
    return frames;
}

/// Vertex connection Laplacian: L_ii = sum_j w_ij, L_ij = -w_ij * r_ij with
/// r_ij the frame-j to frame-i transport. Hermitian positive semi-definite;
/// negative cotan weights are kept as-is.
inline SparseMatrixcd connection_laplacian(const TriangleMesh& mesh,
                                           const TangentFrameField& frames) {
    const auto weights = detail::edge_cotan_weights(mesh);
    const Eigen::Index n = mesh.num_vertices();
    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(weights.size() * 2 + static_cast<std::size_t>(n));
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto& ring = frames.ring[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const int j = ring[k];
            if (j < i) continue; // handle each undirected edge from its low endpoint
            const double w = weights.at(detail::edge_key(i, j));
            const Complex r_ij = frames.transport(i, static_cast<int>(k));
            triplets.emplace_back(i, j, -w * r_ij);
            triplets.emplace_back(j, i, -w * std::conj(r_ij)); // exact Hermitian assembly
            diag[i] += w;
            diag[j] += w;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, Complex(diag[i], 0.0));
    SparseMatrixcd L(n, n);
    L.setFromTriplets(triplets.begin(), triplets.end());
    return L;
}

/// Per-vertex gradient by one-ring least squares in the intrinsic layout:
/// fits f(j) - f(i) against the layout edge vectors, returning the gradient
/// as a complex coefficient in frame i. Exact for linear functions on a flat
/// one-ring.
inline SparseMatrixcd gradient_operator(const TriangleMesh& mesh,
                                        const TangentFrameField& frames) {
    const Eigen::Index n = mesh.num_vertices();
    std::vector<Eigen::Triplet<Complex>> triplets;
    for (int i = 0; i < n; ++i) {
        const auto& ring = frames.ring[static_cast<std::size_t>(i)];
        const std::size_t m = ring.size();
        Eigen::Matrix2d normal_matrix = Eigen::Matrix2d::Zero();
        std::vector<Eigen::Vector2d> dirs(m);
        for (std::size_t k = 0; k < m; ++k) {
            const Complex e = frames.edge_vector(i, static_cast<int>(k));
            dirs[k] = Eigen::Vector2d(e.real(), e.imag());
            normal_matrix += dirs[k] * dirs[k].transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(normal_matrix);
        if (es.eigenvalues()[0] <= 1e-12 * es.eigenvalues()[1])
            throw RankError("one-ring directions at vertex " + std::to_string(i) +
                            " span rank < 2");
        const Eigen::Matrix2d inv = normal_matrix.inverse();
        Complex diag_coeff(0.0, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            const Eigen::Vector2d c = inv * dirs[k];
            const Complex coeff(c[0], c[1]);
            triplets.emplace_back(i, ring[k], coeff);
            diag_coeff -= coeff;
        }
        triplets.emplace_back(i, i, diag_coeff);
    }
    SparseMatrixcd G(n, n);
    G.setFromTriplets(triplets.begin(), triplets.end());
    return G;
}

/// Divergence as the negative mass-weighted adjoint of the gradient:
/// div X = -M^{-1} Re(G^H M X), so <Gf, X>_M + <f, div X>_M = 0 exactly.
/// Applies columnwise to a matrix of tangent fields.
inline Eigen::MatrixXd divergence(const SparseMatrixcd& grad, const Eigen::VectorXd& mass,
                                  const Eigen::MatrixXcd& fields) {
    const Eigen::MatrixXcd weighted = mass.cast<Complex>().asDiagonal() * fields;
    Eigen::MatrixXd out = -(grad.adjoint() * weighted).real();
    out.array().colwise() /= mass.array();
    return out;
}

/// Flips the tangent-plane orientation: e2 and the normal are negated and all
/// layout angles change sign, so complex coordinates are conjugated. Involution.
inline TangentFrameField conjugate_orientation(const TangentFrameField& frames) {
    TangentFrameField out = frames;
    out.e2 = -frames.e2;
    out.normal = -frames.normal;
    for (auto& angles : out.angle)
        for (double& a : angles) a = -a;
    return out;
}

} // namespace duofm
