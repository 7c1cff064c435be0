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

#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <duofm/detail/parallel.hpp>
#include <duofm/mesh.hpp>
#include <duofm/qmap.hpp>
#include <duofm/spectral.hpp>

namespace duofm {

enum class P2PMethod { RowNNC, DiracDivQ };

inline const char* to_string(P2PMethod m) {
    return m == P2PMethod::RowNNC ? "row_nn_C" : "dirac_div_Q";
}

/// Per-source-vertex correspondence into a target mesh.
struct PointMap {
    std::vector<int> indices;
    P2PMethod method = P2PMethod::RowNNC;
    int orientation = 0; // +1 preserving, -1 reversing, 0 undetermined
};

namespace detail {

/// Index of the nearest row of `haystack` for every row of `needles`.
/// Ties break to the lowest index; rows are scanned in order so results are
/// deterministic and match a plain quadratic scan exactly.
inline std::vector<int> nearest_rows(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.cols() != B.cols())
        throw DimensionError("nearest_rows: embedding dimensions differ");
    const Eigen::Index rows = A.rows();
    const Eigen::Index candidates = B.rows();
    std::vector<int> out(static_cast<std::size_t>(rows), 0);
    detail::parallel_for(rows, [&](long i) {
        double best = std::numeric_limits<double>::infinity();
        int best_index = 0;
        for (Eigen::Index j = 0; j < candidates; ++j) {
            double dist = 0.0;
            for (Eigen::Index c = 0; c < A.cols(); ++c) {
                const double d = A(i, c) - B(j, c);
                dist += d * d;
            }
            if (dist < best) {
                best = dist;
                best_index = static_cast<int>(j);
            }
        }
        out[static_cast<std::size_t>(i)] = best_index;
    });
    return out;
}

} // namespace detail

/// Point map recovery from a real functional map: nearest-neighbor search
/// between the rows of Phi_M C and the rows of Phi_N.
inline PointMap p2p_from_C(const FunctionalMap& map, const RealSpectralBasis& basis_m,
                           const RealSpectralBasis& basis_n) {
    if (map.C.rows() != basis_m.size() || map.C.cols() != basis_n.size())
        throw DimensionError("p2p_from_C: map does not match bases");
    const Eigen::MatrixXd embedded_m = basis_m.phi * map.C;
    PointMap out;
    out.method = P2PMethod::RowNNC;
    out.indices = detail::nearest_rows(embedded_m, basis_n.phi);
    return out;
}

/// Point map recovery from a complex functional map: nearest-neighbor search
/// between div_M Psi_M and div_N (Psi_N Q), the Dirac-function images of the
/// transported basis fields.
inline PointMap p2p_from_Q(const ComplexFunctionalMap& map, const ComplexSpectralBasis& basis_m,
                           const ComplexSpectralBasis& basis_n, const SparseMatrixcd& grad_m,
                           const SparseMatrixcd& grad_n) {
    if (map.Q.rows() != basis_n.size() || map.Q.cols() != basis_m.size())
        throw DimensionError("p2p_from_Q: map does not match bases");
    const Eigen::MatrixXd source_embedding =
        divergence(grad_m, basis_m.mass, Eigen::MatrixXcd(basis_m.psi));
    const Eigen::MatrixXd target_embedding =
        divergence(grad_n, basis_n.mass, Eigen::MatrixXcd(basis_n.psi * map.Q));
    PointMap out;
    out.method = P2PMethod::DiracDivQ;
    out.indices = detail::nearest_rows(source_embedding, target_embedding);
    return out;
}

/// Votes on whether a point map preserves orientation: each source face's
/// image triangle normal is compared against the target's own outward normal
/// there. Returns +1 when >= 90% of the non-degenerate image faces agree,
/// -1 when >= 90% disagree, 0 otherwise.
inline int orientation_sign(const PointMap& map, const TriangleMesh& source,
                            const TriangleMesh& target) {
    if (static_cast<Eigen::Index>(map.indices.size()) != source.num_vertices())
        throw DimensionError("orientation_sign: map does not cover the source mesh");
    // Area-weighted target vertex normals.
    Eigen::MatrixX3d target_normals = Eigen::MatrixX3d::Zero(target.num_vertices(), 3);
    for (Eigen::Index f = 0; f < target.num_faces(); ++f) {
        const Eigen::Vector3d u =
            target.vertices().row(target.faces()(f, 1)) - target.vertices().row(target.faces()(f, 0));
        const Eigen::Vector3d v =
            target.vertices().row(target.faces()(f, 2)) - target.vertices().row(target.faces()(f, 0));
        const Eigen::Vector3d an = 0.5 * u.cross(v);
        for (int c = 0; c < 3; ++c) target_normals.row(target.faces()(f, c)) += an.transpose();
    }

    long agree = 0, disagree = 0;
    for (Eigen::Index f = 0; f < source.num_faces(); ++f) {
        const int a = map.indices[static_cast<std::size_t>(source.faces()(f, 0))];
        const int b = map.indices[static_cast<std::size_t>(source.faces()(f, 1))];
        const int c = map.indices[static_cast<std::size_t>(source.faces()(f, 2))];
        if (a == b || b == c || a == c) continue; // degenerate image, excluded from the vote
        const Eigen::Vector3d pa = target.vertices().row(a);
        const Eigen::Vector3d pb = target.vertices().row(b);
        const Eigen::Vector3d pc = target.vertices().row(c);
        const Eigen::Vector3d image_normal = (pb - pa).cross(pc - pa);
        if (image_normal.norm() == 0.0) continue;
        const Eigen::Vector3d reference =
            target_normals.row(a) + target_normals.row(b) + target_normals.row(c);
        const double dot = image_normal.dot(reference);
        if (dot > 0.0) ++agree;
        else if (dot < 0.0) ++disagree;
    }
    const long votes = agree + disagree;
    if (votes == 0) return 0;
    if (agree >= 0.9 * static_cast<double>(votes)) return 1;
    if (disagree >= 0.9 * static_cast<double>(votes)) return -1;
    return 0;
}

/// Text format: "#duo-p2p v1 n=<n> method=<m> orientation=<s>" then one
/// target index per line.
inline void save_point_map(const PointMap& map, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    os << "#duo-p2p v1 n=" << map.indices.size() << " method=" << to_string(map.method)
       << " orientation=" << map.orientation << '\n';
    for (int idx : map.indices) os << idx << '\n';
    if (!os) throw ParseError("write failed for " + path);
}

inline PointMap load_point_map(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path);
    std::string header;
    if (!std::getline(is, header) || header.rfind("#duo-p2p v1 ", 0) != 0)
        throw ParseError("missing #duo-p2p v1 header", 1);
    PointMap map;
    std::size_t n = 0;
    {
        std::istringstream ss(header.substr(11));
        std::string field;
        while (ss >> field) {
            if (field.rfind("n=", 0) == 0) n = std::stoul(field.substr(2));
            if (field.rfind("method=", 0) == 0)
                map.method = field.substr(7) == "dirac_div_Q" ? P2PMethod::DiracDivQ
                                                              : P2PMethod::RowNNC;
            if (field.rfind("orientation=", 0) == 0)
                map.orientation = std::stoi(field.substr(12));
        }
    }
    long value = 0;
    while (is >> value) map.indices.push_back(static_cast<int>(value));
    if (map.indices.size() != n)
        throw ParseError("point map lists " + std::to_string(map.indices.size()) +
                         " entries, header says " + std::to_string(n));
    return map;
}

} // namespace duofm
