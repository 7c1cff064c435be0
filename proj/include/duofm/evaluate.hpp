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

#include <cstdio>
#include <queue>
#include <unordered_map>

#include <duofm/convert.hpp>
#include <duofm/mesh.hpp>

namespace duofm {

/// Edge-graph adjacency with Euclidean edge lengths.
struct EdgeGraph {
    std::vector<std::vector<std::pair<int, double>>> neighbors;

    static EdgeGraph build(const TriangleMesh& mesh) {
        EdgeGraph g;
        g.neighbors.resize(static_cast<std::size_t>(mesh.num_vertices()));
        for (const auto& e : mesh.edges()) {
            const double len =
                (mesh.vertices().row(e[0]) - mesh.vertices().row(e[1])).norm();
            g.neighbors[static_cast<std::size_t>(e[0])].emplace_back(e[1], len);
            g.neighbors[static_cast<std::size_t>(e[1])].emplace_back(e[0], len);
        }
        return g;
    }
};

namespace detail {

inline Eigen::VectorXd dijkstra(const EdgeGraph& graph, int source) {
    const std::size_t n = graph.neighbors.size();
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                     std::numeric_limits<double>::infinity());
    // (distance, vertex) pairs; the vertex index breaks ties deterministically.
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>>
        queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > dist[v]) continue;
        for (const auto& [w, len] : graph.neighbors[static_cast<std::size_t>(v)]) {
            const double nd = d + len;
            if (nd < dist[w]) {
                dist[w] = nd;
                queue.emplace(nd, w);
            }
        }
    }
    return dist;
}

} // namespace detail

/// Dijkstra distances on the edge graph from each source vertex; row s of the
/// result holds distances from sources[s]. Throws DisconnectedError naming
/// unreachable vertices.
inline Eigen::MatrixXd geodesic_distances(const TriangleMesh& mesh,
                                          const std::vector<int>& sources) {
    const EdgeGraph graph = EdgeGraph::build(mesh);
    Eigen::MatrixXd table(static_cast<Eigen::Index>(sources.size()), mesh.num_vertices());
    std::vector<std::string> unreachable_notes(sources.size());
    detail::parallel_for(static_cast<long>(sources.size()), [&](long s) {
        const Eigen::VectorXd dist = detail::dijkstra(graph, sources[static_cast<std::size_t>(s)]);
        for (Eigen::Index v = 0; v < dist.size(); ++v) {
            if (std::isinf(dist[v])) {
                unreachable_notes[static_cast<std::size_t>(s)] =
                    "vertex " + std::to_string(v) + " unreachable from " +
                    std::to_string(sources[static_cast<std::size_t>(s)]);
                break;
            }
        }
        table.row(s) = dist.transpose();
    });
    for (const auto& note : unreachable_notes)
        if (!note.empty()) throw DisconnectedError(note);
    return table;
}

/// Correspondence quality report: mean geodesic error normalized by
/// sqrt(target area) and scaled by 100, plus the cumulative accuracy curve.
struct EvalReport {
    double mean_error_x100 = 0.0;
    std::vector<std::pair<double, double>> pmf; // (threshold, fraction <= threshold)
    long n_evaluated = 0;
};

inline EvalReport evaluate(const PointMap& map, const std::vector<int>& ground_truth,
                           const TriangleMesh& target) {
    if (map.indices.size() != ground_truth.size())
        throw DimensionError("evaluate: ground truth does not cover the map");
    const double scale = std::sqrt(total_area(target));
    const EdgeGraph graph = EdgeGraph::build(target);

    // One Dijkstra per distinct ground-truth image.
    std::vector<int> unique_sources;
    std::unordered_map<int, int> source_slot;
    for (int gt : ground_truth) {
        if (source_slot.emplace(gt, static_cast<int>(unique_sources.size())).second)
            unique_sources.push_back(gt);
    }
    std::vector<Eigen::VectorXd> distances(unique_sources.size());
    detail::parallel_for(static_cast<long>(unique_sources.size()), [&](long s) {
        distances[static_cast<std::size_t>(s)] =
            detail::dijkstra(graph, unique_sources[static_cast<std::size_t>(s)]);
    });

    EvalReport report;
    report.n_evaluated = static_cast<long>(map.indices.size());
    Eigen::VectorXd errors(report.n_evaluated);
    for (long i = 0; i < report.n_evaluated; ++i) {
        const auto& dist = distances[static_cast<std::size_t>(
            source_slot.at(ground_truth[static_cast<std::size_t>(i)]))];
        const double d = dist[map.indices[static_cast<std::size_t>(i)]];
        if (std::isinf(d))
            throw DisconnectedError("prediction for vertex " + std::to_string(i) +
                                    " is unreachable from its ground truth");
        errors[i] = d / scale;
    }
    report.mean_error_x100 = errors.mean() * 100.0;
    report.pmf.reserve(100);
    for (int j = 0; j < 100; ++j) {
        const double threshold = 0.25 * j / 99.0;
        const double fraction =
            static_cast<double>((errors.array() <= threshold).count()) /
            static_cast<double>(report.n_evaluated);
        report.pmf.emplace_back(threshold, fraction);
    }
    return report;
}

/// Fixed-key-order JSON text for an EvalReport.
inline std::string to_json(const EvalReport& report) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    std::string out = "{\n";
    out += "  \"mean_geodesic_error_x100\": " + num(report.mean_error_x100) + ",\n";
    out += "  \"n_evaluated\": " + std::to_string(report.n_evaluated) + ",\n";
    out += "  \"pmf\": [";
    for (std::size_t i = 0; i < report.pmf.size(); ++i) {
        if (i) out += ", ";
        out += "[" + num(report.pmf[i].first) + ", " + num(report.pmf[i].second) + "]";
    }
    out += "]\n}\n";
    return out;
}

/// Ground-truth files: one target index per line ('#' comments allowed).
inline std::vector<int> load_ground_truth(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path);
    std::vector<int> gt;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        long v;
        while (ss >> v) gt.push_back(static_cast<int>(v));
    }
    return gt;
}

} // namespace duofm
