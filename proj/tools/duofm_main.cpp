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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <duofm/config.hpp>
#include <duofm/duofm.hpp>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitComputeFailure = 1;
constexpr int kExitUsage = 2;

std::string cache_path_for(const duofm::RunConfig& cfg, const std::string& mesh_path) {
    return (fs::path(cfg.resolved_cache_dir()) / (fs::path(mesh_path).stem().string() + ".duof"))
        .string();
}

void write_cache_meta(const std::string& cache_path, const std::string& mesh_path,
                      const duofm::RunConfig& cfg) {
    std::ofstream os(cache_path + ".meta");
    os << "mesh=" << fs::absolute(mesh_path).string() << '\n'
       << "k_c=" << cfg.pipeline.k_c << '\n'
       << "k_q=" << cfg.pipeline.k_q << '\n';
}

std::string mesh_path_from_meta(const std::string& cache_path) {
    std::ifstream is(cache_path + ".meta");
    if (!is)
        throw duofm::ParseError("missing sidecar " + cache_path +
                                ".meta (needed to locate the mesh)");
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("mesh=", 0) == 0) return line.substr(5);
    throw duofm::ParseError("sidecar " + cache_path + ".meta has no mesh entry");
}

/// Loads a shape from a mesh file or a .duof cache file. Mesh arguments use a
/// matching cache when one is present and valid, and fall back to computing
/// in memory.
duofm::ShapeData load_shape(const std::string& arg, const duofm::RunConfig& cfg) {
    std::string mesh_path = arg;
    std::string cache_path;
    if (fs::path(arg).extension() == ".duof") {
        cache_path = arg;
        mesh_path = mesh_path_from_meta(arg);
    } else {
        const std::string candidate = cache_path_for(cfg, arg);
        if (fs::exists(candidate)) cache_path = candidate;
    }
    duofm::TriangleMesh mesh = duofm::load_mesh(mesh_path);
    if (!cache_path.empty()) {
        try {
            const duofm::SpectralCacheBundle bundle =
                duofm::cache_read_for_mesh(cache_path, mesh);
            return duofm::prepare_shape(std::move(mesh), cfg.pipeline, &bundle);
        } catch (const duofm::Error& e) {
            if (fs::path(arg).extension() == ".duof") throw; // explicit cache must be usable
            std::cerr << "warning: ignoring cache " << cache_path << ": " << e.what() << '\n';
        }
    }
    return duofm::prepare_shape(std::move(mesh), cfg.pipeline);
}

int cmd_gen_icosphere(int subdiv, double radius, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const duofm::TriangleMesh mesh = duofm::generate_icosphere(subdiv, radius);
    const std::string path =
        (fs::path(out_dir) / ("icosphere_" + std::to_string(subdiv) + ".off")).string();
    duofm::save_mesh(mesh, path, duofm::MeshFormat::OFF);
    std::cout << path << " vertices=" << mesh.num_vertices() << " faces=" << mesh.num_faces()
              << '\n';
    return kExitOk;
}

int cmd_gen_blob(std::uint64_t seed, int resolution, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto [mesh, symmetry] = duofm::generate_symmetric_blob(seed, resolution);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "blob_%04llu", static_cast<unsigned long long>(seed));
    const std::string mesh_path = (fs::path(out_dir) / (std::string(stem) + ".off")).string();
    const std::string sym_path = (fs::path(out_dir) / (std::string(stem) + ".sym")).string();
    duofm::save_mesh(mesh, mesh_path, duofm::MeshFormat::OFF);
    duofm::save_symmetry(symmetry, sym_path);
    std::cout << mesh_path << " vertices=" << mesh.num_vertices()
              << " faces=" << mesh.num_faces() << '\n';
    return kExitOk;
}

int cmd_precompute(const std::string& mesh_path, const duofm::RunConfig& cfg) {
    fs::create_directories(cfg.resolved_cache_dir());
    const std::string cache_path = cache_path_for(cfg, mesh_path);
    duofm::TriangleMesh mesh = duofm::load_mesh(mesh_path);

    if (fs::exists(cache_path)) {
        try {
            const duofm::SpectralCacheBundle bundle =
                duofm::cache_read_for_mesh(cache_path, mesh);
            if (bundle.real_basis.size() >= cfg.pipeline.k_c &&
                bundle.cx_basis.size() >= cfg.pipeline.k_q) {
                write_cache_meta(cache_path, mesh_path, cfg);
                std::cout << "cache hit: " << cache_path << '\n';
                return kExitOk;
            }
            std::cerr << "cache has smaller bases than requested, rebuilding\n";
        } catch (const duofm::Error& e) {
            std::cerr << "warning: rebuilding cache (" << e.what() << ")\n";
        }
    }

    const duofm::ShapeData shape = duofm::prepare_shape(std::move(mesh), cfg.pipeline);
    duofm::cache_write(cache_path, duofm::make_cache_bundle(shape));
    write_cache_meta(cache_path, mesh_path, cfg);
    const std::string desc_path =
        (fs::path(cfg.resolved_cache_dir()) / (fs::path(mesh_path).stem().string() + ".desc"))
            .string();
    duofm::save_descriptors(shape.inputs, desc_path);
    std::cout << "cache written: " << cache_path << '\n';
    return kExitOk;
}

struct MatchArgs {
    std::string source, target;
    std::string probe_path, gt_path, sym_path;
    bool mirrored = false;
};

int cmd_match(const MatchArgs& args, const duofm::RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const duofm::ShapeData source = load_shape(args.source, cfg);
    const duofm::ShapeData target = load_shape(args.target, cfg);

    duofm::MatchOptions options;
    duofm::SelfSymmetry symmetry;
    if (!args.probe_path.empty()) options.probe = duofm::load_probe(args.probe_path).W;
    if (args.mirrored) {
        std::string sym_path = args.sym_path;
        if (sym_path.empty()) {
            sym_path = args.target;
            const auto dot = sym_path.find_last_of('.');
            sym_path = sym_path.substr(0, dot) + ".sym";
        }
        symmetry = duofm::load_symmetry(sym_path);
        duofm::validate_symmetry(target.mesh, symmetry);
        options.mirrored_descriptors = true;
        options.target_symmetry = &symmetry;
    }

    const duofm::MatchResult result = duofm::match_shapes(source, target, options);

    const fs::path out(cfg.out_dir);
    duofm::save_functional_map(result.C, (out / "C.fmap").string());
    duofm::save_complex_map(result.Q, (out / "Q.qmap").string());
    duofm::save_point_map(result.p2p_c, (out / "p2p_C.txt").string());
    duofm::save_point_map(result.p2p_q, (out / "p2p_Q.txt").string());

    {
        std::ofstream report((out / "match_report.txt").string());
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "orientation_C=%d\norientation_Q=%d\nq_ortho=%.17g\n"
                      "pushforward_max=%.17g\npushforward_mean=%.17g\n",
                      result.p2p_c.orientation, result.p2p_q.orientation,
                      result.pushforward.q_ortho, result.pushforward.max_residual,
                      result.pushforward.mean_residual);
        report << buf;
    }
    std::cout << "orientation_C=" << result.p2p_c.orientation
              << " orientation_Q=" << result.p2p_q.orientation
              << " q_ortho=" << result.pushforward.q_ortho << '\n';

    if (!args.gt_path.empty()) {
        const std::vector<int> gt = duofm::load_ground_truth(args.gt_path);
        const duofm::EvalReport eval_c = duofm::evaluate(result.p2p_c, gt, target.mesh);
        const duofm::EvalReport eval_q = duofm::evaluate(result.p2p_q, gt, target.mesh);
        std::ofstream((out / "eval_C.json").string()) << duofm::to_json(eval_c);
        std::ofstream((out / "eval_Q.json").string()) << duofm::to_json(eval_q);
        std::cout << "mean_error_C_x100=" << eval_c.mean_error_x100
                  << " mean_error_Q_x100=" << eval_q.mean_error_x100 << '\n';
    }
    return kExitOk;
}

int cmd_refine(const std::string& pairs_path, const duofm::RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::ifstream is(pairs_path);
    if (!is) throw duofm::ParseError("cannot open pair list " + pairs_path);

    std::vector<std::pair<std::string, std::string>> pair_paths;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string a, b;
        if (ss >> a >> b) pair_paths.emplace_back(a, b);
    }
    if (pair_paths.empty()) throw duofm::ParseError("pair list is empty");

    std::map<std::string, std::unique_ptr<duofm::ShapeData>> shapes;
    auto shape_for = [&](const std::string& path) -> const duofm::ShapeData& {
        auto it = shapes.find(path);
        if (it == shapes.end())
            it = shapes
                     .emplace(path,
                              std::make_unique<duofm::ShapeData>(load_shape(path, cfg)))
                     .first;
        return *it->second;
    };

    std::vector<duofm::PairState> pairs;
    std::vector<std::string> pair_ids;
    for (const auto& [a, b] : pair_paths) {
        pairs.push_back(duofm::make_pair_state(shape_for(a), shape_for(b), cfg.pipeline, false,
                                               nullptr, a + ":" + b));
        pair_ids.push_back(a + ":" + b);
    }

    const Eigen::Index d_in = pairs.front().proj_m.cols();
    const Eigen::MatrixXd w0 =
        duofm::initial_probe(d_in, cfg.probe_dim, cfg.train.seed);
    const duofm::TrainResult result = duofm::optimize(pairs, cfg.train, w0);

    const fs::path out(cfg.out_dir);
    duofm::save_probe(result.probe, (out / "probe.ckpt").string());
    {
        std::ofstream log((out / "train.log").string());
        for (const auto& record : result.history)
            log << duofm::format_step_record(
                       record, pair_ids[static_cast<std::size_t>(record.pair_index)])
                << '\n';
    }
    std::cout << "steps=" << result.history.size()
              << " final_loss=" << result.history.back().final_loss << '\n';
    return kExitOk;
}

int cmd_eval(const std::string& p2p_path, const std::string& gt_path,
             const std::string& target_path, const duofm::RunConfig& cfg,
             const std::string& out_file) {
    const duofm::PointMap map = duofm::load_point_map(p2p_path);
    const std::vector<int> gt = duofm::load_ground_truth(gt_path);
    const duofm::TriangleMesh target = duofm::load_mesh(target_path);
    const duofm::EvalReport report = duofm::evaluate(map, gt, target);
    const std::string json = duofm::to_json(report);
    if (out_file.empty()) {
        std::cout << json;
    } else {
        fs::create_directories(cfg.out_dir);
        std::ofstream(out_file) << json;
        std::cout << "mean_error_x100=" << report.mean_error_x100 << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"duofm: orientation-aware functional map correspondence"};
    app.require_subcommand(1);

    std::string config_path;
    duofm::RunConfig cfg;
    app.add_option("--config", config_path, "key=value config file")->expected(1);

    // Per-flag overrides, applied after the config file.
    std::optional<int> opt_kc, opt_kq, opt_epochs, opt_threads, opt_probe_dim, opt_wks;
    std::optional<double> opt_lambda, opt_lr, opt_w_ortho, opt_w_q_ortho;
    std::optional<std::uint64_t> opt_seed;
    std::optional<std::string> opt_cache_dir, opt_out_dir;
    app.add_option("--k-c", opt_kc, "Laplace-Beltrami basis size");
    app.add_option("--k-q", opt_kq, "connection-Laplacian basis size");
    app.add_option("--lambda", opt_lambda, "regularizer weight");
    app.add_option("--wks-energies", opt_wks, "WKS dimension");
    app.add_option("--w-ortho", opt_w_ortho, "weight of the C orthogonality loss");
    app.add_option("--w-q-ortho", opt_w_q_ortho, "weight of the Q orthogonality loss");
    app.add_option("--lr", opt_lr, "learning rate");
    app.add_option("--epochs", opt_epochs, "training epochs");
    app.add_option("--seed", opt_seed, "rng seed");
    app.add_option("--probe-dim", opt_probe_dim, "probe output dimension");
    app.add_option("--cache-dir", opt_cache_dir, "spectral cache directory");
    app.add_option("--out", opt_out_dir, "output directory");
    app.add_option("--threads", opt_threads, "worker thread cap (0 = hardware)");

    auto* gen = app.add_subcommand("gen", "generate test shapes");
    gen->fallthrough();
    gen->require_subcommand(1);
    int subdiv = 3;
    double radius = 1.0;
    auto* gen_ico = gen->add_subcommand("icosphere", "subdivided icosahedron");
    gen_ico->fallthrough();
    gen_ico->add_option("--subdiv", subdiv, "subdivision level")->check(CLI::Range(0, 6));
    gen_ico->add_option("--radius", radius, "sphere radius")
        ->check(CLI::PositiveNumber);
    std::uint64_t blob_seed = 0;
    int blob_resolution = 16;
    auto* gen_blob = gen->add_subcommand("blob", "mirror-symmetric bumpy blob");
    gen_blob->fallthrough();
    gen_blob->add_option("--seed", blob_seed, "generator seed");
    gen_blob->add_option("--resolution", blob_resolution, "ring resolution")
        ->check(CLI::Range(2, 35));

    std::string precompute_mesh;
    auto* precompute = app.add_subcommand("precompute", "build the spectral cache for a mesh");
    precompute->fallthrough();
    precompute->add_option("mesh", precompute_mesh, "mesh file")->required();

    MatchArgs match_args;
    auto* match = app.add_subcommand("match", "estimate maps between two shapes");
    match->fallthrough();
    match->add_option("source", match_args.source, "source mesh or .duof cache")->required();
    match->add_option("target", match_args.target, "target mesh or .duof cache")->required();
    match->add_option("--probe", match_args.probe_path, "probe checkpoint");
    match->add_option("--gt", match_args.gt_path, "ground-truth indices for evaluation");
    match->add_flag("--mirrored", match_args.mirrored,
                    "compose target descriptors with its self-symmetry");
    match->add_option("--sym", match_args.sym_path, "symmetry file for --mirrored");

    std::string refine_pairs;
    auto* refine = app.add_subcommand("refine", "optimize a descriptor probe over pairs");
    refine->fallthrough();
    refine->add_option("pairs", refine_pairs, "pair list file (two mesh paths per line)")
        ->required();

    std::string eval_p2p, eval_gt, eval_mesh, eval_out;
    auto* eval = app.add_subcommand("eval", "geodesic evaluation of a point map");
    eval->fallthrough();
    eval->add_option("p2p", eval_p2p, "point map file")->required();
    eval->add_option("gt", eval_gt, "ground-truth indices")->required();
    eval->add_option("target", eval_mesh, "target mesh")->required();
    eval->add_option("--report", eval_out, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (!config_path.empty()) cfg = duofm::load_config(config_path);
        if (opt_kc) cfg.pipeline.k_c = *opt_kc;
        if (opt_kq) cfg.pipeline.k_q = *opt_kq;
        if (opt_lambda) cfg.pipeline.lambda = *opt_lambda;
        if (opt_wks) cfg.pipeline.wks.num_energies = *opt_wks;
        if (opt_w_ortho) cfg.train.w_ortho = *opt_w_ortho;
        if (opt_w_q_ortho) cfg.train.w_q_ortho = *opt_w_q_ortho;
        if (opt_lr) cfg.train.learning_rate = *opt_lr;
        if (opt_epochs) cfg.train.epochs = *opt_epochs;
        if (opt_seed) cfg.train.seed = *opt_seed;
        if (opt_probe_dim) cfg.probe_dim = *opt_probe_dim;
        if (opt_cache_dir) cfg.cache_dir = *opt_cache_dir;
        if (opt_out_dir) cfg.out_dir = *opt_out_dir;
        if (opt_threads) cfg.threads = *opt_threads;
        cfg.validate();
    } catch (const duofm::ParseError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    }
    duofm::set_thread_cap(cfg.threads);

    try {
        if (gen_ico->parsed()) return cmd_gen_icosphere(subdiv, radius, cfg.out_dir);
        if (gen_blob->parsed()) return cmd_gen_blob(blob_seed, blob_resolution, cfg.out_dir);
        if (precompute->parsed()) return cmd_precompute(precompute_mesh, cfg);
        if (match->parsed()) return cmd_match(match_args, cfg);
        if (refine->parsed()) return cmd_refine(refine_pairs, cfg);
        if (eval->parsed()) return cmd_eval(eval_p2p, eval_gt, eval_mesh, cfg, eval_out);
    } catch (const duofm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputeFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputeFailure;
    }
    return kExitUsage;
}
