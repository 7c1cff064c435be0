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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <duofm/convert.hpp>
#include <duofm/mesh_io.hpp>
#include <duofm/refine.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& cwd) {
    const std::string command = "cd '" + cwd.string() + "' && '" + DUOFM_CLI_PATH + "' " + args +
                                " > cli_stdout.txt 2> cli_stderr.txt";
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) { return test_util::read_file(p.string()); }

} // namespace

TEST_CASE("cli end to end") {
    test_util::TempDir dir;
    const std::string flags = " --k-c 14 --k-q 7 --wks-energies 24 --cache-dir cache";

    SECTION("gen naming contract and usage errors") {
        CHECK(run_cli("gen blob --seed 7 --resolution 8 --out shapes", dir.path()) == 0);
        CHECK(fs::exists(dir.path() / "shapes/blob_0007.off"));
        CHECK(fs::exists(dir.path() / "shapes/blob_0007.sym"));

        CHECK(run_cli("gen icosphere --subdiv 3 --out shapes", dir.path()) == 0);
        const duofm::TriangleMesh ico =
            duofm::load_mesh((dir.path() / "shapes/icosphere_3.off").string());
        CHECK(ico.num_vertices() == 642);

        CHECK(run_cli("gen icosphere --subdiv 9 --out shapes", dir.path()) == 2);
        CHECK(run_cli("bogus-subcommand", dir.path()) == 2);
    }

    SECTION("precompute is idempotent and survives corruption") {
        REQUIRE(run_cli("gen blob --seed 3 --resolution 8 --out shapes", dir.path()) == 0);
        REQUIRE(run_cli("precompute shapes/blob_0003.off" + flags, dir.path()) == 0);
        CHECK(slurp(dir.path() / "cli_stdout.txt").find("cache written") != std::string::npos);

        REQUIRE(run_cli("precompute shapes/blob_0003.off" + flags, dir.path()) == 0);
        CHECK(slurp(dir.path() / "cli_stdout.txt").find("cache hit") != std::string::npos);

        // Corrupt one byte: the command warns and rebuilds.
        const fs::path cache = dir.path() / "cache/blob_0003.duof";
        std::string bytes = slurp(cache);
        bytes[bytes.size() / 3] ^= 0x10;
        test_util::write_file(cache.string(), bytes);
        REQUIRE(run_cli("precompute shapes/blob_0003.off" + flags, dir.path()) == 0);
        CHECK(slurp(dir.path() / "cli_stderr.txt").find("rebuilding") != std::string::npos);
        CHECK(slurp(dir.path() / "cli_stdout.txt").find("cache written") != std::string::npos);
    }

    SECTION("match on the identity pair, with and without ground truth") {
        REQUIRE(run_cli("gen blob --seed 4 --resolution 8 --out shapes", dir.path()) == 0);
        REQUIRE(run_cli("precompute shapes/blob_0004.off" + flags, dir.path()) == 0);
        REQUIRE(run_cli("match shapes/blob_0004.off shapes/blob_0004.off --out out" + flags,
                        dir.path()) == 0);
        CHECK(fs::exists(dir.path() / "out/C.fmap"));
        CHECK(fs::exists(dir.path() / "out/Q.qmap"));
        CHECK(!fs::exists(dir.path() / "out/eval_C.json")); // no gt given

        const duofm::PointMap p2p =
            duofm::load_point_map((dir.path() / "out/p2p_C.txt").string());
        long identity_hits = 0;
        for (std::size_t i = 0; i < p2p.indices.size(); ++i)
            if (p2p.indices[i] == static_cast<int>(i)) ++identity_hits;
        CHECK(static_cast<double>(identity_hits) >= 0.999 * p2p.indices.size());
        CHECK(p2p.orientation == 1);

        // Ground truth file: the identity.
        {
            std::ofstream gt((dir.path() / "gt.txt").string());
            for (std::size_t i = 0; i < p2p.indices.size(); ++i) gt << i << '\n';
        }
        REQUIRE(run_cli("match shapes/blob_0004.off shapes/blob_0004.off --out out2 --gt gt.txt" +
                            flags,
                        dir.path()) == 0);
        CHECK(fs::exists(dir.path() / "out2/eval_C.json"));
        const std::string eval = slurp(dir.path() / "out2/eval_C.json");
        CHECK(eval.find("\"mean_geodesic_error_x100\": 0") != std::string::npos);

        // Standalone eval command on the written point map.
        REQUIRE(run_cli("eval out/p2p_C.txt gt.txt shapes/blob_0004.off --report eval.json" +
                            flags,
                        dir.path()) == 0);
        CHECK(slurp(dir.path() / "eval.json").find("pmf") != std::string::npos);
    }

    SECTION("mirrored descriptors flip the C-map orientation via the CLI") {
        REQUIRE(run_cli("gen blob --seed 5 --resolution 8 --out shapes", dir.path()) == 0);
        REQUIRE(run_cli("precompute shapes/blob_0005.off" + flags, dir.path()) == 0);
        REQUIRE(run_cli(
            "match shapes/blob_0005.off shapes/blob_0005.off --mirrored --out out" + flags,
            dir.path()) == 0);
        const std::string report = slurp(dir.path() / "out/match_report.txt");
        CHECK(report.find("orientation_C=-1") != std::string::npos);
        // Elevated Q residual is part of the report.
        const auto pos = report.find("q_ortho=");
        REQUIRE(pos != std::string::npos);
        CHECK(std::stod(report.substr(pos + 8)) > 1.0);
    }

    SECTION("refine produces a log and a checkpoint that match loads") {
        REQUIRE(run_cli("gen blob --seed 6 --resolution 8 --out shapes", dir.path()) == 0);
        REQUIRE(run_cli("precompute shapes/blob_0006.off" + flags, dir.path()) == 0);
        test_util::write_file((dir.path() / "pairs.txt").string(),
                              "shapes/blob_0006.off shapes/blob_0006.off\n");
        REQUIRE(run_cli("refine pairs.txt --epochs 3 --probe-dim 6 --seed 11 --out train" +
                            flags,
                        dir.path()) == 0);
        CHECK(fs::exists(dir.path() / "train/probe.ckpt"));
        const std::string log = slurp(dir.path() / "train/train.log");
        CHECK(log.find("step=1") != std::string::npos);
        CHECK(log.find("L_Q_ortho=") != std::string::npos);

        // Identity pair, 3 epochs: the final loss does not exceed the first.
        const duofm::TrainConfig unused; // documents which fields the log carries
        (void)unused;
        double first = -1.0, last = -1.0;
        std::istringstream lines(log);
        std::string line;
        while (std::getline(lines, line)) {
            const auto pos = line.find("L_final=");
            REQUIRE(pos != std::string::npos);
            last = std::stod(line.substr(pos + 8));
            if (first < 0.0) first = last;
        }
        CHECK(last <= first);

        // Deterministic: a second run writes the identical log.
        REQUIRE(run_cli("refine pairs.txt --epochs 3 --probe-dim 6 --seed 11 --out train2" +
                            flags,
                        dir.path()) == 0);
        CHECK(slurp(dir.path() / "train2/train.log") == log);

        REQUIRE(run_cli("match cache/blob_0006.duof cache/blob_0006.duof --probe "
                        "train/probe.ckpt --out out" +
                            flags,
                        dir.path()) == 0);
        CHECK(slurp(dir.path() / "out/match_report.txt").find("orientation_C=1") !=
              std::string::npos);
    }

    SECTION("config file with flag overrides") {
        test_util::write_file((dir.path() / "run.cfg").string(),
                              "# desk-scale settings\nk_c = 14\nk_q = 7\nwks_energies = 24\n"
                              "cache_dir = cache\n");
        REQUIRE(run_cli("gen blob --seed 8 --resolution 8 --out shapes", dir.path()) == 0);
        CHECK(run_cli("precompute shapes/blob_0008.off --config run.cfg", dir.path()) == 0);
        CHECK(fs::exists(dir.path() / "cache/blob_0008.duof"));
        // Bad config values are usage errors.
        test_util::write_file((dir.path() / "bad.cfg").string(), "k_c = 2\n");
        CHECK(run_cli("precompute shapes/blob_0008.off --config bad.cfg", dir.path()) == 2);
        test_util::write_file((dir.path() / "typo.cfg").string(), "k_see = 20\n");
        CHECK(run_cli("precompute shapes/blob_0008.off --config typo.cfg", dir.path()) == 2);
    }

    SECTION("compute failures exit 1") {
        CHECK(run_cli("precompute does_not_exist.off" + flags, dir.path()) == 1);
        test_util::write_file((dir.path() / "broken.off").string(), "OFF\n1 0 0\nnot numbers\n");
        CHECK(run_cli("precompute broken.off" + flags, dir.path()) == 1);
    }
}
