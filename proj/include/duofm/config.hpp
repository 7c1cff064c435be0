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

#include <cstdlib>
#include <fstream>
#include <string>

#include <duofm/pipeline.hpp>
#include <duofm/refine.hpp>

namespace duofm {

/// Line-based key=value settings with '#' comments. Unknown keys are errors:
/// a typo in a config file should not silently fall back to a default.
struct RunConfig {
    PipelineConfig pipeline;
    TrainConfig train;
    int probe_dim = 32;
    std::string cache_dir;
    std::string out_dir = ".";
    int threads = 0;

    void set(const std::string& key, const std::string& value) {
        auto to_int = [&](const std::string& v) { return std::stoi(v); };
        auto to_double = [&](const std::string& v) { return std::stod(v); };
        if (key == "k_c") pipeline.k_c = to_int(value);
        else if (key == "k_q") pipeline.k_q = to_int(value);
        else if (key == "lambda") pipeline.lambda = to_double(value);
        else if (key == "wks_energies") pipeline.wks.num_energies = to_int(value);
        else if (key == "wks_sigma_scale") pipeline.wks.sigma_scale = to_double(value);
        else if (key == "grad_channels") pipeline.channels.num_gradient_channels = to_int(value);
        else if (key == "probe_dim") probe_dim = to_int(value);
        else if (key == "w_ortho") train.w_ortho = to_double(value);
        else if (key == "w_q_ortho") train.w_q_ortho = to_double(value);
        else if (key == "lr") train.learning_rate = to_double(value);
        else if (key == "epochs") train.epochs = to_int(value);
        else if (key == "seed") train.seed = std::stoull(value);
        else if (key == "cache_dir") cache_dir = value;
        else if (key == "out_dir") out_dir = value;
        else if (key == "threads") threads = to_int(value);
        else throw ParseError("unknown config key '" + key + "'");
    }

    /// Validates every value against the module preconditions it feeds.
    void validate() const {
        if (pipeline.k_c < 8) throw ParseError("k_c must be at least 8 (WKS needs the spectrum)");
        if (pipeline.k_q < 1) throw ParseError("k_q must be positive");
        if (pipeline.lambda < 0.0) throw ParseError("lambda must be nonnegative");
        if (pipeline.wks.num_energies < 2) throw ParseError("wks_energies must be at least 2");
        if (pipeline.wks.sigma_scale <= 0.0) throw ParseError("wks_sigma_scale must be positive");
        if (pipeline.channels.num_gradient_channels < 2)
            throw ParseError("grad_channels must be at least 2");
        if (probe_dim < 1) throw ParseError("probe_dim must be positive");
        if (train.w_ortho < 0.0 || train.w_q_ortho < 0.0)
            throw ParseError("loss weights must be nonnegative");
        if (train.learning_rate <= 0.0) throw ParseError("lr must be positive");
        if (train.epochs < 1) throw ParseError("epochs must be positive");
        if (threads < 0) throw ParseError("threads must be nonnegative");
    }

    /// Cache directory resolution: explicit setting, then DUO_CACHE_DIR,
    /// then ./duofm_cache.
    std::string resolved_cache_dir() const {
        if (!cache_dir.empty()) return cache_dir;
        if (const char* env = std::getenv("DUO_CACHE_DIR"); env && *env) return env;
        return "duofm_cache";
    }
};

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open config file " + path);
    RunConfig cfg;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            // Nothing but whitespace is fine; anything else is malformed.
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ParseError("expected key=value", line_no);
            continue;
        }
        auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            const auto end = s.find_last_not_of(" \t\r");
            return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
        };
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument&) {
            throw ParseError("invalid value", line_no);
        } catch (const std::out_of_range&) {
            throw ParseError("value out of range", line_no);
        }
    }
    return cfg;
}

} // namespace duofm
