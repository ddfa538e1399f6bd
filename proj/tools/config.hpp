#pragma once

#include "mixkin/fluid.hpp"
#include "mixkin/species.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixkin::cli {

struct StudyParams {
    std::vector<double> deltas{0.1, 0.05, 0.025};
    std::vector<double> eps{0.04, 0.01, 0.0025};
    std::vector<double> residual_eps{0.04, 0.02, 0.01};
    std::vector<double> sweep_deltas{0.02, 0.05, 0.1, 0.2, 0.4};
    double sweep_eps = 0.01;
    double residual_delta = 0.1;
    double t_end = 0.5;
    double cfl = 0.4;
    Limiter limiter = Limiter::MC;
    int sampled_cells = 4;
    int hilbert_N = 8;
    double hilbert_R = 4.0;
    int taylor_N = 16;
    double taylor_R = 6.0;
};

struct RunConfig {
    SpeciesPair species;
    double R = 5.0;
    int N = 12;
    int d = 1;
    double Lx = 1.0;
    int M = 256;
    int angular_order = 6;
    double cutoff_m = 0.1;
    double frame_l = 25.0 / 4.0;
    std::optional<double> q_tilde;
    StudyParams study;
    int kernel_samples = 20000;
    std::vector<double> kernel_ms{0.05, 0.1, 0.2, 0.4};
    int collide_states = 20;
    bool export_operator = false;
    std::uint64_t seed = 1;
    int threads = 1;
    bool record_timings = false;
    std::string output = "out";

    // Keys of the canonical form that the input did not set.
    std::vector<std::string> defaults_applied;

    void validate() const;
    nlohmann::json to_json() const;
};

// Parses UTF-8 JSON; unknown keys, type mismatches and constraint violations raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string sha256_hex(const std::string& data);

} // namespace mixkin::cli
