#pragma once

#include "mixkin/collision.hpp"
#include "mixkin/grids.hpp"

#include <string>

#include <nlohmann/json.hpp>

namespace mixkin::cli {

struct Snapshot {
    DistributionField field;
    double R = 0.0;
    int N = 0;
    nlohmann::json meta = nlohmann::json::object();  // free-form, e.g. cell index and spatial grid
};

// stem.bin holds A then B as little-endian float64; stem.json describes it.
void write_snapshot(const std::string& stem, const DistributionField& f, const VelocityGrid& g,
                    const nlohmann::json& meta = nlohmann::json::object());
Snapshot read_snapshot(const std::string& stem);

} // namespace mixkin::cli
