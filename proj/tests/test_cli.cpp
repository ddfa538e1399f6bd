#include "commands.hpp"
#include "config.hpp"
#include "snapshot.hpp"

#include "mixkin/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace mixkin;
using namespace mixkin::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("mixkin_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal config fills and lists defaults") {
    const auto c = parse_config(R"({"species": {"m_A": 1, "m_B": 2, "gamma": 1}})");
    CHECK(c.N == 12);
    CHECK(c.M == 256);
    CHECK(contains(c.defaults_applied, "velocity.N"));
    CHECK(contains(c.defaults_applied, "study.deltas"));
    CHECK_FALSE(contains(c.defaults_applied, "species.gamma"));
}

TEST_CASE("gamma above one is rejected with the admissible range") {
    try {
        parse_config(R"({"species": {"gamma": 1.5}})");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("(-3, 1]") != std::string::npos);
    }
}

TEST_CASE("odd velocity resolution is rejected") {
    CHECK_THROWS_AS(parse_config(R"({"velocity": {"N": 13}})"), ConfigError);
}

TEST_CASE("unknown keys are rejected with their path") {
    try {
        parse_config(R"({"species": {"m_C": 3}})");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("species.m_C") != std::string::npos);
    }
}

TEST_CASE("type mismatches and syntax errors") {
    CHECK_THROWS_AS(parse_config(R"({"velocity": {"N": 12.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seed": "one"})"), ConfigError);
    try {
        parse_config("{\n  \"seed\": 1,\n  }");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("canonical form round-trips") {
    RunConfig c;
    c.species.m = {1.0, 3.0};
    c.q_tilde = 0.7;
    c.study.limiter = Limiter::None;
    const auto back = parse_config(c.to_json().dump());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.defaults_applied.empty());
}

TEST_CASE("sha256 test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("snapshot round trip is bit exact") {
    const VelocityGrid g(3.0, 4);
    DistributionField f;
    f.frame = FrameTag::Weighted;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        f.A.push_back(U(rng) * 1e-300);
        f.B.push_back(U(rng) * 1e300);
    }
    f.A[0] = std::numeric_limits<double>::denorm_min();
    f.B[1] = -0.0;
    const auto dir = fresh_dir("snapshot");
    write_snapshot((dir / "f").string(), f, g, {{"cell", 3}});
    const auto s = read_snapshot((dir / "f").string());
    CHECK(s.field.frame == FrameTag::Weighted);
    CHECK(s.N == 4);
    CHECK(s.meta["cell"] == 3);
    REQUIRE(s.field.A.size() == f.A.size());
    CHECK(std::memcmp(s.field.A.data(), f.A.data(), f.A.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(s.field.B.data(), f.B.data(), f.B.size() * sizeof(double)) == 0);
    CHECK(fs::file_size(dir / "f.bin") == 2 * g.size() * 8);
}

TEST_CASE("truncated snapshot is rejected") {
    const VelocityGrid g(3.0, 4);
    DistributionField f;
    f.A.assign(g.size(), 1.0);
    f.B.assign(g.size(), 2.0);
    const auto dir = fresh_dir("snapshot_trunc");
    write_snapshot((dir / "f").string(), f, g);
    fs::resize_file(dir / "f.bin", 100);
    CHECK_THROWS_AS(read_snapshot((dir / "f").string()), ShapeError);
}

TEST_CASE("euler subcommand output is byte reproducible") {
    RunConfig c;
    c.M = 64;
    c.study.t_end = 0.2;
    const auto d1 = fresh_dir("repro1"), d2 = fresh_dir("repro2");
    const auto r1 = run_command("euler", c, d1.string());
    const auto r2 = run_command("euler", c, d2.string());
    CHECK(r1.pass);
    for (const char* f : {"trajectory.csv", "trajectory.json", "euler.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));
}

TEST_CASE("kernels with equal masses skip the cross hybrid bound") {
    RunConfig c;
    c.species.m = {1.0, 1.0};
    c.kernel_samples = 500;
    const auto d = fresh_dir("kernels_equal");
    const auto r = run_command("kernels", c, d.string());
    CHECK(r.report["notes"].size() == 1);
    for (const auto& b : r.report["bounds"]) CHECK(b["bound_id"] != "k_M2_hybrid_cross_weighted");
}

TEST_CASE("error kinds map to exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(DomainError("x")) == 2);
    CHECK(exit_code_for(NumericalError("x")) == 3);
    CHECK(exit_code_for(SolvabilityError("x")) == 3);
    CHECK(error_json(FrameError("bad frame"))["error"]["kind"] == "frame");
    CHECK_THROWS_AS(run_command("nope", RunConfig{}, "."), ConfigError);
}

}
