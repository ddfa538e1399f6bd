#include "mixkin/errors.hpp"
#include "mixkin/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mixkin;

TEST_SUITE("experiments") {

TEST_CASE("log-log fit recovers an exact power law") {
    const std::vector<double> p{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> e;
    for (double x : p) e.push_back(3.0 * x * x);
    const auto f = fit_log2(p, e);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
}

TEST_CASE("parameter lists must shrink by powers of two") {
    CHECK_NOTHROW(validate_params({0.1, 0.05, 0.025}, "delta"));
    CHECK_NOTHROW(validate_params({0.04, 0.01, 0.0025}, "eps"));
    CHECK_THROWS_AS(validate_params({0.1, 0.05}, "delta"), ConfigError);
    CHECK_THROWS_AS(validate_params({0.3, 0.1, 0.05}, "delta"), ConfigError);
    CHECK_THROWS_AS(validate_params({0.1, 0.2, 0.4}, "delta"), ConfigError);
}

TEST_CASE("rate report pass logic") {
    RateReport r;
    r.params = {0.1, 0.05, 0.025};
    for (double x : r.params) {
        r.error_l2.push_back(x * x);
        r.error_sup.push_back(2.0 * x * x);
    }
    r.checked = {"l2", "sup"};
    r.expected = 2.0;
    r.tolerance = 0.1;
    r.finalize();
    CHECK(r.pass);
    r.expected = 3.0;
    r.finalize();
    CHECK_FALSE(r.pass);
    r.at_least = true;
    r.expected = 1.5;
    r.finalize();
    CHECK(r.pass);
}

TEST_CASE("all-zero errors are flagged as vanishing") {
    RateReport r;
    r.params = {0.1, 0.05, 0.025};
    r.error_l2 = {0.0, 0.0, 0.0};
    r.error_sup = {0.0, 0.0, 0.0};
    r.finalize();
    CHECK(r.vanishing);
}

TEST_CASE("rate CSV writes NA runtimes by default") {
    RateReport r;
    r.study = "demo";
    r.params = {0.1, 0.05, 0.025};
    r.error_l2 = {1.0, 0.5, 0.25};
    r.error_sup = {2.0, 1.0, 0.5};
    r.runtime_s = {0.1, 0.2, 0.3};
    const auto path = (std::filesystem::temp_directory_path() / "mixkin_rates_test.csv").string();
    write_rate_csv(path, {r}, false);
    std::ifstream f(path);
    std::string header, line;
    std::getline(f, header);
    std::getline(f, line);
    CHECK(header == "study,param,error_L2,error_sup,runtime_s");
    CHECK(line.rfind("demo,", 0) == 0);
    CHECK(line.substr(line.size() - 2) == "NA");
}

TEST_CASE("Maxwellian Taylor coefficient matches finite differences") {
    CHECK(taylor_derivative_check(SpeciesPair{}, 200, 5) < 1e-8);
}

TEST_CASE("linearization rate on a coarse grid is close to two") {
    StudySetup s;
    s.grid = SpatialGrid(1.0, 128, 1);
    const auto r = acoustic_linearization_rate(s, {0.1, 0.05, 0.025}, 0.25);
    CHECK(r.fit_sup.slope == doctest::Approx(2.0).epsilon(0.15));
}

}
