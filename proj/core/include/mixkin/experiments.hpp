#pragma once

#include "mixkin/fluid.hpp"
#include "mixkin/hilbert.hpp"

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixkin {

using FluctuationFn = std::function<std::array<double, 6>(const Vec3&)>;

// Smooth periodic data on the unit torus: (sigma_A, sigma_B, u, theta) as trigonometric polynomials in x1.
FluctuationFn default_fluctuation();

struct SlopeFit {
    double slope = 0.0;
    double half_width = 0.0;
    double residual = 0.0;  // RMS of the log2 residuals
};

// Least squares of log2(error) on log2(param).
SlopeFit fit_log2(const std::vector<double>& params, const std::vector<double>& errors);

struct RateReport {
    std::string study;
    std::string param_name;
    std::vector<double> params;
    std::vector<double> error_l2;
    std::vector<double> error_sup;
    std::vector<double> runtime_s;
    SlopeFit fit_l2;
    SlopeFit fit_sup;
    std::vector<std::string> checked;  // norms whose slopes decide the pass flag
    double expected = 0.0;
    double tolerance = 0.0;
    bool at_least = false;  // pass on slope >= expected instead of |slope - expected| <= tolerance
    bool vanishing = false;  // all errors exactly zero; nothing to fit
    bool pass = false;
    double wall_time = 0.0;
    nlohmann::json extra = nlohmann::json::object();

    // Fits both norms and sets pass.
    void finalize();
    nlohmann::json to_json(bool timings) const;
};

// >= 3 strictly decreasing parameters, consecutive ratios integral powers of two.
void validate_params(const std::vector<double>& p, const std::string& name);

struct StudySetup {
    SpeciesPair species;
    SpatialGrid grid{1.0, 256, 1};
    EulerOptions euler;
    FluctuationFn fluct = default_fluctuation();
    HilbertSetup hilbert;
    VelocityGrid taylor_vgrid{6.0, 16};
    int sampled_cells = 4;
};

RateReport acoustic_linearization_rate(const StudySetup& s, const std::vector<double>& deltas, double t_end);

RateReport maxwellian_taylor_rate(const StudySetup& s, const std::vector<double>& deltas, double t_end);

// Max over samples of |d/dz mu(z)|_{z=0} - G| with mu(z) built from (1 + z sigma, z u, 1 + z theta).
double taylor_derivative_check(const SpeciesPair& s, int samples, std::uint64_t seed);

// G_eps = (F0 + eps F1 - mu0) / delta at t = 0 against G from the same fluctuation data.
struct ProxyErrors {
    double l2 = 0.0;
    double sup = 0.0;
};

// One delta, several eps: the correctors are built once.
std::vector<ProxyErrors> proxy_errors(const StudySetup& s, double delta, const std::vector<double>& eps);

RateReport acoustic_limit_proxy_rate(const StudySetup& s, const std::vector<double>& eps,
                                     const std::function<double(double)>& delta_of_eps);

struct SweepReport {
    double eps = 0.0;
    std::vector<double> deltas;
    std::vector<double> error_l2;
    std::vector<double> error_sup;
    double argmin_l2 = 0.0;
    double argmin_sup = 0.0;
    double target = 0.0;  // sqrt(eps)
    bool pass = false;    // both minima within a factor 2 of the target

    nlohmann::json to_json() const;
};

SweepReport acoustic_limit_delta_sweep(const StudySetup& s, double eps, const std::vector<double>& deltas);

struct HydrodynamicReport {
    RateReport K0;
    RateReport K1;
    double ratio_eps = 0.0;
    double ratio = 0.0;  // K0 / K1 L2 residual at ratio_eps
    bool ratio_pass = false;
    double max_compatibility = 0.0;
    std::vector<double> decay_sup;
};

// Residual ladder on the Euler state built from the fluctuation data at amplitude delta.
HydrodynamicReport hydrodynamic_residual_rate(const StudySetup& s, const std::vector<double>& eps, double delta = 0.1,
                                              double ratio_eps = 0.01);

// RateReport CSV: study,param,error_L2,error_sup,runtime_s. runtime_s is NA unless timings are requested.
void write_rate_csv(const std::string& path, const std::vector<RateReport>& reports, bool timings);

} // namespace mixkin
