#include "mixkin/version.hpp"

#include <Eigen/Core>
#include <fftw3.h>
#include <gsl/gsl_version.h>

#include <string>

namespace mixkin {

nlohmann::json build_info() {
    const std::string eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
    const std::string json = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    return {{"mixkin", MIXKIN_VERSION},
            {"compiler", __VERSION__},
            {"eigen", eigen},
            {"gsl", GSL_VERSION},
            {"fftw", std::string(fftw_version)},
            {"nlohmann_json", json}};
}

} // namespace mixkin
