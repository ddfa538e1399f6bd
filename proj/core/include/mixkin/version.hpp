#pragma once

#include <nlohmann/json.hpp>

namespace mixkin {

// Library and compiler versions for run manifests.
nlohmann::json build_info();

} // namespace mixkin
