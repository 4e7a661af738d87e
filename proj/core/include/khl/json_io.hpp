#pragma once

#include <nlohmann/json.hpp>

#include "khl/kernel.hpp"
#include "khl/model.hpp"
#include "khl/sim.hpp"

namespace khl {

/// {"kind": "gaussian", "bandwidth": null | x}, {"kind": "linear"},
/// {"kind": "polynomial", "degree": k, "offset": c}.
nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

nlohmann::json result_to_json(const TestResult& result);

/// Unknown keys are rejected; missing keys keep the SimConfig defaults.
sim::SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const sim::SimConfig& config);
nlohmann::json sim_report_to_json(const sim::SimReport& report);

}  // namespace khl
