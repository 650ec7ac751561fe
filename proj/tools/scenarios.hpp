#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "tdsr/driver.hpp"
#include "tdsr/reference.hpp"

namespace tdsr::app {

struct ScenarioInfo {
    std::string name;
    std::string figure;
    std::string summary;
};

/// Built-in scenarios in catalog order.
const std::vector<ScenarioInfo>& scenario_catalog();

/// Every key a scenario accepts, with its default value.
Settings scenario_defaults(std::string_view name);

struct Scenario {
    std::string name;
    Problem problem;
    CVector u0;
    RunOptions options;
    ExactSolution exact;
    std::vector<double> x;
    std::vector<double> y;      // empty on lines
    std::vector<double> lift;   // added back before output, Dirichlet only
};

Scenario build_scenario(const Settings& settings);

/// Time step of the resolved settings.
double scenario_dt(const Settings& settings);

}  // namespace tdsr::app
