#pragma once

#include <string>

#include "capacity.hpp"
#include "distance.hpp"

namespace sml {

// One batch experiment: model + neighborhood + command parameters, with the
// runner-wide knobs (seed, samples, tolerances, output format).
struct ExperimentConfig {
    nlohmann::json model;
    nlohmann::json neighborhood = {{"kind", "unit-disc-bundle"}};
    nlohmann::json command = nlohmann::json::object();
    std::uint64_t seed = 42;
    long samples = 10000;
    double tol = 1e-8;
    double eps = 1e-3;
    long cert_samples = 256;
    std::string format = "csv";

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_json_text(const std::string& text);
    nlohmann::json to_json() const;
};

struct RunResult {
    int exit_code = 0;  // 0 ok; 2 when a certified check or audit failed
    std::string document;
};

// command: certify | rho | length | converge | dw | capacities | audit
RunResult run_command(const std::string& command, const ExperimentConfig& cfg);

// Curve described by config JSON: geodesic / latitude / chart-line.
Curve curve_from_json(const Manifold& model, const nlohmann::json& j);

}  // namespace sml
