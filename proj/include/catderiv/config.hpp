#pragma once

#include "catderiv/grid_transform.hpp"
#include "catderiv/hjb_solver.hpp"
#include "catderiv/market.hpp"
#include "catderiv/model.hpp"

#include <cstdint>
#include <string>

namespace catderiv {

struct RiskSettings {
    double sigma_b = 0.0;  // defaults to eta
    double u_max = 0.0;    // 0: adaptive
    int n_u = 256;
    int n_rho = 1001;
    long n_paths = 100000;
    std::uint64_t seed = 1;
    double initial_wealth = 0.0;
    double initial_claims = 0.0;
};

struct ExperimentConfig {
    std::string description;
    ClaimsModel model;
    MarketModel market;  // fair premium filled from the model
    PayoffSpec payoff = ZeroPayoff{};
    GridSpec fine;
    SolveGrid grid;
    RiskSettings risk;
    std::string output_directory = "out";
};

/// Parses and validates a JSON config. Unknown keys and invalid values raise
/// ConfigError naming the field path, e.g. "model.severity.shape".
/// With `require_usable` false a model that fails the standing assumptions is
/// returned with its grids left unset, so that it can still be reported on.
ExperimentConfig parse_config(const std::string& json_text, bool require_usable = true);
ExperimentConfig load_config(const std::string& path, bool require_usable = true);

}  // namespace catderiv
