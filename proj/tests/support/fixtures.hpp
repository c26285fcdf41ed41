#pragma once

#include "catderiv/hjb_solver.hpp"
#include "catderiv/market.hpp"
#include "catderiv/model.hpp"

#include <cmath>

namespace fixtures {

// Single-claim model: 100 claims a year, Gamma(10, 5000) severities.
inline catderiv::ClaimsModel sc_model() {
    catderiv::ClaimsModel m;
    m.lambda1 = 100;
    m.lambda2 = 0;
    m.severity = catderiv::GammaSeverity{10, 5000};
    m.cat_count = catderiv::ShiftedPoisson{2, 40};
    m.eta = 1e-6;
    m.horizon = 1;
    return m;
}

// Clustered claims: 69 single claims plus one catastrophe of 2 + Poisson(40).
inline catderiv::ClaimsModel cc_model() {
    auto m = sc_model();
    m.lambda1 = 69;
    m.lambda2 = 1;
    return m;
}

inline catderiv::MarketModel linear_market(const catderiv::ClaimsModel& model, long clients = 10000,
                                           double max_loading = 2.0) {
    catderiv::MarketModel mk;
    mk.clients = clients;
    mk.max_loading = max_loading;
    mk.demand = catderiv::LinearDemand{};
    mk.fair_premium = catderiv::fair_premium(model, clients);
    return mk;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fixtures
