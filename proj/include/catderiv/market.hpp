#pragma once

#include <variant>
#include <vector>

namespace catderiv {

/// d(theta) = M (1 - theta/m) on (0, m).
struct LinearDemand {};

/// Piecewise-linear demand through (theta_i, demand_i), strictly decreasing,
/// starting at (0, M) and ending at (m, 0).
struct TabulatedDemand {
    std::vector<double> theta;
    std::vector<double> demand;
};

using DemandCurve = std::variant<LinearDemand, TabulatedDemand>;

struct MarketModel {
    long clients = 1;
    double max_loading = 1.0;  // m
    DemandCurve demand = LinearDemand{};
    double fair_premium = 0.0;  // a, per client per year

    double aggregate_premium() const noexcept { return fair_premium * static_cast<double>(clients); }
};

/// Throws ConfigError on inconsistent demand data.
void check_market_fields(const MarketModel& market);

/// Number of contracts at loading theta.
double demand_at(const MarketModel& market, double theta);

/// theta(xi) = d^{-1}(xi M).
double loading_for_share(const MarketModel& market, double xi);

/// q(xi) = xi a M (1 + theta(xi)), currency per year.
double premium_income(const MarketModel& market, double xi);

/// max over [0,1] of q, from a 1e4-point grid refined by golden section.
double sup_norm_q(const MarketModel& market);

}  // namespace catderiv
