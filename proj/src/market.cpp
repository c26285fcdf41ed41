#include "catderiv/market.hpp"

#include "catderiv/errors.hpp"
#include "catderiv/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace catderiv {

void check_market_fields(const MarketModel& mk) {
    if (mk.clients <= 0) throw ConfigError("market.clients", "must be positive");
    if (!(mk.max_loading > 0.0) || !std::isfinite(mk.max_loading))
        throw ConfigError("market.max_loading", "must be > 0");
    if (!(mk.fair_premium >= 0.0) || !std::isfinite(mk.fair_premium))
        throw ConfigError("market.fair_premium", "must be >= 0");
    if (const auto* t = std::get_if<TabulatedDemand>(&mk.demand)) {
        const auto& th = t->theta;
        const auto& d = t->demand;
        if (th.size() != d.size() || th.size() < 2)
            throw ConfigError("market.demand", "theta and demand need equal length >= 2");
        if (th.front() != 0.0 || d.front() != static_cast<double>(mk.clients))
            throw ConfigError("market.demand", "table must start at (0, clients)");
        if (th.back() != mk.max_loading || d.back() != 0.0)
            throw ConfigError("market.demand", "table must end at (max_loading, 0)");
        for (std::size_t i = 1; i < th.size(); ++i) {
            if (!(th[i] > th[i - 1])) throw ConfigError("market.demand.theta", "must be strictly increasing");
            if (!(d[i] < d[i - 1])) throw ConfigError("market.demand.demand", "must be strictly decreasing");
        }
    }
}

double demand_at(const MarketModel& mk, double theta) {
    const double M = static_cast<double>(mk.clients);
    if (theta <= 0.0) return M;
    if (theta >= mk.max_loading) return 0.0;
    if (std::holds_alternative<LinearDemand>(mk.demand)) return M * (1.0 - theta / mk.max_loading);
    const auto& t = std::get<TabulatedDemand>(mk.demand);
    const auto it = std::upper_bound(t.theta.begin(), t.theta.end(), theta);
    const std::size_t i = static_cast<std::size_t>(it - t.theta.begin());
    const double w = (theta - t.theta[i - 1]) / (t.theta[i] - t.theta[i - 1]);
    return t.demand[i - 1] + w * (t.demand[i] - t.demand[i - 1]);
}

double loading_for_share(const MarketModel& mk, double xi) {
    xi = std::clamp(xi, 0.0, 1.0);
    if (xi == 1.0) return 0.0;
    if (xi == 0.0) return mk.max_loading;
    if (std::holds_alternative<LinearDemand>(mk.demand)) return mk.max_loading * (1.0 - xi);
    const auto& t = std::get<TabulatedDemand>(mk.demand);
    const double target = xi * static_cast<double>(mk.clients);
    // demand is strictly decreasing: locate the segment with d[i-1] >= target > d[i]
    std::size_t i = 1;
    while (i + 1 < t.demand.size() && t.demand[i] >= target) ++i;
    const double w = (t.demand[i - 1] - target) / (t.demand[i - 1] - t.demand[i]);
    return t.theta[i - 1] + w * (t.theta[i] - t.theta[i - 1]);
}

double premium_income(const MarketModel& mk, double xi) {
    if (xi <= 0.0) return 0.0;
    return xi * mk.aggregate_premium() * (1.0 + loading_for_share(mk, xi));
}

double sup_norm_q(const MarketModel& mk) {
    const auto q = [&mk](double xi) { return premium_income(mk, xi); };
    return maximize_on_grid(q, 10000, 1e-12).value;
}

}  // namespace catderiv
