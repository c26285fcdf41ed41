#include <doctest.h>

#include "catderiv/errors.hpp"
#include "catderiv/market.hpp"
#include "fixtures.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>

using namespace catderiv;

namespace {

MarketModel sc_market() { return fixtures::linear_market(fixtures::sc_model()); }

// d(theta) = xi M solved by bisection on the demand curve itself.
double loading_by_root(const MarketModel& mk, double xi) {
    auto f = [&](double th) { return demand_at(mk, th) - xi * static_cast<double>(mk.clients); };
    boost::math::tools::eps_tolerance<double> tol(50);
    const auto r = boost::math::tools::bisect(f, 0.0, mk.max_loading, tol);
    return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("linear demand loading") {
    const auto mk = sc_market();
    CHECK(loading_for_share(mk, 1.0) == 0.0);
    CHECK(loading_for_share(mk, 0.0) == 2.0);
    CHECK(loading_for_share(mk, 0.5) == doctest::Approx(loading_by_root(mk, 0.5)).epsilon(1e-12));
    CHECK(loading_for_share(mk, 0.5) == doctest::Approx(1.0));
    double prev = loading_for_share(mk, 0.0);
    for (int i = 1; i <= 1000; ++i) {
        const double xi = i / 1000.0;
        const double th = loading_for_share(mk, xi);
        CHECK(th <= prev);
        CHECK(std::abs(demand_at(mk, th) - xi * 10000) <= 1e-9 * 10000);
        prev = th;
    }
    CHECK(demand_at(mk, -0.5) == 10000);
    CHECK(demand_at(mk, 2.5) == 0);
}

TEST_CASE("premium income") {
    const auto mk = sc_market();
    const double agg = mk.aggregate_premium();
    CHECK(agg == doctest::Approx(5e6));
    CHECK(premium_income(mk, 0.0) == 0.0);
    CHECK(premium_income(mk, 1.0) == doctest::Approx(agg));
    CHECK(premium_income(mk, 0.5) == doctest::Approx(agg));

    // modulus of continuity on a fine grid stays of the order of the step
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i)
        worst = std::max(worst, std::abs(premium_income(mk, (i + 1) / 1e4) - premium_income(mk, i / 1e4)));
    CHECK(worst < 4 * agg / 1e4);
}

TEST_CASE("sup norm of q") {
    const auto mk = sc_market();
    double dense = 0.0;
    for (int i = 0; i <= 1000000; ++i) dense = std::max(dense, premium_income(mk, i / 1e6));
    CHECK(sup_norm_q(mk) == doctest::Approx(dense).epsilon(1e-9));
    CHECK(sup_norm_q(mk) == doctest::Approx(9.0 / 8.0 * mk.aggregate_premium()).epsilon(1e-12));

    auto zero = mk;
    zero.fair_premium = 0.0;
    CHECK(sup_norm_q(zero) == 0.0);
}

TEST_CASE("tabulated demand sampled from the linear curve") {
    const auto lin = sc_market();
    auto tab = lin;
    TabulatedDemand d;
    for (int i = 0; i <= 20; ++i) {
        d.theta.push_back(2.0 * i / 20);
        d.demand.push_back(10000.0 * (1.0 - i / 20.0));
    }
    tab.demand = d;
    check_market_fields(tab);
    for (int i = 0; i <= 100; ++i) {
        const double xi = i / 100.0;
        CHECK(loading_for_share(tab, xi) == doctest::Approx(loading_for_share(lin, xi)).epsilon(1e-9));
    }
    CHECK(sup_norm_q(tab) == doctest::Approx(sup_norm_q(lin)).epsilon(1e-6));
}

TEST_CASE("tabulated demand must be a decreasing curve from (0, M) to (m, 0)") {
    auto mk = sc_market();
    mk.demand = TabulatedDemand{{0.0, 1.0, 2.0}, {10000.0, 6000.0, 7000.0}};
    CHECK_THROWS_AS(check_market_fields(mk), ConfigError);
    mk.demand = TabulatedDemand{{0.0, 2.0}, {9000.0, 0.0}};
    CHECK_THROWS_AS(check_market_fields(mk), ConfigError);
    mk.demand = TabulatedDemand{{0.0, 1.5}, {10000.0, 0.0}};
    CHECK_THROWS_AS(check_market_fields(mk), ConfigError);
}
