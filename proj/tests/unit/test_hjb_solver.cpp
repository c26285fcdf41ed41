#include <doctest.h>

#include "catderiv/errors.hpp"
#include "catderiv/hjb_solver.hpp"
#include "catderiv/optimize.hpp"
#include "fixtures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <omp.h>

#include <cmath>
#include <sstream>

using namespace catderiv;
using fixtures::cc_model;
using fixtures::linear_market;
using fixtures::rel_diff;
using fixtures::sc_model;

namespace {

const SpreadOption kSpread{1e7, 2e7};

// Coarse grids that still satisfy c_max >= L + z_max.
struct Setup {
    ClaimsModel model;
    MarketModel market;
    GridSpec fine;
    SolveGrid grid;
};

Setup coarse(const ClaimsModel& m, int n_c = 256, int n_t = 200, double horizon = 1.0) {
    Setup s{m, linear_market(m), GridSpec{chernoff_z_max(m), 4096}, {}};
    s.model.horizon = horizon;
    s.grid = SolveGrid{2e7 + s.fine.z_max, n_c, n_t, 50, horizon};
    return s;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("grid optimizer") {
    const auto quad = maximize_on_grid([](double x) { return -(x - 0.3) * (x - 0.3); }, 100);
    CHECK(std::abs(quad.xi - 0.3) <= 1e-6);
    CHECK(maximize_on_grid([](double) { return 1.0; }, 100).xi == 0.0);

    const auto m = cc_model();
    const auto mk = linear_market(m);
    const double M = severity_exp_moment(m, m.eta), le = m.total_intensity() / m.eta;
    auto f = [&](double xi) { return premium_income(mk, xi) + le * (1.0 - count_pgf(m, xi * (M - 1.0) + 1.0)); };
    double best = -1e300, arg = 0.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double v = f(i / 1e6);
        if (v > best) best = v, arg = i / 1e6;
    }
    const auto a = maximize_on_grid(f, 100);
    CHECK(std::abs(a.xi - arg) <= 1e-5);
    CHECK(a.value >= best - 1e-9 * std::abs(best));
}

TEST_CASE("closed form without derivative") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    CHECK(w0_closed_form(m, mk, 1.0).value == 0.0);
    const auto w = w0_closed_form(m, mk, 0.25);
    CHECK(w.value == doctest::Approx(0.75 * w.rate).epsilon(1e-15));
    CHECK(w.xi0 > 0.0);
    CHECK(w.xi0 < 1.0);

    auto free = mk;
    free.fair_premium = 0.0;
    const auto z = w0_closed_form(m, free, 0.0);
    CHECK(z.xi0 == 0.0);
    CHECK(z.value == 0.0);
}

TEST_CASE("no derivative: w is flat in c and matches the closed form") {
    for (const auto& m : {sc_model(), cc_model()}) {
        const auto s = coarse(m, 128, 100);
        const auto r = solve_backward(s.model, s.market, ZeroPayoff{}, s.grid, s.fine, SolveMode::W);
        const auto w0 = w0_closed_form(s.model, s.market, 0.0, s.grid.n_xi);
        for (int n = 0; n <= s.grid.n_t; n += 10)
            for (int i = 0; i < s.grid.n_c; ++i)
                CHECK(std::abs(r.value.at(n, i) - w0.rate * (1.0 - s.grid.t(n))) <= 1e-6 * w0.value);
        const auto p = solve_backward(s.model, s.market, ZeroPayoff{}, s.grid, s.fine, SolveMode::P);
        for (double v : p.value.values) CHECK(std::abs(v) <= 1e-8);
    }
}

TEST_CASE("spread option surface properties") {
    const auto s = coarse(cc_model());
    const auto r = price_surface(s.model, s.market, kSpread, s.grid, s.fine);
    const auto& p = r.p_solve.value;
    const double LK = 1e7;
    CHECK(r.disagreement <= 1e-5 * LK);

    // terminal slice is the payoff itself
    for (int i = 0; i < s.grid.n_c; ++i) CHECK(p.at(s.grid.n_t, i) == payoff_value(kSpread, s.grid.c(i)));

    for (int n = 0; n <= s.grid.n_t; ++n) {
        for (int i = 0; i < s.grid.n_c; ++i) {
            if (s.grid.c(i) >= 2e7) CHECK(std::abs(p.at(n, i) - LK) <= 5e-4 * LK);
            if (i > 0) CHECK(p.at(n, i) >= p.at(n, i - 1) - 1e-6 * LK);
            CHECK(std::abs(r.w_solve.value.at(n, i)) <= r.w_solve.bound + 1e-6);
            const double xi = r.p_solve.policy.xi(n, i);
            CHECK(xi >= 0.0);
            CHECK(xi <= 1.0);
            CHECK(r.p_solve.policy.loading[static_cast<std::size_t>(n) * s.grid.n_c + i] ==
                  loading_for_share(s.market, xi));
        }
    }

    // approach to the payoff over the last ten slices
    double prev = 1e300;
    for (int n = s.grid.n_t - 10; n <= s.grid.n_t; ++n) {
        double gap = 0.0;
        for (int i = 0; i < s.grid.n_c; ++i) gap = std::max(gap, std::abs(p.at(n, i) - payoff_value(kSpread, s.grid.c(i))));
        CHECK(gap <= prev);
        prev = gap;
    }
    CHECK(prev == 0.0);
}

TEST_CASE("adding a constant to the payoff shifts w by that constant") {
    const auto s = coarse(cc_model(), 128, 100);
    const double shift = 3e6;
    const TabulatedPayoff shifted{{0.0, 1e7, 2e7}, {shift, shift, 1e7 + shift}};
    const auto fam = build_kernel_family(s.model, s.fine, s.grid);
    const auto a = solve_backward(s.model, s.market, kSpread, s.grid, fam, SolveMode::W);
    const auto b = solve_backward(s.model, s.market, shifted, s.grid, fam, SolveMode::W);
    for (std::size_t j = 0; j < a.value.values.size(); ++j)
        CHECK(std::abs(b.value.values[j] - a.value.values[j] - shift) <= 1e-10 * (std::abs(a.value.values[j]) + shift));
    CHECK(max_abs_diff(a.policy.xi_star, b.policy.xi_star) <= 1e-6);
}

TEST_CASE("short-maturity rate against quadrature") {
    // d/dtau p at tau = 0 equals sup_xi (q + A^xi psi) - w_bar, which for single
    // claims is a one-dimensional integral over the severity.
    const auto m0 = sc_model();
    const double h = 1e-3;
    auto run = [&](int n_t) {
        auto s = coarse(m0, 2048, n_t, h);
        s.fine.n_points = 16384;
        s.grid.n_xi = 100;
        return std::make_pair(s, solve_backward(s.model, s.market, kSpread, s.grid, s.fine, SolveMode::P));
    };
    const auto [s1, r1] = run(1);
    const auto [s2, r2] = run(2);

    const auto& m = s1.model;
    const auto& mk = s1.market;
    const double eta = m.eta, le = m.total_intensity() / eta, M = severity_exp_moment(m, eta);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto expectation = [&](double c, bool tilted) {
        auto f = [&](double y) {
            const double dens = std::exp(9 * std::log(y) - y / 5000 - std::lgamma(10.0) - 10 * std::log(5000.0));
            const double inc = payoff_value(kSpread, c + y) - payoff_value(kSpread, c);
            return std::exp(-eta * inc + (tilted ? eta * y : 0.0)) * dens;
        };
        double total = 0.0, lo = 0.0;
        for (double k : {1e7 - c, 2e7 - c, 2e6})
            if (k > lo) {
                total += GK::integrate(f, lo, k, 10, 1e-14);
                lo = k;
            }
        return total;
    };
    auto wbar = maximize_on_grid([&](double xi) { return premium_income(mk, xi) - le * xi * (M - 1.0); }, 100000).value;

    for (int i : {900, 1000, 1300, 1500, 1560}) {
        const double c = s1.grid.c(i);
        const double a0 = expectation(c, false), a1 = expectation(c, true);
        const double oracle =
            maximize_on_grid([&](double xi) { return premium_income(mk, xi) - le * (a0 + xi * (a1 - a0) - 1.0); }, 100000)
                .value -
            wbar;
        const double psi = payoff_value(kSpread, c);
        const double rate1 = (r1.value.at(0, i) - psi) / h;
        const double rate2 = (r2.value.at(1, i) - psi) / (h / 2);
        const double extrapolated = 2 * rate2 - rate1;
        MESSAGE("c = " << c << " oracle " << oracle << " solver " << extrapolated);
        CHECK(std::abs(extrapolated - oracle) <= 2e-3 * std::abs(oracle) + 1e3);
    }
}

TEST_CASE("grid refinement changes the price little") {
    // from the default resolution on; coarser grids are still converging
    auto a = coarse(cc_model(), 1021, 500);
    auto b = coarse(cc_model(), 2041, 1000);  // half the c spacing: (n_c - 1) doubles
    a.fine.n_points = b.fine.n_points = 16384;
    a.grid.n_xi = b.grid.n_xi = 100;
    const auto ra = solve_backward(a.model, a.market, kSpread, a.grid, a.fine, SolveMode::P);
    const auto rb = solve_backward(b.model, b.market, kSpread, b.grid, b.fine, SolveMode::P);
    double worst = 0.0;
    for (int i = 0; i < a.grid.n_c; ++i) worst = std::max(worst, std::abs(ra.value.at(0, i) - rb.value.at(0, 2 * i)));
    MESSAGE("max change at t = 0: " << worst);
    CHECK(worst <= 1e-3 * 1e7);
}

TEST_CASE("far out of the money the price vanishes") {
    auto s = coarse(sc_model(), 256, 200);
    const SpreadOption far{3e7, 4e7};
    s.grid.c_max = 4e7 + s.fine.z_max;
    const auto r = solve_backward(s.model, s.market, far, s.grid, s.fine, SolveMode::P);
    // annual claims are 5e6 on average with standard deviation 0.5e6
    CHECK(std::abs(r.value.at(0, 0)) <= 1e-3 * 1e7);
}

TEST_CASE("serial reference and parallel solver agree") {
    const auto s = coarse(cc_model(), 128, 100);
    const auto fam = build_kernel_family(s.model, s.fine, s.grid);
    const auto ser = solve_backward(s.model, s.market, kSpread, s.grid, fam, SolveMode::P, Backend::Serial);
    const auto par = solve_backward(s.model, s.market, kSpread, s.grid, fam, SolveMode::P, Backend::Parallel);
    CHECK(max_abs_diff(ser.value.values, par.value.values) <= 1e-10 * 1e7);
    CHECK(max_abs_diff(ser.policy.xi_star, par.policy.xi_star) <= 1e-6);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = solve_backward(s.model, s.market, kSpread, s.grid, fam, SolveMode::P);
    omp_set_num_threads(3);
    const auto three = solve_backward(s.model, s.market, kSpread, s.grid, fam, SolveMode::P);
    omp_set_num_threads(saved);
    CHECK(one.value.values == three.value.values);
    CHECK(one.policy.xi_star == three.policy.xi_star);
}

TEST_CASE("grid checks") {
    auto s = coarse(cc_model());
    auto g = s.grid;
    g.n_t = 5;
    CHECK_THROWS_AS(check_solve_grid(s.model, kSpread, s.fine, g), StabilityError);
    g = s.grid;
    g.c_max = 2e7;
    CHECK_THROWS_AS(check_solve_grid(s.model, kSpread, s.fine, g), GridError);
    CHECK_THROWS_AS(check_payoff(SpreadOption{2e7, 1e7}), ConfigError);
    CHECK(default_time_steps(cc_model()) == 1000);
}

TEST_CASE("policy csv round trip") {
    const auto s = coarse(cc_model(), 64, 100);
    auto g = s.grid;
    g.c_max = 2e7 + s.fine.z_max;
    const auto r = solve_backward(s.model, s.market, kSpread, g, s.fine, SolveMode::P);
    std::ostringstream os;
    write_policy_csv(os, r.policy);
    std::istringstream is(os.str());
    const auto back = read_policy_csv(is, g.n_xi);
    CHECK(back.grid.n_c == g.n_c);
    CHECK(back.grid.n_t == g.n_t);
    CHECK(back.xi_star == r.policy.xi_star);
    CHECK(back.loading == r.policy.loading);
    CHECK(os.str().rfind("t,c,xi_star,loading\n", 0) == 0);

    std::ostringstream ps;
    write_price_csv(ps, r.value);
    CHECK(ps.str().rfind("t,c,value\n", 0) == 0);
}
