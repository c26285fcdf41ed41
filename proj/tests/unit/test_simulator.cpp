#include <doctest.h>

#include "catderiv/simulator.hpp"
#include "fixtures.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include <omp.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace catderiv;
using fixtures::cc_model;
using fixtures::linear_market;
using fixtures::sc_model;

namespace {

double sum_accepted(const PathSample& p, double xi) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.severities.size(); ++j)
        if (p.uniforms[j] <= xi) s += p.severities[j];
    return s;
}

}  // namespace

TEST_CASE("constant shares at the extremes") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    for (std::uint64_t path = 0; path < 200; ++path) {
        const auto none = sample_path(m, mk, ConstantPolicy{0.0}, 42, path, {1e6, 0.0});
        CHECK(none.outcome.accepted_total == 0.0);
        CHECK(none.outcome.wealth == 1e6);
        const auto all = sample_path(m, mk, ConstantPolicy{1.0}, 42, path);
        CHECK(all.outcome.accepted_total == all.outcome.claims_total);
        CHECK(all.outcome.accepted_count == all.outcome.claim_count);
        CHECK(all.outcome.claims_total == doctest::Approx(all.sample.index_total()).epsilon(1e-14));
    }
}

TEST_CASE("annual claims of the single-claim model") {
    const auto m = sc_model();
    const long n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (long i = 0; i < n; ++i) {
        const double c = draw_path(m, 9, static_cast<std::uint64_t>(i)).index_total();
        sum += c;
        sum2 += c * c;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 5e6) < 3 * se);
}

TEST_CASE("coupled sampling") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    for (std::uint64_t path = 0; path < 1000; ++path) {
        const auto [a, b] = coupled_sample(m, mk, ConstantPolicy{0.6}, ConstantPolicy{0.6}, 5, path);
        CHECK(a.outcome.wealth == b.outcome.wealth);
        CHECK(a.sample.severities == b.sample.severities);

        const auto [one, zero] = coupled_sample(m, mk, ConstantPolicy{1.0}, ConstantPolicy{0.0}, 5, path);
        CHECK(zero.outcome.accepted_total - one.outcome.accepted_total == doctest::Approx(-one.sample.index_total()));

        // accepted sets: every claim taken at the lower share is taken at the higher one
        const auto [hi, lo] = coupled_sample(m, mk, ConstantPolicy{0.7}, ConstantPolicy{0.3}, 5, path);
        const auto& u = hi.sample.uniforms;
        for (std::size_t j = 0; j < u.size(); ++j)
            if (u[j] <= 0.3) CHECK(u[j] <= 0.7);
        CHECK(hi.outcome.accepted_total == doctest::Approx(sum_accepted(hi.sample, 0.7)).epsilon(1e-13));
        CHECK(lo.outcome.accepted_total == doctest::Approx(sum_accepted(lo.sample, 0.3)).epsilon(1e-13));
        CHECK(lo.outcome.accepted_count <= hi.outcome.accepted_count);
    }
}

TEST_CASE("expected utility without claims is deterministic") {
    auto m = sc_model();
    m.lambda1 = 0.0;
    auto mk = linear_market(sc_model());
    const SpreadOption spread{1e7, 2e7};
    const auto r = mc_expected_utility(m, mk, ConstantPolicy{0.5}, spread, 1000, 1, {2e5, 1.5e7});
    CHECK(r.std_error == 0.0);
    const double x = 2e5 + premium_income(mk, 0.5) * m.horizon + payoff_value(spread, 1.5e7);
    CHECK(r.estimate == doctest::Approx(-std::exp(-m.eta * x)).epsilon(1e-12));
}

TEST_CASE("expected utility against the compound Poisson closed form") {
    for (const auto& m : {sc_model(), cc_model()}) {
        const auto mk = linear_market(m);
        for (double xi : {0.3, 0.8}) {
            const auto r = mc_expected_utility(m, mk, ConstantPolicy{xi}, ZeroPayoff{}, 100000, 77);
            const double G = count_pgf(m, xi * (severity_exp_moment(m, m.eta) - 1.0) + 1.0);
            const double oracle = -std::exp(-m.eta * premium_income(mk, xi) * m.horizon) *
                                  std::exp(m.total_intensity() * m.horizon * (G - 1.0));
            CHECK(std::abs(r.estimate - oracle) < 3 * r.std_error);

            if (xi == 0.3) {  // inversion sampling is slow; one case is enough
                const auto anti = mc_expected_utility(m, mk, ConstantPolicy{xi}, ZeroPayoff{}, 20000, 77, {}, true);
                CHECK(std::abs(anti.estimate - oracle) < 3 * anti.std_error);
            }
        }
    }
}

TEST_CASE("thinning is binomial given the claim count") {
    // Randomized probability integral transform of each path's accepted count
    // under Binomial(N, xi), pooled into 20 equiprobable cells.
    for (const auto& m : {sc_model(), cc_model()}) {
        const auto mk = linear_market(m);
        const double xi = 0.37;
        const int cells = 20;
        std::vector<long> counts(cells, 0);
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> v(0.0, 1.0);
        const long n = 100000;
        for (long i = 0; i < n; ++i) {
            const auto s = sample_path(m, mk, ConstantPolicy{xi}, 31, static_cast<std::uint64_t>(i));
            const long N = s.outcome.claim_count, k = s.outcome.accepted_count;
            double u;
            if (N == 0) {
                u = v(rng);
            } else {
                const boost::math::binomial_distribution<double> b(static_cast<double>(N), xi);
                const double lo = k > 0 ? boost::math::cdf(b, static_cast<double>(k - 1)) : 0.0;
                const double hi = boost::math::cdf(b, static_cast<double>(k));
                u = lo + v(rng) * (hi - lo);
            }
            counts[std::min(cells - 1, static_cast<int>(u * cells))]++;
        }
        double chi2 = 0.0;
        const double expected = static_cast<double>(n) / cells;
        for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
        const double critical = boost::math::quantile(boost::math::chi_squared_distribution<double>(cells - 1), 0.99);
        CHECK(chi2 < critical);
    }
}

TEST_CASE("thinned aggregate is proportional") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    const double xi = 0.45;
    const long n = 100000;
    std::vector<double> diff(n);
    for (long i = 0; i < n; ++i) {
        const auto s = sample_path(m, mk, ConstantPolicy{xi}, 8, static_cast<std::uint64_t>(i));
        diff[static_cast<std::size_t>(i)] = s.outcome.accepted_total - xi * s.outcome.claims_total;
    }
    const auto e = summarize(diff, 8);
    CHECK(std::abs(e.estimate) < 3 * e.std_error);
}

TEST_CASE("determinism") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    const auto a = draw_path(m, 123, 77), b = draw_path(m, 123, 77);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.severities == b.severities);
    CHECK(a.uniforms == b.uniforms);
    CHECK(a.counts == b.counts);
    CHECK(draw_path(m, 124, 77).jump_times != a.jump_times);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = mc_expected_utility(m, mk, ConstantPolicy{0.5}, SpreadOption{1e7, 2e7}, 20000, 3);
    omp_set_num_threads(3);
    const auto three = mc_expected_utility(m, mk, ConstantPolicy{0.5}, SpreadOption{1e7, 2e7}, 20000, 3);
    omp_set_num_threads(saved);
    CHECK(one.estimate == three.estimate);
    CHECK(one.std_error == three.std_error);
}

TEST_CASE("feedback policy from a solved surface") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    const GridSpec fine{chernoff_z_max(m), 4096};
    const SolveGrid grid{2e7 + fine.z_max, 256, 200, 50, 1.0};
    const SpreadOption spread{1e7, 2e7};
    const auto w = solve_backward(m, mk, spread, grid, fine, SolveMode::W);
    const auto r = mc_expected_utility(m, mk, FeedbackPolicy{&w.policy}, spread, 20000, 99);
    const double oracle = -std::exp(-m.eta * w.value.at(0, 0));
    CHECK(std::abs(r.estimate - oracle) < 3 * r.std_error);

    // a flat policy surface behaves like the constant policy
    PolicySurface flat = w.policy;
    std::fill(flat.xi_star.begin(), flat.xi_star.end(), 0.4);
    for (std::uint64_t path = 0; path < 100; ++path) {
        const auto a = sample_path(m, mk, FeedbackPolicy{&flat}, 1, path);
        const auto b = sample_path(m, mk, ConstantPolicy{0.4}, 1, path);
        CHECK(a.outcome.accepted_total == b.outcome.accepted_total);
        CHECK(a.outcome.wealth == doctest::Approx(b.outcome.wealth).epsilon(1e-12));
    }
}

TEST_CASE("pairwise sum and summaries") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    CHECK(pairwise_sum(v.data(), v.size()) == 499500.0);
    CHECK(pairwise_sum(v.data(), 0) == 0.0);
    const auto s = summarize(std::vector<double>(50, 2.5), 4);
    CHECK(s.estimate == 2.5);
    CHECK(s.std_error == 0.0);
    CHECK(s.n_paths == 50);
    CHECK(s.seed == 4);
}

TEST_CASE("path dump") {
    const auto m = cc_model();
    const auto mk = linear_market(m);
    PathOutcome o = evaluate_path(draw_path(m, 1, 0), mk, ConstantPolicy{0.5}, 1.0, {}, true);
    std::ostringstream os;
    write_paths_csv_header(os);
    write_path_rows(os, 0, o);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "path_id,jump_time,count,claim_total,accepted_total,wealth_after");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == o.jumps.size());
}
