#include <doctest.h>

#include "catderiv/errors.hpp"
#include "catderiv/model.hpp"
#include "fixtures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <random>

using namespace catderiv;
using fixtures::cc_model;
using fixtures::rel_diff;
using fixtures::sc_model;

namespace {

// Shifted-Poisson pgf by summing the pmf until the remaining mass is below 1e-14.
std::complex<double> shifted_poisson_series(int shift, double rate, std::complex<double> s) {
    double p = std::exp(-rate), mass = 0.0;
    std::complex<double> sum = 0.0, power = std::pow(s, shift);
    for (int j = 0; 1.0 - mass > 1e-14 || j < rate; ++j) {
        sum += p * power;
        mass += p;
        power *= s;
        p *= rate / (j + 1);
    }
    return sum;
}

double gamma_exp_moment_quadrature(double shape, double scale, double theta) {
    // log space so that exp(theta y) never meets an underflowed density
    const double norm = std::lgamma(shape) + shape * std::log(scale);
    auto f = [&](double y) {
        return y > 0 ? std::exp(theta * y + (shape - 1) * std::log(y) - y / scale - norm) : 0.0;
    };
    // beyond 200 decay lengths of the tilted integrand nothing is left
    const double end = 200.0 / (1.0 / scale - theta);
    double sum = 0.0;
    for (int piece = 0; piece < 20; ++piece)
        sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, end * piece / 20, end * (piece + 1) / 20,
                                                                              10, 1e-14);
    return sum;
}

}  // namespace

TEST_CASE("mixed count pmf of the clustered model") {
    const auto m = cc_model();
    CHECK(mixed_count_pmf(m, 1) == doctest::Approx(69.0 / 70.0).epsilon(1e-15));
    CHECK(rel_diff(mixed_count_pmf(m, 2), std::exp(-40.0) / 70.0) < 1e-13);
    CHECK(mixed_count_pmf(m, 0) == 0.0);
    double total = 0.0;
    for (int k = 1; k <= 400; ++k) total += mixed_count_pmf(m, k);
    CHECK(total >= 1.0 - 1e-10);
    CHECK(total <= 1.0 + 1e-12);
    CHECK(mean_count(m) == doctest::Approx(111.0 / 70.0).epsilon(1e-14));
}

TEST_CASE("single-claim model has one claim per jump") {
    const auto m = sc_model();
    CHECK(mixed_count_pmf(m, 1) == 1.0);
    CHECK(mixed_count_pmf(m, 2) == 0.0);
    for (double s : {0.0, 0.3, 1.0, 1.7}) CHECK(count_pgf(m, s) == doctest::Approx(s));
}

TEST_CASE("count pgf against series summation") {
    const auto m = cc_model();
    CHECK(std::abs(count_pgf(m, 1.0) - 1.0) < 1e-12);
    for (double s : {0.0, 0.25, 0.9, 1.0, 1.0514, 1.1}) {
        const auto series = 69.0 / 70.0 * s + shifted_poisson_series(2, 40, s) / 70.0;
        CHECK(rel_diff(count_pgf(m, s), series.real()) < 1e-12);
    }
    for (auto s : {std::complex<double>(0.3, 0.8), std::complex<double>(1.02, -0.2)}) {
        const auto series = 69.0 / 70.0 * s + shifted_poisson_series(2, 40, s) / 70.0;
        CHECK(std::abs(count_pgf(m, s) - series) < 1e-12 * std::abs(series));
    }
    double prev = count_pgf(m, 0.0);
    for (int i = 1; i <= 100; ++i) {
        const double v = count_pgf(m, i / 100.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("tabulated cat count pgf stays inside its radius") {
    auto m = cc_model();
    TabulatedPmf t;
    double p = 0.5;
    for (int i = 0; i < 60; ++i, p *= 0.5) t.probabilities.push_back(p);  // ratio 1/2
    t.truncation_mass = 1e-12;
    m.cat_count = t;
    CHECK(pgf_radius(m) == doctest::Approx(2.0));
    // geometric series: sum_k 2^-(k-1) s^k from k = 2 = s^2 / (2 - s)
    const double s = 1.2;  // truncation error 0.6^60
    CHECK(count_pgf(m, s) == doctest::Approx(69.0 / 70 * s + s * s / (2 - s) / 70).epsilon(1e-12));
    CHECK_THROWS_AS(count_pgf(m, 2.5), DomainError);
}

TEST_CASE("severity exponential moment against quadrature") {
    const auto m = cc_model();
    CHECK(severity_exp_moment(m, 0.0) == 1.0);
    CHECK(severity_exp_moment(m, 1e-6) == doctest::Approx(std::pow(0.995, -10)).epsilon(1e-14));
    CHECK(severity_exp_moment(m, 1e-6) == doctest::Approx(1.0514).epsilon(1e-4));
    for (int i = 0; i < 10; ++i) {
        const double theta = 0.9 / 5000 * i / 9.0;
        const double oracle = gamma_exp_moment_quadrature(10, 5000, theta);
        CHECK(rel_diff(severity_exp_moment(m, theta), oracle) < 1e-8);
    }
    CHECK_THROWS_AS(severity_exp_moment(m, 2e-4), DomainError);
}

TEST_CASE("assumption validation") {
    SUBCASE("clustered model passes") {
        const auto r = validate_assumptions(cc_model());
        CHECK(r.usable);
        CHECK(r.limsup_ratio == 0.0);
        CHECK(std::isfinite(r.pgf_at_exp_moment));
    }
    SUBCASE("no catastrophes passes") { CHECK(validate_assumptions(sc_model()).usable); }
    SUBCASE("slowly decaying table fails") {
        auto m = cc_model();
        // E exp(eta Y) = 1.05 for an exponential severity
        m.severity = GammaSeverity{1.0, (1.0 - 1.0 / 1.05) / m.eta};
        TabulatedPmf t;
        for (double p = 0.01; p > 1e-16; p *= 0.99) t.probabilities.push_back(p);
        t.truncation_mass = 1e-12;
        m.cat_count = t;
        const auto r = validate_assumptions(m);
        CHECK(r.exp_moment == doctest::Approx(1.05).epsilon(1e-12));
        CHECK(r.limsup_ratio == doctest::Approx(0.99).epsilon(1e-12));
        CHECK_FALSE(r.ratio_ok);
        CHECK_FALSE(r.usable);
    }
    SUBCASE("zero intensity is rejected") {
        auto m = cc_model();
        m.lambda1 = m.lambda2 = 0;
        CHECK_THROWS_AS(check_model_fields(m), ConfigError);
        CHECK_FALSE(validate_assumptions(m).usable);
    }
}

TEST_CASE("fair premium against simulated annual claims") {
    CHECK(fair_premium(sc_model(), 10000) == doctest::Approx(500.0).epsilon(1e-14));
    CHECK(fair_premium(cc_model(), 10000) == doctest::Approx(555.0).epsilon(1e-14));
    auto none = sc_model();
    none.lambda1 = 0;
    CHECK(fair_premium(none, 10000) == 0.0);

    // C_1 given the total claim count N is Gamma(10 N, 5000).
    for (const auto& m : {sc_model(), cc_model()}) {
        std::mt19937_64 rng(12345);
        std::poisson_distribution<int> n1(m.lambda1 > 0 ? m.lambda1 : 1), n2(1.0), extra(40.0);
        const int n = 1000000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            long count = m.lambda1 > 0 ? n1(rng) : 0;
            if (m.lambda2 > 0) {
                const int cats = n2(rng);
                for (int c = 0; c < cats; ++c) count += 2 + extra(rng);
            }
            const double c1 = count > 0 ? std::gamma_distribution<double>(10.0 * count, 5000.0)(rng) : 0.0;
            sum += c1;
            sum2 += c1 * c1;
        }
        const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
        CHECK(std::abs(fair_premium(m, 10000) * 10000 - mean) < 3 * se);
    }
}
