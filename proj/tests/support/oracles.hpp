#pragma once

// Independent reference values shared by the unit tests and the acceptance run.

#include "catderiv/grid_transform.hpp"
#include "catderiv/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>

namespace oracles {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

inline double closed_form_mass(const catderiv::ClaimsModel& m, double xi) {
    return catderiv::count_pgf(m, xi * (catderiv::severity_exp_moment(m, m.eta) - 1.0) + 1.0);
}

// Gamma(shape, scale) density, log space.
inline double gamma_pdf(double shape, double scale, double y) {
    if (y <= 0) return 0.0;
    return std::exp((shape - 1) * std::log(y) - y / scale - std::lgamma(shape) - shape * std::log(scale));
}

// E[sigma(c + U + V) exp(eta U)] with U ~ Gamma(a j, s), V ~ Gamma(a r, s); j or r may be zero.
// `kink` is where sigma stops being smooth; each integral is split there.
inline double nested(const std::function<double(double)>& sigma, double c, int j, int r, double a, double s, double eta,
                     double kink, double end) {
    auto inner = [&](double u) {
        if (r == 0) return sigma(c + u);
        auto g = [&](double v) { return sigma(c + u + v) * gamma_pdf(a * r, s, v); };
        return GK::integrate(g, 0.0, std::max(0.0, kink - c - u), 8, 1e-13) +
               GK::integrate(g, std::max(0.0, kink - c - u), end, 8, 1e-13);
    };
    if (j == 0) return inner(0.0);
    auto outer = [&](double u) { return inner(u) * std::exp(eta * u) * gamma_pdf(a * j, s, u); };
    return GK::integrate(outer, 0.0, std::max(0.0, kink - c), 8, 1e-12) +
           GK::integrate(outer, std::max(0.0, kink - c), end, 8, 1e-12);
}

// sum_k a_k sum_{K subset of {1..k}} xi^|K| (1-xi)^(k-|K|) E[sigma(c + sum_K Y) e^{eta sum_K Y} ...]
// for a Gamma severity and a count law with finitely many values.
inline double subset_enumeration(const catderiv::ClaimsModel& m, int kmax, const std::function<double(double)>& sigma,
                                 double kink, double c, double xi, double end) {
    const auto& g = std::get<catderiv::GammaSeverity>(m.severity);
    double total = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const double ak = catderiv::mixed_count_pmf(m, k);
        for (unsigned subset = 0; subset < (1u << k); ++subset) {
            const int j = __builtin_popcount(subset);
            total += ak * std::pow(xi, j) * std::pow(1 - xi, k - j) * nested(sigma, c, j, k - j, g.shape, g.scale, m.eta, kink, end);
        }
    }
    return total;
}

}  // namespace oracles
