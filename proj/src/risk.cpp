#include "catderiv/risk.hpp"

#include "catderiv/errors.hpp"
#include "catderiv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace catderiv {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// PLDensity

double PLDensity::integral() const {
    double s = 0.0;
    for (std::size_t i = 1; i < rho.size(); ++i) s += 0.5 * (density[i] + density[i - 1]) * (rho[i] - rho[i - 1]);
    return s;
}

double PLDensity::min_value() const {
    return density.empty() ? 0.0 : *std::min_element(density.begin(), density.end());
}

double PLDensity::cdf(double x) const {
    if (rho.empty() || x <= rho.front()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 1; i < rho.size(); ++i) {
        if (x < rho[i]) {
            const double f = (x - rho[i - 1]) / (rho[i] - rho[i - 1]);
            const double dx = x - rho[i - 1];
            const double vx = density[i - 1] + f * (density[i] - density[i - 1]);
            return s + 0.5 * (density[i - 1] + vx) * dx;
        }
        s += 0.5 * (density[i] + density[i - 1]) * (rho[i] - rho[i - 1]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Laplace transform of the profit-loss variable

LaplaceSolver::LaplaceSolver(const ClaimsModel& model, const MarketModel& market, const PolicySurface& policy,
                             const PayoffSpec& payoff, const GridSpec& fine, double price, SimulationStart start)
    : model_(model),
      market_(market),
      policy_(policy),
      payoff_(payoff),
      mu_(discretize_severity(model.severity, fine)),
      price_(price),
      start_(start) {
    const auto& g = policy.grid;
    if (g.n_xi < 1) throw ConfigError("grids.n_xi", "must be >= 1");
    const std::size_t cells = static_cast<std::size_t>(g.n_t) * static_cast<std::size_t>(g.n_c);
    lower_.resize(cells);
    weight_.resize(cells);
    q_.resize(cells);
    std::vector<char> need(static_cast<std::size_t>(g.n_xi + 1), 0);
    for (int n = 0; n < g.n_t; ++n)
        for (int i = 0; i < g.n_c; ++i) {
            const std::size_t idx = static_cast<std::size_t>(n) * static_cast<std::size_t>(g.n_c) + static_cast<std::size_t>(i);
            const double xi = std::clamp(policy.xi(n, i), 0.0, 1.0);
            const double x = xi * g.n_xi;
            const int k = std::min(static_cast<int>(std::floor(x)), g.n_xi - 1);
            lower_[idx] = k;
            weight_[idx] = x - k;
            q_[idx] = premium_income(market, xi);
            if (weight_[idx] < 1.0) need[static_cast<std::size_t>(k)] = 1;
            if (weight_[idx] > 0.0) need[static_cast<std::size_t>(k + 1)] = 1;
        }
    for (int k = 0; k <= g.n_xi; ++k)
        if (need[static_cast<std::size_t>(k)]) used_.push_back(k);
}

double LaplaceSolver::scale_guess() const {
    const double lam = model_.total_intensity();
    const double v = lam * model_.horizon * mean_count_squared(model_) * severity_second_moment(model_.severity);
    const double s = std::sqrt(v) + 0.5 * payoff_sup_norm(payoff_);
    return s > 0.0 ? s : 1.0;
}

cplx LaplaceSolver::value(cplx s) const {
    const double boundary = severity_mgf_boundary(model_.severity);
    if (!(s.real() < boundary)) {
        std::ostringstream os;
        os << "Re(s) = " << s.real() << " is outside the strip below " << boundary;
        throw DomainError(os.str());
    }
    if (s.real() * mu_.spec.z_max >= 700.0) throw DomainError("Re(s) * z_max >= 700");

    const auto& g = policy_.grid;
    const int nc = g.n_c;
    const std::size_t unc = static_cast<std::size_t>(nc);
    const double lam = model_.total_intensity();

    // kernels for the xi-grid points the policy touches
    const ComplexThinnedEngine engine(model_, mu_, s);
    std::vector<int> slot(static_cast<std::size_t>(g.n_xi + 1), -1);
    std::vector<std::vector<cplx>> kernels;
    std::vector<cplx> mass;
    for (int k : used_) {
        slot[static_cast<std::size_t>(k)] = static_cast<int>(kernels.size());
        auto kap = project_kernel(engine.masses(static_cast<double>(k) / g.n_xi), engine.dz(), g.dc());
        cplx m = 0.0;
        for (const auto& v : kap) m += v;
        mass.push_back(m);
        kernels.push_back(std::move(kap));
    }
    const CorrelationBank<cplx> bank(std::move(kernels), unc);

    // kernels needed per time row
    std::vector<std::vector<int>> row_slots(static_cast<std::size_t>(g.n_t));
    for (int n = 0; n < g.n_t; ++n) {
        std::vector<char> need(mass.size(), 0);
        for (int i = 0; i < nc; ++i) {
            const std::size_t idx = static_cast<std::size_t>(n) * unc + static_cast<std::size_t>(i);
            const int k = lower_[idx];
            if (weight_[idx] < 1.0) need[static_cast<std::size_t>(slot[static_cast<std::size_t>(k)])] = 1;
            if (weight_[idx] > 0.0) need[static_cast<std::size_t>(slot[static_cast<std::size_t>(k + 1)])] = 1;
        }
        for (std::size_t j = 0; j < need.size(); ++j)
            if (need[j]) row_slots[static_cast<std::size_t>(n)].push_back(static_cast<int>(j));
    }

    double gmax = 0.0;
    for (const auto& m : mass) gmax = std::max(gmax, std::abs(m));
    const double dt = g.dt();
    // the diagonal part is integrated exactly, so only the jump term limits the step
    const int nsub = std::max(1, static_cast<int>(std::ceil(dt * lam * (1.0 + gmax) / 2.0)));
    const double h = dt / nsub;

    std::vector<cplx> phi(unc), d(unc), corr, k1(unc), k2(unc), k3(unc), k4(unc), tmp(unc);
    for (int i = 0; i < nc; ++i) phi[static_cast<std::size_t>(i)] = std::exp(-s * payoff_value(payoff_, g.c(i)));

    // kernel mass seen by each node; folding it into the exponent keeps the
    // remainder small when phi is nearly flat in c
    std::vector<cplx> local(static_cast<std::size_t>(g.n_t) * unc);
    for (std::size_t idx = 0; idx < local.size(); ++idx) {
        const int k = lower_[idx];
        const double w = weight_[idx];
        cplx m = 0.0;
        if (w < 1.0) m += (1.0 - w) * mass[static_cast<std::size_t>(slot[static_cast<std::size_t>(k)])];
        if (w > 0.0) m += w * mass[static_cast<std::size_t>(slot[static_cast<std::size_t>(k + 1)])];
        local[idx] = m;
    }

    auto rhs = [&](const std::vector<cplx>& f, int n, std::vector<cplx>& out) {
        const cplx last = f[unc - 1];
        for (std::size_t i = 0; i < unc; ++i) d[i] = f[i] - last;
        bank.apply_subset(d, row_slots[static_cast<std::size_t>(n)], corr, Backend::Parallel);
        for (std::size_t i = 0; i < unc; ++i) {
            const std::size_t idx = static_cast<std::size_t>(n) * unc + i;
            const int k = lower_[idx];
            const double w = weight_[idx];
            cplx E = 0.0;
            if (w < 1.0) {
                const auto sl = static_cast<std::size_t>(slot[static_cast<std::size_t>(k)]);
                E += (1.0 - w) * (last * mass[sl] + corr[sl * unc + i]);
            }
            if (w > 0.0) {
                const auto sl = static_cast<std::size_t>(slot[static_cast<std::size_t>(k + 1)]);
                E += w * (last * mass[sl] + corr[sl * unc + i]);
            }
            out[i] = lam * (E - local[idx] * f[i]);
        }
    };

    // integrating-factor RK4: phi' = a phi + lam (E(phi) - m phi) with
    // a = -s q + lam (m - 1) fixed within a row
    std::vector<cplx> e_half(unc), e_full(unc);
    for (int n = g.n_t - 1; n >= 0; --n) {
        for (std::size_t i = 0; i < unc; ++i) {
            const std::size_t idx = static_cast<std::size_t>(n) * unc + i;
            const cplx a = -s * q_[idx] + lam * (local[idx] - 1.0);
            e_half[i] = std::exp(0.5 * h * a);
            e_full[i] = e_half[i] * e_half[i];
        }
        for (int sub = 0; sub < nsub; ++sub) {
            rhs(phi, n, k1);
            for (std::size_t i = 0; i < unc; ++i) tmp[i] = e_half[i] * (phi[i] + 0.5 * h * k1[i]);
            rhs(tmp, n, k2);
            for (std::size_t i = 0; i < unc; ++i) tmp[i] = e_half[i] * phi[i] + 0.5 * h * k2[i];
            rhs(tmp, n, k3);
            for (std::size_t i = 0; i < unc; ++i) tmp[i] = e_full[i] * phi[i] + h * e_half[i] * k3[i];
            rhs(tmp, n, k4);
            for (std::size_t i = 0; i < unc; ++i)
                phi[i] = e_full[i] * phi[i] +
                         h / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        for (const auto& v : phi)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw StabilityError("Laplace backward solve diverged");
    }

    // off-node starts are interpolated linearly; exact only on grid nodes
    const double x = start_.claims / g.dc();
    cplx phi0;
    if (x <= 0.0) {
        phi0 = phi[0];
    } else if (x >= nc - 1) {
        phi0 = phi[unc - 1];
    } else {
        const int i = static_cast<int>(x);
        const double f = x - i;
        phi0 = (1.0 - f) * phi[static_cast<std::size_t>(i)] + f * phi[static_cast<std::size_t>(i) + 1];
    }
    return std::exp(-s * (start_.wealth - price_)) * phi0;
}

std::vector<cplx> LaplaceSolver::contour(double sigma_b, const std::vector<double>& u) const {
    std::vector<cplx> out(u.size());
    const long n = static_cast<long>(u.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = value({sigma_b, u[static_cast<std::size_t>(k)]});
    return out;
}

// ---------------------------------------------------------------------------
// Inversion

PLDensity invert_pl_density(const std::vector<cplx>& samples, const LaplaceGrid& lg, const std::vector<double>& rho_grid) {
    PLDensity d;
    d.rho = rho_grid;
    d.density.assign(rho_grid.size(), 0.0);
    const int nu = lg.n_u;
    const double du = lg.u_max / (nu - 1);
    const long nr = static_cast<long>(rho_grid.size());
#pragma omp parallel for schedule(static)
    for (long r = 0; r < nr; ++r) {
        const double rho = rho_grid[static_cast<std::size_t>(r)];
        double acc = 0.0;
        for (int k = 0; k < nu; ++k) {
            const double u = lg.u(k);
            const double w = (k == 0 || k == nu - 1) ? 0.5 : 1.0;
            const cplx L = samples[static_cast<std::size_t>(k)];
            acc += w * (L.real() * std::cos(rho * u) - L.imag() * std::sin(rho * u));
        }
        d.density[static_cast<std::size_t>(r)] = std::exp(lg.sigma_b * rho) / std::numbers::pi * acc * du;
    }
    const double tail = std::abs(samples.back()) / std::max(std::abs(samples.front()), 1e-300);
    if (tail > 1e-6) {
        std::ostringstream os;
        os << "transform at u_max is still " << tail << " of its value on the real axis; truncation may be too aggressive";
        d.warnings.push_back(os.str());
    }
    if (d.min_value() < -1e-6) {
        std::ostringstream os;
        os << "negative inversion ripple down to " << d.min_value();
        d.warnings.push_back(os.str());
    }
    return d;
}

namespace {

PLResult pl_distribution_impl(const std::function<cplx(cplx)>& f,
                              const std::function<std::vector<cplx>(double, const std::vector<double>&)>& batch,
                              double scale, LaplaceGrid lg, int n_rho) {
    if (lg.n_u < 2) throw ConfigError("risk.n_u", "must be >= 2");
    const double sig = lg.sigma_b;
    const cplx L0 = f({sig, 0.0});
    const double up = 1e-2 / scale;
    const cplx L1 = f({sig, up});
    const cplx ell = std::log(L1 / L0);
    const double m = -ell.imag() / up;
    double v = -2.0 * ell.real() / (up * up);
    if (!(v > 0.0) || !std::isfinite(v)) v = scale * scale;
    const double sd = std::sqrt(v);

    if (!(lg.u_max > 0.0)) {
        double u = 1.0 / sd;
        for (int it = 0; it < 40 && std::abs(f({sig, u})) >= 1e-6 * std::abs(L0); ++it) u *= 2.0;
        lg.u_max = u;
    }
    std::vector<double> us(static_cast<std::size_t>(lg.n_u));
    for (int k = 0; k < lg.n_u; ++k) us[static_cast<std::size_t>(k)] = lg.u(k);
    const auto samples = batch(sig, us);

    const double center = m + sig * v;
    std::vector<double> rho(static_cast<std::size_t>(n_rho));
    for (int r = 0; r < n_rho; ++r) rho[static_cast<std::size_t>(r)] = center - 8.0 * sd + 16.0 * sd * r / (n_rho - 1);

    PLResult out;
    out.density = invert_pl_density(samples, lg, rho);
    out.grid = lg;
    out.tilted_mean = m;
    out.tilted_sd = sd;
    return out;
}

}  // namespace

PLResult pl_distribution(const LaplaceSolver& solver, LaplaceGrid lg, int n_rho) {
    return pl_distribution_impl([&](cplx s) { return solver.value(s); },
                                [&](double sig, const std::vector<double>& u) { return solver.contour(sig, u); },
                                solver.scale_guess(), lg, n_rho);
}

PLResult pl_distribution(const std::function<cplx(cplx)>& transform, double scale_guess, LaplaceGrid lg, int n_rho) {
    auto batch = [&](double sig, const std::vector<double>& u) {
        std::vector<cplx> out(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = transform({sig, u[k]});
        return out;
    };
    return pl_distribution_impl(transform, batch, scale_guess, lg, n_rho);
}

double ks_distance(const PLDensity& density, std::vector<double> samples) {
    if (samples.empty() || density.rho.empty()) return 1.0;
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double ks = 0.0;
    double cum = 0.0;
    std::size_t seg = 1;
    const auto& r = density.rho;
    const auto& v = density.density;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const double x = samples[j];
        double F;
        if (x <= r.front()) {
            F = 0.0;
        } else {
            while (seg < r.size() && x >= r[seg]) {
                cum += 0.5 * (v[seg] + v[seg - 1]) * (r[seg] - r[seg - 1]);
                ++seg;
            }
            if (seg >= r.size()) {
                F = cum;
            } else {
                const double f = (x - r[seg - 1]) / (r[seg] - r[seg - 1]);
                const double vx = v[seg - 1] + f * (v[seg] - v[seg - 1]);
                F = cum + 0.5 * (v[seg - 1] + vx) * (x - r[seg - 1]);
            }
        }
        ks = std::max({ks, std::abs(F - j / n), std::abs(F - (j + 1) / n)});
    }
    return ks;
}

// ---------------------------------------------------------------------------
// Empirical summaries

QuantileTable quantile_table(std::vector<double> x) {
    QuantileTable t;
    if (x.empty()) return t;
    std::sort(x.begin(), x.end());
    auto q = [&x](double p) {
        const double h = (static_cast<double>(x.size()) - 1.0) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        if (lo + 1 >= x.size()) return x.back();
        return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
    };
    t.q01 = q(0.01);
    t.q05 = q(0.05);
    t.q50 = q(0.50);
    t.q95 = q(0.95);
    t.q99 = q(0.99);
    std::size_t k = 0;
    while (k < x.size() && x[k] <= t.q05) ++k;
    t.es05 = k > 0 ? pairwise_sum(x.data(), k) / static_cast<double>(k) : x.front();
    return t;
}

namespace {

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
    return std::sqrt(pairwise_sum(sq.data(), sq.size()) / static_cast<double>(v.size() - 1));
}

}  // namespace

PLDensity histogram_density(const std::vector<double>& values) {
    PLDensity d;
    if (values.empty()) return d;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn, hi = *mx;
    const double n = static_cast<double>(values.size());
    if (hi == lo) {
        d.rho = {lo};
        d.density = {1.0};
        return d;
    }
    const double h = 3.49 * sample_sd(values) * std::cbrt(1.0 / n);
    const auto nb = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / h)));
    const double w = (hi - lo) / static_cast<double>(nb);
    std::vector<double> counts(nb, 0.0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / w);
        counts[std::min(b, nb - 1)] += 1.0;
    }
    for (std::size_t b = 0; b < nb; ++b) {
        d.rho.push_back(lo + (static_cast<double>(b) + 0.5) * w);
        d.density.push_back(counts[b] / (n * w));
    }
    return d;
}

PLDensity kde_density(const std::vector<double>& values, int npts) {
    const double sd = sample_sd(values);
    if (!(sd > 0.0)) return histogram_density(values);
    const double n = static_cast<double>(values.size());
    const double bw = 1.06 * sd * std::pow(n, -0.2);
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn - 3.0 * bw, hi = *mx + 3.0 * bw;
    PLDensity d;
    d.rho.resize(static_cast<std::size_t>(npts));
    d.density.resize(static_cast<std::size_t>(npts));
    const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
#pragma omp parallel for schedule(static)
    for (int r = 0; r < npts; ++r) {
        const double x = lo + (hi - lo) * r / (npts - 1);
        std::vector<double> terms(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double z = (x - values[i]) / bw;
            terms[i] = std::exp(-0.5 * z * z);
        }
        d.rho[static_cast<std::size_t>(r)] = x;
        d.density[static_cast<std::size_t>(r)] = norm * pairwise_sum(terms.data(), terms.size());
    }
    return d;
}

ResidualRisk residual_risk_density(const ClaimsModel& model, const MarketModel& market, const Policy& policy_star,
                                   const Policy& policy_zero, const PayoffSpec& payoff, double price, long n_paths,
                                   std::uint64_t seed, SimulationStart start) {
    ResidualRisk r;
    r.samples.resize(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(static)
    for (long p = 0; p < n_paths; ++p) {
        const PathSample s = draw_path(model, seed, static_cast<std::uint64_t>(p));
        const PathOutcome a = evaluate_path(s, market, policy_star, model.horizon, start);
        const PathOutcome b = evaluate_path(s, market, policy_zero, model.horizon, start);
        r.samples[static_cast<std::size_t>(p)] =
            payoff_value(payoff, start.claims + a.claims_total) - price + a.wealth - b.wealth;
    }
    r.histogram = histogram_density(r.samples);
    r.kde = kde_density(r.samples);
    r.quantiles = quantile_table(r.samples);
    r.mean = summarize(r.samples, seed);
    return r;
}

std::vector<double> pl_samples(const ClaimsModel& model, const MarketModel& market, const Policy& policy,
                               const PayoffSpec& payoff, double price, long n_paths, std::uint64_t seed,
                               SimulationStart start) {
    std::vector<double> out(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(static)
    for (long p = 0; p < n_paths; ++p) {
        const PathSample s = draw_path(model, seed, static_cast<std::uint64_t>(p));
        const PathOutcome o = evaluate_path(s, market, policy, model.horizon, start);
        out[static_cast<std::size_t>(p)] = o.wealth + payoff_value(payoff, start.claims + o.claims_total) - price;
    }
    return out;
}

void write_density_csv(std::ostream& os, const PLDensity& d) {
    os << "rho,density\n";
    char buf[96];
    for (std::size_t i = 0; i < d.rho.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", d.rho[i], d.density[i]);
        os << buf;
    }
}

}  // namespace catderiv
