#include "catderiv/hjb_solver.hpp"

#include "catderiv/errors.hpp"
#include "catderiv/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace catderiv {

// ---------------------------------------------------------------------------
// Payoffs

void check_payoff(const PayoffSpec& payoff) {
    if (const auto* s = std::get_if<SpreadOption>(&payoff)) {
        if (!(s->strike > 0.0) || !std::isfinite(s->strike)) throw ConfigError("payoff.strike", "must be > 0");
        if (!(s->cap > s->strike) || !std::isfinite(s->cap)) throw ConfigError("payoff.cap", "must exceed the strike");
    } else if (const auto* t = std::get_if<TabulatedPayoff>(&payoff)) {
        if (t->c.empty() || t->c.size() != t->value.size())
            throw ConfigError("payoff", "c and value need equal nonzero length");
        if (t->c.front() < 0.0) throw ConfigError("payoff.c", "must be >= 0");
        for (std::size_t i = 0; i < t->c.size(); ++i) {
            if (!std::isfinite(t->c[i]) || !std::isfinite(t->value[i]))
                throw ConfigError("payoff", "values must be finite");
            if (i > 0 && !(t->c[i] > t->c[i - 1])) throw ConfigError("payoff.c", "must be strictly increasing");
        }
    }
}

double payoff_value(const PayoffSpec& payoff, double c) {
    if (const auto* s = std::get_if<SpreadOption>(&payoff))
        return std::max(0.0, std::min(c - s->strike, s->cap - s->strike));
    if (std::holds_alternative<ZeroPayoff>(payoff)) return 0.0;
    const auto& t = std::get<TabulatedPayoff>(payoff);
    if (c <= t.c.front()) return t.value.front();
    if (c >= t.c.back()) return t.value.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(t.c.begin(), t.c.end(), c) - t.c.begin());
    const double w = (c - t.c[i - 1]) / (t.c[i] - t.c[i - 1]);
    return t.value[i - 1] + w * (t.value[i] - t.value[i - 1]);
}

double payoff_sup_norm(const PayoffSpec& payoff) {
    if (const auto* s = std::get_if<SpreadOption>(&payoff)) return s->cap - s->strike;
    if (std::holds_alternative<ZeroPayoff>(payoff)) return 0.0;
    double m = 0.0;
    for (double v : std::get<TabulatedPayoff>(payoff).value) m = std::max(m, std::abs(v));
    return m;
}

double payoff_flat_from(const PayoffSpec& payoff) {
    if (const auto* s = std::get_if<SpreadOption>(&payoff)) return s->cap;
    if (std::holds_alternative<ZeroPayoff>(payoff)) return 0.0;
    return std::get<TabulatedPayoff>(payoff).c.back();
}

double payoff_scale(const PayoffSpec& payoff) { return payoff_sup_norm(payoff); }

// ---------------------------------------------------------------------------

int default_time_steps(const ClaimsModel& model) {
    const double T = model.horizon;
    double dt = 1e-3 * T;
    if (model.total_intensity() > 0.0) dt = std::min(dt, 0.1 / model.total_intensity());
    return static_cast<int>(std::ceil(T / dt - 1e-9));
}

W0Result w0_closed_form(const ClaimsModel& model, const MarketModel& market, double t, int n_xi) {
    const double lam = model.total_intensity();
    const double le = lam / model.eta;
    const double M = severity_exp_moment(model, model.eta);
    auto f = [&](double xi) { return premium_income(market, xi) + le * (1.0 - count_pgf(model, xi * (M - 1.0) + 1.0)); };
    const Argmax a = maximize_on_grid(f, n_xi, 1e-8);
    return {(model.horizon - t) * a.value, a.xi, a.value};
}

KernelFamily build_kernel_family(const ClaimsModel& model, const GridSpec& fine, const SolveGrid& grid) {
    const DensityGrid mu = discretize_severity(model.severity, fine);
    const DensityGrid mt = tilt(mu, model.eta);
    const ThinnedMixtureEngine engine(model, mu, mt);
    const int nk = grid.n_xi + 1;
    std::vector<std::vector<double>> kernels(static_cast<std::size_t>(nk));
    std::vector<double> clamped(static_cast<std::size_t>(nk));
    KernelFamily fam;
    fam.fine = fine;
    fam.xi.resize(static_cast<std::size_t>(nk));
    fam.mass.resize(static_cast<std::size_t>(nk));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nk; ++k) {
        const double xi = static_cast<double>(k) / grid.n_xi;
        const ThinnedDensity td = engine(xi);
        auto kap = project_kernel(td.masses, fine.dz(), grid.dc());
        double s = 0.0;
        for (double v : kap) s += v;
        const auto uk = static_cast<std::size_t>(k);
        fam.xi[uk] = xi;
        fam.mass[uk] = s;
        clamped[uk] = td.clamped_mass;
        kernels[uk] = std::move(kap);
    }
    fam.max_clamped_mass = *std::max_element(clamped.begin(), clamped.end());
    fam.bank = CorrelationBank<double>(std::move(kernels), static_cast<std::size_t>(grid.n_c));
    return fam;
}

void check_solve_grid(const ClaimsModel& model, const PayoffSpec& payoff, const GridSpec& fine,
                      const SolveGrid& grid) {
    if (grid.n_c < 2) throw ConfigError("grids.n_c", "must be >= 2");
    if (grid.n_t < 1) throw ConfigError("grids.n_t", "must be >= 1");
    if (grid.n_xi < 5) throw ConfigError("grids.n_xi", "must be >= 5");
    if (!(grid.c_max > 0.0)) throw ConfigError("grids.c_max", "must be > 0");
    const double need = payoff_flat_from(payoff) + fine.z_max;
    if (grid.c_max < need * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "c_max = " << grid.c_max << " is below flat-region start + z_max = " << need;
        throw GridError(os.str());
    }
    const double g = count_pgf(model, severity_exp_moment(model, model.eta));
    const double r = grid.dt() * model.total_intensity() * (1.0 + g);
    if (r > 2.5) {
        std::ostringstream os;
        os << "time step too large: dt * lambda * (1 + G(E e^{eta Y})) = " << r << " > 2.5";
        throw StabilityError(os.str());
    }
}

namespace {

// 1 / prod_{m != l} (l - m) for six equispaced nodes
constexpr std::array<double, 6> kLagrangeDen = {-1.0 / 120, 1.0 / 24, -1.0 / 12, 1.0 / 12, -1.0 / 24, 1.0 / 120};

struct NodeContext {
    const MarketModel* market;
    const std::vector<double>* q;     // q at the grid candidates
    const std::vector<double>* mass;  // kernel sums
    double le;                        // lambda / eta
    int n_xi;
};

/// Nodewise sup over xi of q(xi) - le (A E(xi) - 1), where E(xi_k) = mass_k + corr_k.
/// `corr` points at the correlation entry for k = 0 with stride `stride`.
Argmax optimize_node(const NodeContext& ctx, double A, const double* corr, std::size_t stride) {
    const int nk = ctx.n_xi + 1;
    const auto& q = *ctx.q;
    const auto& S = *ctx.mass;
    auto E = [&](int k) { return S[k] + (corr ? corr[k * stride] : 0.0); };

    int kb = 0;
    double best = q[0] - ctx.le * (A * E(0) - 1.0);
    for (int k = 1; k < nk; ++k) {
        const double v = q[k] - ctx.le * (A * E(k) - 1.0);
        if (v > best) {
            best = v;
            kb = k;
        }
    }
    Argmax out{static_cast<double>(kb) / ctx.n_xi, best};

    const int j0 = std::clamp(kb - 2, 0, nk - 6);
    std::array<double, 6> y;
    for (int l = 0; l < 6; ++l) y[l] = E(j0 + l) * kLagrangeDen[l];
    const double h = 1.0 / ctx.n_xi;
    const double x0 = j0 * h;
    auto interp = [&](double x) {
        const double s = (x - x0) / h;
        std::array<double, 6> d;
        for (int l = 0; l < 6; ++l) d[l] = s - l;
        double acc = 0.0;
        for (int l = 0; l < 6; ++l) {
            double p = y[l];
            for (int m = 0; m < 6; ++m)
                if (m != l) p *= d[m];
            acc += p;
        }
        return acc;
    };
    auto f = [&](double x) { return premium_income(*ctx.market, x) - ctx.le * (A * interp(x) - 1.0); };
    const double lo = std::max(kb - 1, 0) * h;
    const double hi = std::min(kb + 1, ctx.n_xi) * h;
    const Argmax g = golden_section_max(f, lo, hi, 1e-6);
    if (g.value > out.value) out = g;
    return out;
}

}  // namespace

SolveResult solve_backward(const ClaimsModel& model, const MarketModel& market, const PayoffSpec& payoff,
                           const SolveGrid& grid, const GridSpec& fine, SolveMode mode, Backend backend) {
    check_solve_grid(model, payoff, fine, grid);
    const KernelFamily fam = build_kernel_family(model, fine, grid);
    return solve_backward(model, market, payoff, grid, fam, mode, backend);
}

SolveResult solve_backward(const ClaimsModel& model, const MarketModel& market, const PayoffSpec& payoff,
                           const SolveGrid& grid, const KernelFamily& fam, SolveMode mode, Backend backend) {
    check_solve_grid(model, payoff, fam.fine, grid);
    const int nc = grid.n_c;
    const int nk = grid.n_xi + 1;
    const double eta = model.eta;
    const std::size_t unc = static_cast<std::size_t>(nc);

    std::vector<double> q(static_cast<std::size_t>(nk));
    for (int k = 0; k < nk; ++k) q[static_cast<std::size_t>(k)] = premium_income(market, fam.xi[static_cast<std::size_t>(k)]);
    const NodeContext ctx{&market, &q, &fam.mass, model.total_intensity() / eta, grid.n_xi};

    SolveResult res;
    res.value.grid = grid;
    res.policy.grid = grid;
    res.value.values.assign(static_cast<std::size_t>(grid.n_t + 1) * unc, 0.0);
    res.policy.xi_star.assign(res.value.values.size(), 0.0);
    res.policy.loading.assign(res.value.values.size(), 0.0);

    res.w_bar = optimize_node(ctx, 1.0, nullptr, 0).value;
    const double shift = mode == SolveMode::P ? res.w_bar : 0.0;
    res.bound = sup_norm_q(market) * model.horizon + payoff_sup_norm(payoff);

    std::vector<double> d(unc), corr;
    std::vector<double> xi_tmp(unc);
    const bool par = backend == Backend::Parallel;

    // rhs = sup_xi (q + A w) - shift; the time derivative is -rhs.
    auto hamiltonian = [&](const std::vector<double>& w, std::vector<double>& rhs, double* xi_out) {
        const double wref = w[unc - 1];
        for (std::size_t i = 0; i < unc; ++i) d[i] = std::expm1(-eta * (w[i] - wref));
        fam.bank.apply(d, corr, backend);
#pragma omp parallel for schedule(static) if (par)
        for (int i = 0; i < nc; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double A = std::exp(eta * (w[ui] - wref));
            const Argmax a = optimize_node(ctx, A, corr.data() + ui, unc);
            rhs[ui] = a.value - shift;
            if (xi_out) xi_out[ui] = a.xi;
        }
    };

    auto store_policy = [&](int n) {
        for (int i = 0; i < nc; ++i) {
            const std::size_t idx = static_cast<std::size_t>(n) * unc + static_cast<std::size_t>(i);
            res.policy.xi_star[idx] = xi_tmp[static_cast<std::size_t>(i)];
            res.policy.loading[idx] = loading_for_share(market, xi_tmp[static_cast<std::size_t>(i)]);
        }
    };

    auto check_bound = [&](int n, const std::vector<double>& v) {
        const double w0 = mode == SolveMode::P ? res.w_bar * (model.horizon - grid.t(n)) : 0.0;
        for (double x : v) {
            const double w = std::abs(x + w0);
            if (!std::isfinite(w) || w - res.bound > 1e-4) {
                std::ostringstream os;
                os << "value " << w << " at time node " << n << " leaves the bound " << res.bound;
                throw StabilityError(os.str());
            }
            res.max_abs_w = std::max(res.max_abs_w, w);
        }
    };

    std::vector<double> w(unc), k1(unc), k2(unc), k3(unc), k4(unc), tmp(unc);
    for (int i = 0; i < nc; ++i) w[static_cast<std::size_t>(i)] = payoff_value(payoff, grid.c(i));
    std::copy(w.begin(), w.end(), res.value.values.begin() + static_cast<long>(grid.n_t) * nc);
    check_bound(grid.n_t, w);

    const double dt = grid.dt();
    for (int n = grid.n_t; n >= 1; --n) {
        hamiltonian(w, k1, xi_tmp.data());
        store_policy(n);
        for (std::size_t i = 0; i < unc; ++i) tmp[i] = w[i] + 0.5 * dt * k1[i];
        hamiltonian(tmp, k2, nullptr);
        for (std::size_t i = 0; i < unc; ++i) tmp[i] = w[i] + 0.5 * dt * k2[i];
        hamiltonian(tmp, k3, nullptr);
        for (std::size_t i = 0; i < unc; ++i) tmp[i] = w[i] + dt * k3[i];
        hamiltonian(tmp, k4, nullptr);
        for (std::size_t i = 0; i < unc; ++i) w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        std::copy(w.begin(), w.end(), res.value.values.begin() + static_cast<long>(n - 1) * nc);
        check_bound(n - 1, w);
    }
    hamiltonian(w, k1, xi_tmp.data());
    store_policy(0);
    return res;
}

PriceResult price_surface(const ClaimsModel& model, const MarketModel& market, const PayoffSpec& payoff,
                          const SolveGrid& grid, const GridSpec& fine, Backend backend) {
    check_solve_grid(model, payoff, fine, grid);
    const KernelFamily fam = build_kernel_family(model, fine, grid);
    PriceResult r;
    r.p_solve = solve_backward(model, market, payoff, grid, fam, SolveMode::P, backend);
    r.w_solve = solve_backward(model, market, payoff, grid, fam, SolveMode::W, backend);
    r.w0 = w0_closed_form(model, market, 0.0, grid.n_xi);
    for (int n = 0; n <= grid.n_t; ++n) {
        const double w0 = r.w0.rate * (model.horizon - grid.t(n));
        for (int i = 0; i < grid.n_c; ++i)
            r.disagreement = std::max(r.disagreement, std::abs(r.p_solve.value.at(n, i) - (r.w_solve.value.at(n, i) - w0)));
    }
    double scale = payoff_scale(payoff);
    if (scale <= 0.0) scale = std::max(sup_norm_q(market) * model.horizon, 1.0);
    if (r.disagreement > 1e-5 * scale) {
        std::ostringstream os;
        os << "direct price and w - w0 disagree by " << r.disagreement << " (> " << 1e-5 * scale << ")";
        throw ConsistencyError(os.str());
    }
    return r;
}

// ---------------------------------------------------------------------------
// CSV

void write_price_csv(std::ostream& os, const ValueSurface& s) {
    os << "t,c,value\n";
    char buf[96];
    for (int n = 0; n <= s.grid.n_t; ++n)
        for (int i = 0; i < s.grid.n_c; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.grid.t(n), s.grid.c(i), s.at(n, i));
            os << buf;
        }
}

void write_policy_csv(std::ostream& os, const PolicySurface& s) {
    os << "t,c,xi_star,loading\n";
    char buf[128];
    const std::size_t nc = static_cast<std::size_t>(s.grid.n_c);
    for (int n = 0; n <= s.grid.n_t; ++n)
        for (int i = 0; i < s.grid.n_c; ++i) {
            const std::size_t idx = static_cast<std::size_t>(n) * nc + static_cast<std::size_t>(i);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s.grid.t(n), s.grid.c(i), s.xi_star[idx],
                          s.loading[idx]);
            os << buf;
        }
}

PolicySurface read_policy_csv(std::istream& is, int n_xi) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,c,xi_star,loading", 0) != 0)
        throw MissingArtifactError("policy CSV lacks the expected header");
    std::vector<double> ts, cs;
    PolicySurface s;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double t, c, xi, th;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &c, &xi, &th) != 4)
            throw MissingArtifactError("malformed policy CSV row: " + line);
        if (ts.empty() || t != ts.back()) ts.push_back(t);
        if (ts.size() == 1) cs.push_back(c);
        s.xi_star.push_back(xi);
        s.loading.push_back(th);
    }
    if (ts.size() < 2 || cs.size() < 2 || s.xi_star.size() != ts.size() * cs.size())
        throw MissingArtifactError("policy CSV is not a complete t x c grid");
    s.grid.n_c = static_cast<int>(cs.size());
    s.grid.n_t = static_cast<int>(ts.size()) - 1;
    s.grid.c_max = cs.back();
    s.grid.horizon = ts.back();
    s.grid.n_xi = n_xi;
    return s;
}

}  // namespace catderiv
