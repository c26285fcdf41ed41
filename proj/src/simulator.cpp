#include "catderiv/simulator.hpp"

#include <boost/math/distributions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace catderiv {

namespace {

int draw_shifted_poisson(const ShiftedPoisson& law, double u) {
    // sequential inversion from zero; the pmf recursion starts at exp(-rate)
    double p = std::exp(-law.rate);
    if (p == 0.0) {
        // rate too large for the recursion: start at the mode in log space
        int j = static_cast<int>(law.rate);
        double cdf = 0.0;
        for (int i = 0; i <= j; ++i) cdf += std::exp(i * std::log(law.rate) - law.rate - std::lgamma(i + 1.0));
        double pj = std::exp(j * std::log(law.rate) - law.rate - std::lgamma(j + 1.0));
        while (cdf < u) {
            ++j;
            pj *= law.rate / j;
            cdf += pj;
            if (pj == 0.0) break;
        }
        return law.shift + j;
    }
    int j = 0;
    double cdf = p;
    while (cdf < u) {
        ++j;
        p *= law.rate / j;
        cdf += p;
        if (p == 0.0 && j > law.rate) break;
    }
    return law.shift + j;
}

int draw_tabulated_count(const TabulatedPmf& law, double u) {
    double cdf = 0.0;
    for (std::size_t i = 0; i < law.probabilities.size(); ++i) {
        cdf += law.probabilities[i];
        if (u <= cdf) return static_cast<int>(i) + 2;
    }
    return static_cast<int>(law.probabilities.size()) + 1;
}

double tabulated_quantile(const TabulatedSeverity& t, double u) {
    // the CDF is piecewise quadratic between nodes; invert it within the cell
    double cdf = 0.0;
    for (std::size_t j = 0; j + 1 < t.values.size(); ++j) {
        const double a = t.values[j], b = t.values[j + 1];
        const double cell = 0.5 * (a + b) * t.dz;
        if (cdf + cell >= u || j + 2 == t.values.size()) {
            const double r = std::max(u - cdf, 0.0);
            const double slope = (b - a) / t.dz;
            double x;
            if (std::abs(slope) < 1e-300) {
                x = a > 0.0 ? r / a : 0.0;
            } else {
                x = (-a + std::sqrt(std::max(a * a + 2.0 * slope * r, 0.0))) / slope;
            }
            return j * t.dz + std::clamp(x, 0.0, t.dz);
        }
        cdf += cell;
    }
    return 0.0;
}

double draw_severity(const SeverityLaw& law, KeyedStream& rng, bool antithetic, bool flip) {
    if (const auto* g = std::get_if<GammaSeverity>(&law)) {
        if (!antithetic) {
            std::gamma_distribution<double> dist(g->shape, g->scale);
            return dist(rng);
        }
        const double u = rng.uniform();
        const boost::math::gamma_distribution<double> dist(g->shape, g->scale);
        // the complement keeps full precision where 1 - u would round to 1
        return flip ? boost::math::quantile(boost::math::complement(dist, u)) : boost::math::quantile(dist, u);
    }
    const double u = rng.uniform();
    return tabulated_quantile(std::get<TabulatedSeverity>(law), flip ? 1.0 - u : u);
}

double policy_at(const Policy& policy, int step, double c) {
    if (const auto* k = std::get_if<ConstantPolicy>(&policy)) return k->xi;
    const PolicySurface& s = *std::get<FeedbackPolicy>(policy).surface;
    const int nc = s.grid.n_c;
    const double dc = s.grid.dc();
    const double x = c / dc;
    double xi;
    if (x <= 0.0) {
        xi = s.xi(step, 0);
    } else if (x >= nc - 1) {
        xi = s.xi(step, nc - 1);
    } else {
        const int i = static_cast<int>(x);
        const double f = x - i;
        xi = (1.0 - f) * s.xi(step, i) + f * s.xi(step, i + 1);
    }
    return std::clamp(xi, 0.0, 1.0);
}

}  // namespace

double PathSample::index_total() const {
    double s = 0.0;
    for (double y : severities) s += y;
    return s;
}

PathSample draw_path(const ClaimsModel& model, std::uint64_t seed, std::uint64_t path, bool antithetic) {
    PathSample p;
    const double lam = model.total_intensity();
    if (lam <= 0.0) return p;
    const std::uint64_t base = antithetic ? path / 2 : path;
    const bool flip = antithetic && (path % 2 == 1);

    KeyedStream arrivals(seed, base, 0, 0, Stream::Arrival);
    double t = 0.0;
    for (;;) {
        t += -std::log(arrivals.uniform()) / lam;
        if (t > model.horizon) break;
        p.jump_times.push_back(t);
    }
    const double p1 = model.lambda1 / lam;
    for (std::size_t j = 0; j < p.jump_times.size(); ++j) {
        int count = 1;
        if (model.lambda2 > 0.0) {
            KeyedStream branch(seed, base, j, 0, Stream::Branch);
            if (branch.uniform() > p1) {
                KeyedStream cs(seed, base, j, 0, Stream::CatCount);
                const double u = cs.uniform();
                if (const auto* sp = std::get_if<ShiftedPoisson>(&model.cat_count))
                    count = draw_shifted_poisson(*sp, u);
                else
                    count = draw_tabulated_count(std::get<TabulatedPmf>(model.cat_count), u);
            }
        }
        p.offsets.push_back(p.severities.size());
        p.counts.push_back(count);
        for (int c = 0; c < count; ++c) {
            KeyedStream sv(seed, base, j, static_cast<std::uint64_t>(c), Stream::Severity);
            p.severities.push_back(draw_severity(model.severity, sv, antithetic, flip));
            KeyedStream th(seed, base, j, static_cast<std::uint64_t>(c), Stream::Thinning);
            p.uniforms.push_back(th.uniform());
        }
    }
    return p;
}

PathOutcome evaluate_path(const PathSample& path, const MarketModel& market, const Policy& policy, double horizon,
                          SimulationStart start, bool record) {
    PathOutcome out;
    double x = start.wealth;
    double c = start.claims;
    double t = 0.0;

    const PolicySurface* surf = nullptr;
    if (const auto* f = std::get_if<FeedbackPolicy>(&policy)) surf = f->surface;
    const double dt = surf ? surf->grid.dt() : horizon;
    const int n_steps = surf ? surf->grid.n_t : 1;
    auto step_of = [&](double s) { return std::min(static_cast<int>(std::floor(s / dt)), n_steps - 1); };

    // premium income over [a, b) with c frozen
    auto drift = [&](double a, double b) {
        if (!surf) return premium_income(market, std::get<ConstantPolicy>(policy).xi) * (b - a);
        double acc = 0.0;
        double s = a;
        for (int n = step_of(a); s < b; ++n) {
            const double e = n + 1 >= n_steps ? b : std::min(b, (n + 1) * dt);
            if (e > s) acc += premium_income(market, policy_at(policy, n, c)) * (e - s);
            s = e;
        }
        return acc;
    };

    for (std::size_t j = 0; j < path.jump_times.size(); ++j) {
        const double tau = path.jump_times[j];
        x += drift(t, tau);
        t = tau;
        const double xi = policy_at(policy, surf ? step_of(tau) : 0, c);
        double batch = 0.0, acc = 0.0;
        int nacc = 0;
        const std::size_t o = path.offsets[j];
        for (int k = 0; k < path.counts[j]; ++k) {
            const double y = path.severities[o + static_cast<std::size_t>(k)];
            batch += y;
            if (path.uniforms[o + static_cast<std::size_t>(k)] <= xi) {
                acc += y;
                ++nacc;
            }
        }
        c += batch;
        x -= acc;
        out.claims_total += batch;
        out.accepted_total += acc;
        out.accepted_count += nacc;
        out.claim_count += path.counts[j];
        if (record) out.jumps.push_back({tau, path.counts[j], batch, acc, x, nacc});
    }
    x += drift(t, horizon);
    out.wealth = x;
    return out;
}

SampledPath sample_path(const ClaimsModel& model, const MarketModel& market, const Policy& policy, std::uint64_t seed,
                        std::uint64_t path, SimulationStart start) {
    SampledPath s;
    s.sample = draw_path(model, seed, path);
    s.outcome = evaluate_path(s.sample, market, policy, model.horizon, start, true);
    return s;
}

std::pair<SampledPath, SampledPath> coupled_sample(const ClaimsModel& model, const MarketModel& market,
                                                   const Policy& a, const Policy& b, std::uint64_t seed,
                                                   std::uint64_t path, SimulationStart start) {
    SampledPath pa, pb;
    pa.sample = draw_path(model, seed, path);
    pb.sample = pa.sample;
    pa.outcome = evaluate_path(pa.sample, market, a, model.horizon, start, true);
    pb.outcome = evaluate_path(pb.sample, market, b, model.horizon, start, true);
    return {std::move(pa), std::move(pb)};
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed) {
    MCEstimate e;
    e.n_paths = static_cast<long>(values.size());
    e.seed = seed;
    if (values.empty()) return e;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mn == *mx) {
        e.estimate = *mn;
        return e;
    }
    const double n = static_cast<double>(values.size());
    e.estimate = pairwise_sum(values.data(), values.size()) / n;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - e.estimate) * (values[i] - e.estimate);
    const double var = pairwise_sum(sq.data(), sq.size()) / std::max(n - 1.0, 1.0);
    e.std_error = std::sqrt(var / n);
    return e;
}

MCEstimate mc_expected_utility(const ClaimsModel& model, const MarketModel& market, const Policy& policy,
                               const PayoffSpec& payoff, long n_paths, std::uint64_t seed, SimulationStart start,
                               bool antithetic) {
    if (antithetic && n_paths % 2 == 1) ++n_paths;
    std::vector<double> u(static_cast<std::size_t>(n_paths));
    const double eta = model.eta;
#pragma omp parallel for schedule(static)
    for (long p = 0; p < n_paths; ++p) {
        const PathSample s = draw_path(model, seed, static_cast<std::uint64_t>(p), antithetic);
        const PathOutcome o = evaluate_path(s, market, policy, model.horizon, start);
        u[static_cast<std::size_t>(p)] = -std::exp(-eta * (o.wealth + payoff_value(payoff, start.claims + o.claims_total)));
    }
    if (!antithetic) return summarize(u, seed);
    std::vector<double> pairs(u.size() / 2);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = 0.5 * (u[2 * i] + u[2 * i + 1]);
    MCEstimate e = summarize(pairs, seed);
    e.n_paths = n_paths;
    return e;
}

void write_paths_csv_header(std::ostream& os) { os << "path_id,jump_time,count,claim_total,accepted_total,wealth_after\n"; }

void write_path_rows(std::ostream& os, long path_id, const PathOutcome& o) {
    char buf[160];
    for (const auto& j : o.jumps) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%d,%.17g,%.17g,%.17g\n", path_id, j.time, j.count, j.claim_total,
                      j.accepted_total, j.wealth_after);
        os << buf;
    }
}

}  // namespace catderiv
