#include "catderiv/grid_transform.hpp"

#include "catderiv/errors.hpp"
#include "catderiv/fft.hpp"
#include "catderiv/kernels.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace catderiv {

using cplx = std::complex<double>;

namespace {

double end_weight(std::size_t j, std::size_t n) { return (j == 0 || j + 1 == n) ? 0.5 : 1.0; }

double tabulated_value(const TabulatedSeverity& t, double z) {
    const double x = z / t.dz;
    const auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 == t.values.size() && x == static_cast<double>(i)) return t.values[i];
    if (i + 1 >= t.values.size()) return 0.0;
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * t.values[i] + f * t.values[i + 1];
}

}  // namespace

void check_grid_spec(const GridSpec& spec) {
    const std::size_t n = spec.n_points;
    if (n < 256 || (n & (n - 1)) != 0) throw GridError("n_points must be a power of two >= 256");
    if (!(spec.z_max > 0.0) || !std::isfinite(spec.z_max)) throw GridError("z_max must be positive");
}

double DensityGrid::integral() const {
    double s = 0.0;
    for (double m : masses()) s += m;
    return s;
}

std::vector<double> DensityGrid::masses() const {
    const std::size_t n = values.size();
    const double dz = spec.dz();
    std::vector<double> m(n);
    for (std::size_t j = 0; j < n; ++j) m[j] = values[j] * end_weight(j, n) * dz;
    return m;
}

DensityGrid DensityGrid::from_masses(const GridSpec& spec, const std::vector<double>& masses) {
    DensityGrid g{spec, std::vector<double>(masses.size())};
    const double dz = spec.dz();
    for (std::size_t j = 0; j < masses.size(); ++j) g.values[j] = masses[j] / (end_weight(j, masses.size()) * dz);
    return g;
}

double severity_tail(const SeverityLaw& law, double z) {
    if (z <= 0.0) return 1.0;
    if (const auto* g = std::get_if<GammaSeverity>(&law)) return boost::math::gamma_q(g->shape, z / g->scale);
    const auto& t = std::get<TabulatedSeverity>(law);
    const double zlast = t.dz * static_cast<double>(t.values.size() - 1);
    if (z >= zlast) return 0.0;
    // trapezoid mass above z, using the interpolated density
    const double x = z / t.dz;
    const auto i = static_cast<std::size_t>(std::floor(x));
    double mass = 0.5 * (tabulated_value(t, z) + t.values[i + 1]) * ((i + 1) * t.dz - z);
    for (std::size_t j = i + 1; j + 1 < t.values.size(); ++j) mass += 0.5 * (t.values[j] + t.values[j + 1]) * t.dz;
    return mass;
}

DensityGrid discretize_severity(const SeverityLaw& law, const GridSpec& spec) {
    check_grid_spec(spec);
    const double tail = severity_tail(law, spec.z_max);
    if (tail > 1e-10) {
        std::ostringstream os;
        os << "severity mass beyond z_max = " << spec.z_max << " is " << tail << " (> 1e-10)";
        throw GridError(os.str());
    }
    DensityGrid g{spec, std::vector<double>(spec.n_points)};
    if (const auto* ga = std::get_if<GammaSeverity>(&law)) {
        const boost::math::gamma_distribution<double> dist(ga->shape, ga->scale);
        for (std::size_t j = 1; j < spec.n_points; ++j) g.values[j] = boost::math::pdf(dist, spec.z(j));
        if (ga->shape > 1.0) {
            g.values[0] = 0.0;
        } else if (ga->shape == 1.0) {
            g.values[0] = 1.0 / ga->scale;
        } else {
            // infinite at the origin: use the average over the half cell
            g.values[0] = boost::math::cdf(dist, 0.5 * spec.dz()) / (0.5 * spec.dz());
        }
    } else {
        const auto& t = std::get<TabulatedSeverity>(law);
        for (std::size_t j = 0; j < spec.n_points; ++j) g.values[j] = tabulated_value(t, spec.z(j));
    }
    return g;
}

DensityGrid tilt(const DensityGrid& mu, double eta) {
    if (eta * mu.spec.z_max >= 700.0) throw OverflowError("eta * z_max >= 700: tilt overflows at the grid edge");
    DensityGrid g = mu;
    for (std::size_t j = 0; j < g.values.size(); ++j) g.values[j] *= std::exp(eta * mu.spec.z(j));
    return g;
}

double chernoff_z_max(const ClaimsModel& model, double relative_tail) {
    const double eta = model.eta;
    const double mean_y = severity_mean(model.severity);
    const double boundary = severity_mgf_boundary(model.severity);
    const double radius = pgf_radius(model);
    const double log_total = std::log(count_pgf(model, severity_exp_moment(model, eta)));
    double theta_cap = std::isfinite(boundary) ? boundary - eta : 200.0 / mean_y;
    theta_cap *= 1.0 - 1e-9;

    // log of the Chernoff bound on the tail mass beyond z
    auto log_bound = [&](double z) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 600; ++i) {
            const double th = theta_cap * std::pow(1e-4, 1.0 - i / 600.0);
            double mgf;
            try {
                mgf = severity_exp_moment(model, eta + th);
            } catch (const DomainError&) {
                continue;
            }
            if (!(mgf < radius)) continue;
            const double g = count_pgf(model, mgf);
            if (!std::isfinite(g)) continue;
            best = std::min(best, std::log(g) - th * z);
        }
        return best;
    };

    const double target = std::log(relative_tail) + log_total;
    double hi = std::max(mean_y, 1.0);
    while (log_bound(hi) > target) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_bound(mid) > target ? lo : hi) = mid;
    }
    // the severity law on its own must fit as well
    double zs = hi;
    while (severity_tail(model.severity, zs) > 1e-10) zs *= 1.25;
    return std::max(hi, zs);
}

// ---------------------------------------------------------------------------

ThinnedMixtureEngine::ThinnedMixtureEngine(const ClaimsModel& model, const DensityGrid& mu, const DensityGrid& mu_tilde)
    : model_(model), spec_(mu.spec), padded_(2 * mu.spec.n_points), linear_pgf_(model.lambda2 == 0.0) {
    if (mu_tilde.spec.n_points != spec_.n_points || mu_tilde.spec.z_max != spec_.z_max)
        throw GridError("mu and mu_tilde must share a grid");
    m_mu_ = mu.masses();
    m_tilde_ = mu_tilde.masses();
    m_mu_.resize(padded_, 0.0);
    m_tilde_.resize(padded_, 0.0);
    if (!linear_pgf_) {
        f_mu_.resize(padded_ / 2 + 1);
        f_tilde_.resize(padded_ / 2 + 1);
        fft::forward_real(m_mu_.data(), f_mu_.data(), padded_);
        fft::forward_real(m_tilde_.data(), f_tilde_.data(), padded_);
    }
}

ThinnedDensity ThinnedMixtureEngine::operator()(double xi) const {
    ThinnedDensity out;
    std::vector<double>& m = out.masses;
    m.resize(padded_);
    if (linear_pgf_) {
        // G(s) = s: the mixture itself, no transform round trip
        for (std::size_t j = 0; j < padded_; ++j) m[j] = xi * m_tilde_[j] + (1.0 - xi) * m_mu_[j];
    } else {
        std::vector<cplx> spec(f_mu_.size());
        for (std::size_t f = 0; f < spec.size(); ++f)
            spec[f] = count_pgf(model_, xi * f_tilde_[f] + (1.0 - xi) * f_mu_[f]);
        fft::inverse_real(spec.data(), m.data(), padded_);
        const double inv = 1.0 / static_cast<double>(padded_);
        for (double& v : m) v *= inv;
    }
    for (double& v : m) {
        if (v < 0.0) {
            out.clamped_mass -= v;
            v = 0.0;
        }
    }
    if (out.clamped_mass > 1e-6) {
        std::ostringstream os;
        os << "clamped negative mass " << out.clamped_mass << " exceeds 1e-6; enlarge z_max or n_points";
        throw GridError(os.str());
    }
    const GridSpec big{spec_.dz() * static_cast<double>(padded_ - 1), padded_};
    out.density = DensityGrid::from_masses(big, m);
    return out;
}

ThinnedDensity thinned_mixture_density(const ClaimsModel& model, const DensityGrid& mu, const DensityGrid& mu_tilde,
                                       double xi) {
    return ThinnedMixtureEngine(model, mu, mu_tilde)(xi);
}

ComplexThinnedEngine::ComplexThinnedEngine(const ClaimsModel& model, const DensityGrid& mu, cplx s)
    : model_(model), dz_(mu.spec.dz()), padded_(2 * mu.spec.n_points), linear_pgf_(model.lambda2 == 0.0) {
    const auto m = mu.masses();
    std::vector<cplx> a(padded_, cplx{}), b(padded_, cplx{});
    for (std::size_t j = 0; j < m.size(); ++j) {
        a[j] = m[j];
        b[j] = m[j] * std::exp(s * (static_cast<double>(j) * dz_));
    }
    if (linear_pgf_) {
        f_mu_ = std::move(a);
        f_tilde_ = std::move(b);
    } else {
        f_mu_.resize(padded_);
        f_tilde_.resize(padded_);
        fft::transform(a.data(), f_mu_.data(), padded_, -1);
        fft::transform(b.data(), f_tilde_.data(), padded_, -1);
    }
}

std::vector<cplx> ComplexThinnedEngine::masses(double xi) const {
    std::vector<cplx> out(padded_);
    if (linear_pgf_) {
        for (std::size_t j = 0; j < padded_; ++j) out[j] = xi * f_tilde_[j] + (1.0 - xi) * f_mu_[j];
        return out;
    }
    std::vector<cplx> spec(padded_);
    for (std::size_t f = 0; f < padded_; ++f) spec[f] = count_pgf(model_, xi * f_tilde_[f] + (1.0 - xi) * f_mu_[f]);
    fft::transform(spec.data(), out.data(), padded_, +1);
    const double inv = 1.0 / static_cast<double>(padded_);
    for (auto& v : out) v *= inv;
    return out;
}

// ---------------------------------------------------------------------------

template <class T>
std::vector<T> project_kernel(const std::vector<T>& masses, double dz, double dc) {
    std::size_t last = masses.size();
    while (last > 0 && masses[last - 1] == T{}) --last;
    if (last == 0) return {T{}};
    const double r = dz / dc;
    const auto K = static_cast<std::size_t>(std::floor(static_cast<double>(last - 1) * r)) + 2;
    std::vector<T> kap(K, T{});
    for (std::size_t j = 0; j < last; ++j) {
        const double x = static_cast<double>(j) * r;
        const auto m = static_cast<std::size_t>(std::floor(x));
        const double f = x - static_cast<double>(m);
        kap[m] += (1.0 - f) * masses[j];
        kap[m + 1] += f * masses[j];
    }
    while (kap.size() > 1 && kap.back() == T{}) kap.pop_back();
    return kap;
}

template std::vector<double> project_kernel(const std::vector<double>&, double, double);
template std::vector<cplx> project_kernel(const std::vector<cplx>&, double, double);

namespace {

std::vector<double> expectation_impl(const std::vector<double>& sigma, double dc, const ThinnedDensity& mu_xi,
                                     Backend backend) {
    if (sigma.empty()) return {};
    const auto kap = project_kernel(mu_xi.masses, mu_xi.density.spec.dz(), dc);
    double total = 0.0;
    for (double v : kap) total += v;
    const double tail = sigma.back();
    std::vector<double> d(sigma.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = sigma[i] - tail;
    CorrelationBank<double> bank({kap}, sigma.size());
    std::vector<double> out;
    bank.apply(d, out, backend);
    for (double& v : out) v += tail * total;
    return out;
}

}  // namespace

std::vector<double> expectation_against(const std::vector<double>& sigma, double dc, const ThinnedDensity& mu_xi) {
    return expectation_impl(sigma, dc, mu_xi, Backend::Serial);
}

std::vector<double> expectation_against_fft(const std::vector<double>& sigma, double dc, const ThinnedDensity& mu_xi) {
    return expectation_impl(sigma, dc, mu_xi, Backend::Parallel);
}

void write_density_csv(std::ostream& os, const DensityGrid& grid) {
    os << "z,value\n";
    char buf[64];
    for (std::size_t j = 0; j < grid.values.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", grid.spec.z(j), grid.values[j]);
        os << buf;
    }
}

}  // namespace catderiv
