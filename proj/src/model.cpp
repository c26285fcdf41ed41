#include "catderiv/model.hpp"

#include "catderiv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace catderiv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double trapezoid(const std::vector<double>& v, double h) {
    if (v.size() < 2) return 0.0;
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * h;
}

double shifted_poisson_pmf(const ShiftedPoisson& law, int k) {
    const int j = k - law.shift;
    if (j < 0) return 0.0;
    return std::exp(j * std::log(law.rate) - law.rate - std::lgamma(j + 1.0));
}

// Tail ratio estimate for a table indexed from k = 2.
double table_tail_ratio(const std::vector<double>& p) {
    if (p.empty()) return 0.0;
    std::size_t mode = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[mode]) mode = i;
    double r = 0.0;
    for (std::size_t i = mode + 1; i + 1 < p.size(); ++i)
        if (p[i] > 0.0) r = std::max(r, p[i + 1] / p[i]);
    return r;
}

}  // namespace

void check_model_fields(const ClaimsModel& m) {
    if (!(m.lambda1 >= 0.0) || !std::isfinite(m.lambda1))
        throw ConfigError("model.lambda1", "must be finite and >= 0");
    if (!(m.lambda2 >= 0.0) || !std::isfinite(m.lambda2))
        throw ConfigError("model.lambda2", "must be finite and >= 0");
    if (!(m.lambda1 + m.lambda2 > 0.0))
        throw ConfigError("model", "lambda1 + lambda2 must be positive");
    if (!(m.eta > 0.0) || !std::isfinite(m.eta)) throw ConfigError("model.eta", "must be > 0");
    if (!(m.horizon > 0.0) || !std::isfinite(m.horizon))
        throw ConfigError("model.horizon", "must be > 0");

    std::visit(overloaded{
                   [](const GammaSeverity& g) {
                       if (!(g.shape > 0.0) || !std::isfinite(g.shape))
                           throw ConfigError("model.severity.shape", "must be > 0");
                       if (!(g.scale > 0.0) || !std::isfinite(g.scale))
                           throw ConfigError("model.severity.scale", "must be > 0");
                   },
                   [](const TabulatedSeverity& t) {
                       if (!(t.dz > 0.0)) throw ConfigError("model.severity.dz", "must be > 0");
                       if (t.values.size() < 2)
                           throw ConfigError("model.severity.values", "need at least two nodes");
                       for (double v : t.values)
                           if (!(v >= 0.0) || !std::isfinite(v))
                               throw ConfigError("model.severity.values", "must be finite and >= 0");
                       const double mass = trapezoid(t.values, t.dz);
                       if (std::abs(mass - 1.0) > 1e-10) {
                           std::ostringstream os;
                           os << "integrates to " << mass << ", expected 1";
                           throw ConfigError("model.severity.values", os.str());
                       }
                   }},
               m.severity);

    std::visit(overloaded{
                   [](const ShiftedPoisson& p) {
                       if (p.shift < 2) throw ConfigError("model.cat_count.shift", "must be >= 2");
                       if (!(p.rate > 0.0) || !std::isfinite(p.rate))
                           throw ConfigError("model.cat_count.rate", "must be > 0");
                   },
                   [](const TabulatedPmf& t) {
                       if (t.probabilities.empty())
                           throw ConfigError("model.cat_count.probabilities", "empty table");
                       if (!(t.truncation_mass >= 0.0) || t.truncation_mass > 1e-12)
                           throw ConfigError("model.cat_count.truncation_mass", "must lie in [0, 1e-12]");
                       double s = 0.0;
                       for (double v : t.probabilities) {
                           if (!(v >= 0.0) || !std::isfinite(v))
                               throw ConfigError("model.cat_count.probabilities", "must be >= 0");
                           s += v;
                       }
                       if (s > 1.0 + 1e-12 || s < 1.0 - t.truncation_mass - 1e-15)
                           throw ConfigError("model.cat_count.probabilities",
                                             "does not sum to 1 within the truncation mass");
                   }},
               m.cat_count);
}

double cat_count_pmf(const CatCountLaw& law, int k) {
    return std::visit(overloaded{[k](const ShiftedPoisson& p) { return shifted_poisson_pmf(p, k); },
                                 [k](const TabulatedPmf& t) {
                                     const long i = static_cast<long>(k) - 2;
                                     if (i < 0 || i >= static_cast<long>(t.probabilities.size())) return 0.0;
                                     return t.probabilities[static_cast<std::size_t>(i)];
                                 }},
                      law);
}

double cat_count_mean(const CatCountLaw& law) {
    return std::visit(overloaded{[](const ShiftedPoisson& p) { return p.shift + p.rate; },
                                 [](const TabulatedPmf& t) {
                                     double s = 0.0;
                                     for (std::size_t i = 0; i < t.probabilities.size(); ++i)
                                         s += (static_cast<double>(i) + 2.0) * t.probabilities[i];
                                     return s;
                                 }},
                      law);
}

static double cat_count_second_moment(const CatCountLaw& law) {
    return std::visit(overloaded{[](const ShiftedPoisson& p) {
                                     const double m = p.shift + p.rate;
                                     return p.rate + m * m;
                                 },
                                 [](const TabulatedPmf& t) {
                                     double s = 0.0;
                                     for (std::size_t i = 0; i < t.probabilities.size(); ++i) {
                                         const double k = static_cast<double>(i) + 2.0;
                                         s += k * k * t.probabilities[i];
                                     }
                                     return s;
                                 }},
                      law);
}

double mixed_count_pmf(const ClaimsModel& m, int k) {
    const double lam = m.total_intensity();
    if (k < 1 || lam <= 0.0) return 0.0;
    if (k == 1) return m.lambda1 / lam;
    if (m.lambda2 == 0.0) return 0.0;
    return m.lambda2 / lam * cat_count_pmf(m.cat_count, k);
}

double mean_count(const ClaimsModel& m) {
    const double lam = m.total_intensity();
    if (lam <= 0.0) return 0.0;
    double s = m.lambda1;
    if (m.lambda2 > 0.0) s += m.lambda2 * cat_count_mean(m.cat_count);
    return s / lam;
}

double mean_count_squared(const ClaimsModel& m) {
    const double lam = m.total_intensity();
    if (lam <= 0.0) return 0.0;
    double s = m.lambda1;
    if (m.lambda2 > 0.0) s += m.lambda2 * cat_count_second_moment(m.cat_count);
    return s / lam;
}

double pgf_radius(const ClaimsModel& m) {
    if (m.lambda2 == 0.0) return kInf;
    if (std::holds_alternative<ShiftedPoisson>(m.cat_count)) return kInf;
    const double r = table_tail_ratio(std::get<TabulatedPmf>(m.cat_count).probabilities);
    return r > 0.0 ? 1.0 / r : kInf;
}

std::complex<double> count_pgf(const ClaimsModel& m, std::complex<double> s) {
    const double lam = m.total_intensity();
    if (lam <= 0.0) return 1.0;
    std::complex<double> g = (m.lambda1 / lam) * s;
    if (m.lambda2 == 0.0) return g;
    const double w2 = m.lambda2 / lam;
    if (const auto* p = std::get_if<ShiftedPoisson>(&m.cat_count)) {
        g += w2 * std::pow(s, p->shift) * std::exp(p->rate * (s - 1.0));
        return g;
    }
    const auto& t = std::get<TabulatedPmf>(m.cat_count);
    if (std::abs(s) > pgf_radius(m)) {
        std::ostringstream os;
        os << "|s| = " << std::abs(s) << " exceeds the validated radius " << pgf_radius(m);
        throw DomainError(os.str());
    }
    // Horner from the top of the table.
    std::complex<double> acc = 0.0;
    for (std::size_t i = t.probabilities.size(); i-- > 0;) acc = acc * s + t.probabilities[i];
    g += w2 * s * s * acc;
    return g;
}

double count_pgf(const ClaimsModel& m, double s) {
    const double lam = m.total_intensity();
    if (lam <= 0.0) return 1.0;
    double g = (m.lambda1 / lam) * s;
    if (m.lambda2 == 0.0) return g;
    const double w2 = m.lambda2 / lam;
    if (const auto* p = std::get_if<ShiftedPoisson>(&m.cat_count)) {
        return g + w2 * std::pow(s, p->shift) * std::exp(p->rate * (s - 1.0));
    }
    return count_pgf(m, std::complex<double>(s, 0.0)).real();
}

double severity_mean(const SeverityLaw& law) {
    return std::visit(overloaded{[](const GammaSeverity& g) { return g.shape * g.scale; },
                                 [](const TabulatedSeverity& t) {
                                     std::vector<double> v(t.values);
                                     for (std::size_t j = 0; j < v.size(); ++j) v[j] *= j * t.dz;
                                     return trapezoid(v, t.dz);
                                 }},
                      law);
}

double severity_second_moment(const SeverityLaw& law) {
    return std::visit(overloaded{[](const GammaSeverity& g) { return g.shape * (g.shape + 1.0) * g.scale * g.scale; },
                                 [](const TabulatedSeverity& t) {
                                     std::vector<double> v(t.values);
                                     for (std::size_t j = 0; j < v.size(); ++j) {
                                         const double z = j * t.dz;
                                         v[j] *= z * z;
                                     }
                                     return trapezoid(v, t.dz);
                                 }},
                      law);
}

double severity_mgf_boundary(const SeverityLaw& law) {
    if (const auto* g = std::get_if<GammaSeverity>(&law)) return 1.0 / g->scale;
    return kInf;
}

double severity_exp_moment(const SeverityLaw& law, double theta) {
    return severity_mgf(law, {theta, 0.0}).real();
}

double severity_exp_moment(const ClaimsModel& model, double theta) {
    return severity_exp_moment(model.severity, theta);
}

std::complex<double> severity_mgf(const SeverityLaw& law, std::complex<double> s) {
    if (const auto* g = std::get_if<GammaSeverity>(&law)) {
        if (s.real() * g->scale >= 1.0) {
            std::ostringstream os;
            os << "exponential moment diverges: Re(theta) * scale = " << s.real() * g->scale << " >= 1";
            throw DomainError(os.str());
        }
        return std::pow(1.0 - s * g->scale, -g->shape);
    }
    const auto& t = std::get<TabulatedSeverity>(law);
    const std::size_t n = t.values.size();
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
        acc += w * t.values[j] * std::exp(s * (j * t.dz));
    }
    return acc * t.dz;
}

double fair_premium(const ClaimsModel& m, long clients_M) {
    if (clients_M <= 0) throw ConfigError("market.clients", "must be positive");
    const double lam = m.total_intensity();
    if (lam <= 0.0) return 0.0;
    return lam * mean_count(m) * severity_mean(m.severity) / static_cast<double>(clients_M);
}

ValidationReport validate_assumptions(const ClaimsModel& m) {
    ValidationReport r;
    try {
        check_model_fields(m);
    } catch (const ConfigError& e) {
        r.fields_ok = false;
        r.messages.push_back(e.what());
        return r;
    }

    try {
        r.exp_moment = severity_exp_moment(m, m.eta);
        r.exp_moment_finite = std::isfinite(r.exp_moment);
    } catch (const DomainError& e) {
        r.exp_moment_finite = false;
        r.messages.push_back(e.what());
    }

    if (m.lambda2 == 0.0 || std::holds_alternative<ShiftedPoisson>(m.cat_count)) {
        r.limsup_ratio = 0.0;
    } else {
        r.limsup_ratio = table_tail_ratio(std::get<TabulatedPmf>(m.cat_count).probabilities);
    }
    r.ratio_threshold = r.exp_moment_finite ? 1.0 / r.exp_moment : 0.0;
    r.ratio_ok = r.exp_moment_finite && r.limsup_ratio < r.ratio_threshold;
    if (r.exp_moment_finite && !r.ratio_ok) {
        std::ostringstream os;
        os << "tail ratio " << r.limsup_ratio << " is not below 1/E(exp(eta Y)) = " << r.ratio_threshold;
        r.messages.push_back(os.str());
    }

    if (r.ratio_ok) {
        try {
            r.pgf_at_exp_moment = count_pgf(m, r.exp_moment);
            r.pgf_finite = std::isfinite(r.pgf_at_exp_moment);
        } catch (const DomainError& e) {
            r.messages.push_back(e.what());
        }
    }

    r.expected_count = mean_count(m);
    r.expected_annual_claims = m.total_intensity() * r.expected_count;
    r.expected_annual_loss = r.expected_annual_claims * severity_mean(m.severity);
    r.usable = r.fields_ok && r.exp_moment_finite && r.ratio_ok && r.pgf_finite;
    return r;
}

}  // namespace catderiv
