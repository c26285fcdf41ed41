#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

namespace catderiv {

// ---------------------------------------------------------------------------
// Severity and catastrophe-count laws
// ---------------------------------------------------------------------------

struct GammaSeverity {
    double shape = 1.0;
    double scale = 1.0;  // currency
};

/// Density tabulated at z_j = j * dz, starting at z = 0.
struct TabulatedSeverity {
    double dz = 1.0;
    std::vector<double> values;
};

using SeverityLaw = std::variant<GammaSeverity, TabulatedSeverity>;

/// Number of claims per catastrophe: shift + Poisson(rate).
struct ShiftedPoisson {
    int shift = 2;
    double rate = 1.0;
};

/// P(cat count = 2 + i) = probabilities[i].
struct TabulatedPmf {
    std::vector<double> probabilities;
    double truncation_mass = 1e-12;
};

using CatCountLaw = std::variant<ShiftedPoisson, TabulatedPmf>;

/// Ordinary claims arrive at rate lambda1 as single claims; catastrophes
/// arrive at rate lambda2 and each spawns a batch of `cat_count` claims.
struct ClaimsModel {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    SeverityLaw severity = GammaSeverity{};
    CatCountLaw cat_count = ShiftedPoisson{};
    double eta = 1.0;      // risk aversion, per currency
    double horizon = 1.0;  // years

    double total_intensity() const noexcept { return lambda1 + lambda2; }
};

/// Structural checks on the fields of a model (positivity, normalization).
/// Throws ConfigError with a field path.
void check_model_fields(const ClaimsModel& model);

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

/// P(cat count = k); zero outside the support.
double cat_count_pmf(const CatCountLaw& law, int k);
double cat_count_mean(const CatCountLaw& law);

/// P(A_1 = k) for the number of claims per jump of the merged process.
double mixed_count_pmf(const ClaimsModel& model, int k);

/// E(A_1).
double mean_count(const ClaimsModel& model);
double mean_count_squared(const ClaimsModel& model);

/// Convergence radius of the count generating function, as validated.
/// Infinite for ShiftedPoisson and for finite tables whose tail ratio is zero.
double pgf_radius(const ClaimsModel& model);

/// Generating function of A_1. Closed form for ShiftedPoisson (entire);
/// truncated series for TabulatedPmf, DomainError beyond pgf_radius.
std::complex<double> count_pgf(const ClaimsModel& model, std::complex<double> s);
double count_pgf(const ClaimsModel& model, double s);

double severity_mean(const SeverityLaw& law);
double severity_second_moment(const SeverityLaw& law);

/// Largest theta for which E(exp(theta Y)) is finite (exclusive for Gamma).
double severity_mgf_boundary(const SeverityLaw& law);

/// E(exp(theta Y)). DomainError where it diverges.
double severity_exp_moment(const ClaimsModel& model, double theta);
double severity_exp_moment(const SeverityLaw& law, double theta);

/// E(exp(s Y)) for complex s with Re(s) below the boundary.
std::complex<double> severity_mgf(const SeverityLaw& law, std::complex<double> s);

/// Fair annual premium per client: E(C_1) / M.
double fair_premium(const ClaimsModel& model, long clients_M);

// ---------------------------------------------------------------------------
// Standing-assumption validation
// ---------------------------------------------------------------------------

struct ValidationReport {
    bool fields_ok = true;
    bool exp_moment_finite = false;
    double exp_moment = 0.0;          // E(exp(eta Y))
    double limsup_ratio = 0.0;        // estimate of limsup a_{k+1}/a_k
    double ratio_threshold = 0.0;     // 1 / E(exp(eta Y))
    bool ratio_ok = false;
    double pgf_at_exp_moment = 0.0;   // G_{A_1}(E exp(eta Y))
    bool pgf_finite = false;
    double expected_count = 0.0;      // E(A_1)
    double expected_annual_claims = 0.0;  // lambda E(A_1) T-normalized per year
    double expected_annual_loss = 0.0;    // E(C_1)
    bool usable = false;
    std::vector<std::string> messages;
};

/// Never throws on model content; failures are reported.
ValidationReport validate_assumptions(const ClaimsModel& model);

}  // namespace catderiv
