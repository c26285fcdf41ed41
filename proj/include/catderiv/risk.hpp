#pragma once

#include "catderiv/grid_transform.hpp"
#include "catderiv/hjb_solver.hpp"
#include "catderiv/simulator.hpp"

#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace catderiv {

/// Contour Re(s) = sigma_b, quadrature nodes u_k = k u_max / (n_u - 1).
struct LaplaceGrid {
    double sigma_b = 0.0;
    double u_max = 0.0;
    int n_u = 256;

    double u(int k) const noexcept { return u_max * k / (n_u - 1); }
};

struct PLDensity {
    std::vector<double> rho;
    std::vector<double> density;
    std::vector<std::string> warnings;

    double integral() const;  // trapezoid
    double min_value() const;
    /// Cumulative trapezoid, normalized by nothing; evaluated at x by interpolation.
    double cdf(double x) const;
};

/// Evaluates the two-sided Laplace transform of
/// rho = X_T + psi(C_T) - p under a frozen feedback policy by a backward
/// solve on the policy's own grid. Only the policy surface is held by
/// reference; it must outlive the solver.
class LaplaceSolver {
public:
    LaplaceSolver(const ClaimsModel& model, const MarketModel& market, const PolicySurface& policy,
                  const PayoffSpec& payoff, const GridSpec& fine, double price, SimulationStart start = {});

    /// L(s) = E exp(-s rho). DomainError outside the strip Re(s) < MGF boundary.
    std::complex<double> value(std::complex<double> s) const;

    /// Independent solves for sigma_b + i u_k, parallel across k.
    std::vector<std::complex<double>> contour(double sigma_b, const std::vector<double>& u) const;

    /// Rough currency scale of rho, used to seed the contour search.
    double scale_guess() const;

private:
    ClaimsModel model_;
    MarketModel market_;
    const PolicySurface& policy_;
    PayoffSpec payoff_;
    DensityGrid mu_;
    double price_;
    SimulationStart start_;
    std::vector<int> lower_;      // per (n, i): left xi-grid index
    std::vector<double> weight_;  // per (n, i): interpolation weight towards lower_ + 1
    std::vector<double> q_;       // per (n, i): premium rate
    std::vector<int> used_;       // xi-grid indices that are needed
};

/// Trapezoid evaluation of the truncated Bromwich integral on rho_grid.
/// Warns if |L(sigma_b + i u_max)| exceeds 1e-6 |L(sigma_b)|.
PLDensity invert_pl_density(const std::vector<std::complex<double>>& samples, const LaplaceGrid& lg,
                            const std::vector<double>& rho_grid);

struct PLResult {
    PLDensity density;
    LaplaceGrid grid;
    double tilted_mean = 0.0;
    double tilted_sd = 0.0;
};

/// Chooses u_max by doubling from 1/sd until the transform has decayed below
/// 1e-6 of its value on the real axis (unless lg.u_max > 0 is given), samples
/// the contour, and inverts on n_rho points spanning +-8 sd.
PLResult pl_distribution(const LaplaceSolver& solver, LaplaceGrid lg, int n_rho = 1001);

/// Same search and inversion for an arbitrary transform (used for tests).
PLResult pl_distribution(const std::function<std::complex<double>(std::complex<double>)>& transform,
                         double scale_guess, LaplaceGrid lg, int n_rho = 1001);

/// sup |F_density - F_empirical| over the sample points.
double ks_distance(const PLDensity& density, std::vector<double> samples);

struct QuantileTable {
    double q01 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q99 = 0.0, es05 = 0.0;
};

/// Empirical quantiles (linear interpolation between order statistics) and
/// the mean of the values at or below q05.
QuantileTable quantile_table(std::vector<double> values);

/// Histogram with Scott's-rule bin width; a single unit-width bin for a point mass.
PLDensity histogram_density(const std::vector<double>& values);
/// Gaussian kernel estimate with Silverman's bandwidth on n points.
PLDensity kde_density(const std::vector<double>& values, int n = 512);

struct ResidualRisk {
    std::vector<double> samples;
    PLDensity histogram;
    PLDensity kde;
    QuantileTable quantiles;
    MCEstimate mean;
};

/// rho = psi(C_T) - p + X^{star}_T - X^{zero}_T per coupled path.
ResidualRisk residual_risk_density(const ClaimsModel& model, const MarketModel& market, const Policy& policy_star,
                                   const Policy& policy_zero, const PayoffSpec& payoff, double price, long n_paths,
                                   std::uint64_t seed, SimulationStart start = {});

/// Monte Carlo draws of X_T + psi(C_T) - p under one policy.
std::vector<double> pl_samples(const ClaimsModel& model, const MarketModel& market, const Policy& policy,
                               const PayoffSpec& payoff, double price, long n_paths, std::uint64_t seed,
                               SimulationStart start = {});

/// `rho,density` with 17 significant digits.
void write_density_csv(std::ostream& os, const PLDensity& d);

}  // namespace catderiv
