#pragma once

#include "catderiv/model.hpp"

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace catderiv {

/// Uniform grid z_j = j * dz on [0, z_max].
struct GridSpec {
    double z_max = 1.0;
    std::size_t n_points = 256;

    double dz() const noexcept { return z_max / static_cast<double>(n_points - 1); }
    double z(std::size_t j) const noexcept { return static_cast<double>(j) * dz(); }
};

/// Throws GridError unless n_points is a power of two >= 256 and z_max > 0.
void check_grid_spec(const GridSpec& spec);

/// Density per currency unit at the grid nodes.
struct DensityGrid {
    GridSpec spec;
    std::vector<double> values;

    double integral() const;  // trapezoid
    /// Trapezoid-weighted point masses v_j w_j dz.
    std::vector<double> masses() const;
    static DensityGrid from_masses(const GridSpec& spec, const std::vector<double>& masses);
};

/// P(Y > z).
double severity_tail(const SeverityLaw& law, double z);

DensityGrid discretize_severity(const SeverityLaw& law, const GridSpec& spec);

/// Pointwise exp(eta z) mu(z). OverflowError if eta * z_max >= 700.
DensityGrid tilt(const DensityGrid& mu, double eta);

/// Smallest z beyond which the tilted compound law (thinning share 1) keeps
/// less than `relative_tail` of its mass, from a Chernoff bound. Also at least
/// the point where the severity tail drops below 1e-10.
double chernoff_z_max(const ClaimsModel& model, double relative_tail = 1e-12);

struct ThinnedDensity {
    DensityGrid density;          // on [0, (2n-1) dz], n_points = 2n
    std::vector<double> masses;   // lattice masses of the same
    double clamped_mass = 0.0;    // total |negative mass| set to zero
};

/// Precomputes the spectra of mu and mu_tilde so that mu_xi for many xi costs
/// one inverse transform each.
class ThinnedMixtureEngine {
public:
    ThinnedMixtureEngine(const ClaimsModel& model, const DensityGrid& mu, const DensityGrid& mu_tilde);

    ThinnedDensity operator()(double xi) const;
    const GridSpec& input_spec() const noexcept { return spec_; }

private:
    ClaimsModel model_;
    GridSpec spec_;
    std::size_t padded_;
    bool linear_pgf_;
    std::vector<double> m_mu_, m_tilde_;
    std::vector<std::complex<double>> f_mu_, f_tilde_;
};

ThinnedDensity thinned_mixture_density(const ClaimsModel& model, const DensityGrid& mu,
                                       const DensityGrid& mu_tilde, double xi);

/// Same construction with a complex tilt exp(s z): lattice masses of the
/// measure with integral E(f(Z) exp(s Z^xi)). Used by the Laplace solver.
class ComplexThinnedEngine {
public:
    ComplexThinnedEngine(const ClaimsModel& model, const DensityGrid& mu, std::complex<double> s);

    std::vector<std::complex<double>> masses(double xi) const;
    double dz() const noexcept { return dz_; }

private:
    ClaimsModel model_;
    double dz_;
    std::size_t padded_;
    bool linear_pgf_;
    std::vector<std::complex<double>> f_mu_, f_tilde_;
};

/// Hat-function projection of lattice masses at j*dz onto nodes m*dc:
/// kappa_m = sum_j hat(j dz / dc - m) mass_j. Preserves total mass.
template <class T>
std::vector<T> project_kernel(const std::vector<T>& masses, double dz, double dc);

/// For each c-node i returns sum_m kappa_m sigma(i+m) with sigma continued
/// constant beyond the last node; kappa is mu_xi projected onto spacing dc.
/// Direct summation.
std::vector<double> expectation_against(const std::vector<double>& sigma, double dc, const ThinnedDensity& mu_xi);

/// Same result through a padded real transform.
std::vector<double> expectation_against_fft(const std::vector<double>& sigma, double dc,
                                            const ThinnedDensity& mu_xi);

/// CSV with header `z,value`, ascending z, 17 significant digits.
void write_density_csv(std::ostream& os, const DensityGrid& grid);

}  // namespace catderiv
