#pragma once

#include "catderiv/grid_transform.hpp"
#include "catderiv/kernels.hpp"
#include "catderiv/market.hpp"
#include "catderiv/model.hpp"

#include <iosfwd>
#include <variant>
#include <vector>

namespace catderiv {

// ---------------------------------------------------------------------------
// Payoffs
// ---------------------------------------------------------------------------

/// psi(c) = max(0, min(c - K, L - K)).
struct SpreadOption {
    double strike = 0.0;
    double cap = 1.0;
};

struct ZeroPayoff {};

/// Piecewise linear through (c_i, value_i), constant outside the table.
struct TabulatedPayoff {
    std::vector<double> c;
    std::vector<double> value;
};

using PayoffSpec = std::variant<SpreadOption, ZeroPayoff, TabulatedPayoff>;

void check_payoff(const PayoffSpec& payoff);
double payoff_value(const PayoffSpec& payoff, double c);
double payoff_sup_norm(const PayoffSpec& payoff);
/// Smallest c from which psi is constant.
double payoff_flat_from(const PayoffSpec& payoff);
/// Scale used for price tolerances: L - K for spreads, otherwise the sup norm.
double payoff_scale(const PayoffSpec& payoff);

// ---------------------------------------------------------------------------
// Grids and surfaces
// ---------------------------------------------------------------------------

struct SolveGrid {
    double c_max = 1.0;
    int n_c = 2;
    int n_t = 1;
    int n_xi = 100;
    double horizon = 1.0;

    double dc() const noexcept { return c_max / (n_c - 1); }
    double dt() const noexcept { return horizon / n_t; }
    double c(int i) const noexcept { return i * dc(); }
    double t(int n) const noexcept { return n * dt(); }
};

/// Default time steps: dt = min(1e-3 T, 0.1 / lambda).
int default_time_steps(const ClaimsModel& model);

/// Row-major (time node, c node), n_t + 1 rows.
struct ValueSurface {
    SolveGrid grid;
    std::vector<double> values;

    double at(int n, int i) const { return values[static_cast<std::size_t>(n) * grid.n_c + i]; }
    double& at(int n, int i) { return values[static_cast<std::size_t>(n) * grid.n_c + i]; }
};

struct PolicySurface {
    SolveGrid grid;
    std::vector<double> xi_star;
    std::vector<double> loading;

    double xi(int n, int i) const { return xi_star[static_cast<std::size_t>(n) * grid.n_c + i]; }
};

// ---------------------------------------------------------------------------
// Closed form without derivative
// ---------------------------------------------------------------------------

struct W0Result {
    double value = 0.0;  // w0(t)
    double xi0 = 0.0;
    double rate = 0.0;   // the supremum, w0 = (T - t) * rate
};

/// sup of q(xi) + (lambda/eta)(1 - G(xi (E e^{eta Y} - 1) + 1)).
W0Result w0_closed_form(const ClaimsModel& model, const MarketModel& market, double t, int n_xi = 100);

// ---------------------------------------------------------------------------
// Backward solver
// ---------------------------------------------------------------------------

/// The family of projected kernels kappa_k for xi_k = k / n_xi on the c-grid.
struct KernelFamily {
    GridSpec fine;
    std::vector<double> xi;
    std::vector<double> mass;  // sum of each kernel, = E exp(eta Z^xi) up to grid error
    CorrelationBank<double> bank;
    double max_clamped_mass = 0.0;
};

KernelFamily build_kernel_family(const ClaimsModel& model, const GridSpec& fine, const SolveGrid& grid);

/// Throws StabilityError when dt * lambda * (1 + G(E e^{eta Y})) > 2.5, or
/// GridError when c_max cannot hold the flat region plus z_max.
void check_solve_grid(const ClaimsModel& model, const PayoffSpec& payoff, const GridSpec& fine,
                      const SolveGrid& grid);

enum class SolveMode { W, P };

struct SolveResult {
    ValueSurface value;
    PolicySurface policy;
    double w_bar = 0.0;        // numerical supremum rate with a flat value function
    double bound = 0.0;        // ||q|| T + ||psi||
    double max_abs_w = 0.0;    // over all slices
};

/// Backward RK4 in time. Mode W solves for w; mode P for p = w - w0 with the
/// constant rate taken from the same discretization, so p = 0 when psi = 0.
SolveResult solve_backward(const ClaimsModel& model, const MarketModel& market, const PayoffSpec& payoff,
                           const SolveGrid& grid, const KernelFamily& family, SolveMode mode,
                           Backend backend = Backend::Parallel);

SolveResult solve_backward(const ClaimsModel& model, const MarketModel& market, const PayoffSpec& payoff,
                           const SolveGrid& grid, const GridSpec& fine, SolveMode mode,
                           Backend backend = Backend::Parallel);

struct PriceResult {
    SolveResult p_solve;
    SolveResult w_solve;
    W0Result w0;
    double disagreement = 0.0;  // max |p - (w - w0)| over all nodes
};

/// Solves for p directly and via w minus the closed-form w0.
/// ConsistencyError if the two disagree by more than 1e-5 times payoff_scale
/// (or 1e-5 ||q|| T for a zero payoff).
PriceResult price_surface(const ClaimsModel& model, const MarketModel& market, const PayoffSpec& payoff,
                          const SolveGrid& grid, const GridSpec& fine, Backend backend = Backend::Parallel);

/// CSV exports, ascending t then c, 17 significant digits.
void write_price_csv(std::ostream& os, const ValueSurface& s);
void write_policy_csv(std::ostream& os, const PolicySurface& s);
/// Reads a policy CSV back; the grid is inferred from the t and c columns.
PolicySurface read_policy_csv(std::istream& is, int n_xi);

}  // namespace catderiv
