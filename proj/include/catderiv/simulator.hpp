#pragma once

#include "catderiv/hjb_solver.hpp"
#include "catderiv/market.hpp"
#include "catderiv/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

namespace catderiv {

// ---------------------------------------------------------------------------
// Counter-based randomness

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { Arrival = 1, Branch = 2, CatCount = 3, Severity = 4, Thinning = 5 };

/// Uniform random bit generator whose output is a pure function of its key and
/// the number of draws taken so far.
class KeyedStream {
public:
    using result_type = std::uint64_t;

    KeyedStream(std::uint64_t seed, std::uint64_t path, std::uint64_t jump, std::uint64_t claim, Stream tag) noexcept {
        std::uint64_t k = splitmix64(seed ^ 0x5bd1e9955bd1e995ULL);
        k = splitmix64(k ^ path);
        k = splitmix64(k ^ jump);
        k = splitmix64(k ^ claim);
        key_ = splitmix64(k ^ static_cast<std::uint64_t>(tag));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Policies and paths

struct ConstantPolicy {
    double xi = 0.0;
};

/// xi*(t_n, c) held over [t_n, t_{n+1}), linear in c, clamped to the grid.
struct FeedbackPolicy {
    const PolicySurface* surface = nullptr;
};

using Policy = std::variant<ConstantPolicy, FeedbackPolicy>;

/// The randomness of one trajectory of the index.
struct PathSample {
    std::vector<double> jump_times;
    std::vector<int> counts;
    std::vector<std::size_t> offsets;  // claims of jump i live at [offsets[i], offsets[i] + counts[i])
    std::vector<double> severities;
    std::vector<double> uniforms;

    double index_total() const;
};

struct JumpRecord {
    double time = 0.0;
    int count = 0;
    double claim_total = 0.0;
    double accepted_total = 0.0;
    double wealth_after = 0.0;
    int accepted_count = 0;
};

struct PathOutcome {
    double claims_total = 0.0;    // C_T - c0
    double accepted_total = 0.0;  // company claims over [0, T]
    long accepted_count = 0;
    long claim_count = 0;
    double wealth = 0.0;          // X_T
    std::vector<JumpRecord> jumps;  // filled when requested
};

struct SimulationStart {
    double wealth = 0.0;
    double claims = 0.0;
};

/// Draws a trajectory keyed by (seed, path). With `antithetic` the severity
/// draws use inversion of 1 - u instead of u; everything else is unchanged.
PathSample draw_path(const ClaimsModel& model, std::uint64_t seed, std::uint64_t path, bool antithetic = false);

PathOutcome evaluate_path(const PathSample& path, const MarketModel& market, const Policy& policy, double horizon,
                          SimulationStart start = {}, bool record = false);

struct SampledPath {
    PathSample sample;
    PathOutcome outcome;
};

SampledPath sample_path(const ClaimsModel& model, const MarketModel& market, const Policy& policy,
                        std::uint64_t seed, std::uint64_t path = 0, SimulationStart start = {});

/// Both outcomes are driven by the same sample; only the thresholds differ.
std::pair<SampledPath, SampledPath> coupled_sample(const ClaimsModel& model, const MarketModel& market,
                                                   const Policy& a, const Policy& b, std::uint64_t seed,
                                                   std::uint64_t path = 0, SimulationStart start = {});

struct MCEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
};

/// Mean and standard error of -exp(-eta (X_T + psi(C_T))). With antithetic
/// pairs the standard error is computed from pair averages.
MCEstimate mc_expected_utility(const ClaimsModel& model, const MarketModel& market, const Policy& policy,
                               const PayoffSpec& payoff, long n_paths, std::uint64_t seed,
                               SimulationStart start = {}, bool antithetic = false);

/// Sum in a fixed binary-tree order, independent of thread count.
double pairwise_sum(const double* v, std::size_t n);

/// Mean and standard error of per-path values, reduced deterministically.
MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed);

/// CSV header `path_id,jump_time,count,claim_total,accepted_total,wealth_after`.
void write_paths_csv_header(std::ostream& os);
void write_path_rows(std::ostream& os, long path_id, const PathOutcome& outcome);

}  // namespace catderiv
