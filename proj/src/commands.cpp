#include "catderiv/commands.hpp"

#include "catderiv/config.hpp"
#include "catderiv/errors.hpp"
#include "catderiv/risk.hpp"
#include "catderiv/simulator.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace catderiv {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string out_dir(const ExperimentConfig& cfg, const RunOptions& opt) {
    return opt.out_dir ? *opt.out_dir : cfg.output_directory;
}

std::uint64_t seed_of(const ExperimentConfig& cfg, const RunOptions& opt) { return opt.seed ? *opt.seed : cfg.risk.seed; }

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw MissingArtifactError("missing " + p.string() + "; run `price` first");
    return json::parse(f);
}

double average_loading(const PolicySurface& pol, const PayoffSpec& payoff) {
    const double limit = payoff_flat_from(payoff);
    double s = 0.0;
    long n = 0;
    for (int t = 0; t <= pol.grid.n_t; ++t)
        for (int i = 0; i < pol.grid.n_c; ++i) {
            if (limit > 0.0 && pol.grid.c(i) > limit * (1.0 + 1e-12)) continue;
            s += pol.loading[static_cast<std::size_t>(t) * static_cast<std::size_t>(pol.grid.n_c) + static_cast<std::size_t>(i)];
            ++n;
        }
    return n ? s / n : 0.0;
}

double interp_row(const ValueSurface& v, int n, double c) {
    const double x = c / v.grid.dc();
    if (x <= 0.0) return v.at(n, 0);
    if (x >= v.grid.n_c - 1) return v.at(n, v.grid.n_c - 1);
    const int i = static_cast<int>(x);
    const double f = x - i;
    return (1.0 - f) * v.at(n, i) + f * v.at(n, i + 1);
}

json grid_json(const ExperimentConfig& c) {
    return {{"z_max", c.fine.z_max}, {"n_points", c.fine.n_points}, {"c_max", c.grid.c_max},
            {"n_c", c.grid.n_c},     {"n_t", c.grid.n_t},           {"n_xi", c.grid.n_xi}};
}

struct PriceRun {
    PriceResult result;
    json summary;
};

PriceRun run_price(const ExperimentConfig& cfg) {
    PriceRun r;
    r.result = price_surface(cfg.model, cfg.market, cfg.payoff, cfg.grid, cfg.fine);
    const auto& pr = r.result;
    const double theta0 = loading_for_share(cfg.market, pr.w0.xi0);
    const double avg_with = average_loading(pr.p_solve.policy, cfg.payoff);
    const double reduction = theta0 > 0.0 ? 100.0 * (theta0 - avg_with) / theta0 : 0.0;
    r.summary = {
        {"description", cfg.description},
        {"p00", pr.p_solve.value.at(0, 0)},
        {"p_initial", interp_row(pr.p_solve.value, 0, cfg.risk.initial_claims)},
        {"w00", pr.w_solve.value.at(0, 0)},
        {"w0_closed_form", pr.w0.value},
        {"xi0", pr.w0.xi0},
        {"theta0", theta0},
        {"w_bar_closed_form", pr.w0.rate},
        {"w_bar_numeric", pr.p_solve.w_bar},
        {"avg_loading_with_derivative", avg_with},
        {"avg_loading_without_derivative", theta0},
        {"loading_reduction_percent", reduction},
        {"path_disagreement", pr.disagreement},
        {"bound", pr.w_solve.bound},
        {"max_abs_w", pr.w_solve.max_abs_w},
        {"fair_premium", cfg.market.fair_premium},
        {"aggregate_premium", cfg.market.aggregate_premium()},
        {"grid", grid_json(cfg)},
    };
    return r;
}

PolicySurface load_policy(const ExperimentConfig& cfg, const fs::path& dir) {
    std::ifstream f(dir / "policy.csv");
    if (!f) throw MissingArtifactError("missing " + (dir / "policy.csv").string() + "; run `price` first");
    PolicySurface s = read_policy_csv(f, cfg.grid.n_xi);
    if (s.grid.n_c != cfg.grid.n_c || s.grid.n_t != cfg.grid.n_t ||
        std::abs(s.grid.c_max - cfg.grid.c_max) > 1e-9 * cfg.grid.c_max ||
        std::abs(s.grid.horizon - cfg.model.horizon) > 1e-12 * cfg.model.horizon)
        throw MissingArtifactError("policy.csv does not match the configured grid; rerun `price`");
    s.grid = cfg.grid;
    return s;
}

}  // namespace

int cmd_validate(const std::string& path, const RunOptions&, std::ostream& out) {
    json j;
    ExperimentConfig cfg;
    try {
        cfg = load_config(path, false);
    } catch (const ConfigError& e) {
        j = {{"usable", false}, {"error", {{"path", e.path()}, {"message", e.what()}}}};
        out << j.dump(2) << "\n";
        return 1;
    }
    const ValidationReport r = validate_assumptions(cfg.model);
    j = {{"fields_ok", r.fields_ok},
         {"exp_moment_finite", r.exp_moment_finite},
         {"exp_moment", r.exp_moment},
         {"limsup_ratio", r.limsup_ratio},
         {"ratio_threshold", r.ratio_threshold},
         {"ratio_ok", r.ratio_ok},
         {"pgf_at_exp_moment", r.pgf_at_exp_moment},
         {"pgf_finite", r.pgf_finite},
         {"expected_count", r.expected_count},
         {"expected_annual_claims", r.expected_annual_claims},
         {"expected_annual_loss", r.expected_annual_loss},
         {"fair_premium", cfg.market.fair_premium},
         {"messages", r.messages}};
    bool grid_ok = r.usable;
    if (r.usable) {
        try {
            const DensityGrid mu = discretize_severity(cfg.model.severity, cfg.fine);
            check_solve_grid(cfg.model, cfg.payoff, cfg.fine, cfg.grid);
            j["severity_mass_on_grid"] = mu.integral();
            j["grid"] = grid_json(cfg);
        } catch (const std::exception& e) {
            grid_ok = false;
            j["messages"].push_back(e.what());
        }
    }
    j["grid_ok"] = grid_ok;
    j["usable"] = r.usable && grid_ok;
    out << j.dump(2) << "\n";
    return (r.usable && grid_ok) ? 0 : 1;
}

int cmd_price(const std::string& path, const RunOptions& opt, std::ostream& log) {
    const ExperimentConfig cfg = load_config(path);
    const fs::path dir = out_dir(cfg, opt);
    fs::create_directories(dir);
    const PriceRun r = run_price(cfg);
    {
        std::ofstream f(dir / "price.csv", std::ios::binary);
        write_price_csv(f, r.result.p_solve.value);
    }
    {
        std::ofstream f(dir / "policy.csv", std::ios::binary);
        write_policy_csv(f, r.result.p_solve.policy);
    }
    write_json(dir / "summary.json", r.summary);
    log << "p(0,0) = " << r.summary["p00"].get<double>() << ", loading reduction "
        << r.summary["loading_reduction_percent"].get<double>() << "%\n";
    return 0;
}

int cmd_compare(const std::string& sc_path, const std::string& cc_path, const RunOptions& opt, std::ostream& log) {
    const ExperimentConfig sc = load_config(sc_path);
    const ExperimentConfig cc = load_config(cc_path);
    const PriceRun a = run_price(sc);
    const PriceRun b = run_price(cc);
    auto block = [](const json& s) {
        return json{{"p00", s["p00"]},
                    {"xi0", s["xi0"]},
                    {"avg_loading_with_derivative", s["avg_loading_with_derivative"]},
                    {"avg_loading_without_derivative", s["avg_loading_without_derivative"]},
                    {"loading_reduction_percent", s["loading_reduction_percent"]}};
    };
    json j = {{"sc", block(a.summary)}, {"cc", block(b.summary)}};
    const auto& pa = a.result.p_solve.value;
    const auto& pb = b.result.p_solve.value;
    const bool same_grid = pa.grid.n_c == pb.grid.n_c && pa.grid.n_t == pb.grid.n_t &&
                           pa.grid.c_max == pb.grid.c_max && pa.grid.horizon == pb.grid.horizon;
    j["same_grid"] = same_grid;
    if (same_grid) {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < pa.values.size(); ++k) worst = std::max(worst, pa.values[k] - pb.values[k]);
        j["max_sc_minus_cc"] = worst;
    }
    j["reduction_difference_percent"] =
        b.summary["loading_reduction_percent"].get<double>() - a.summary["loading_reduction_percent"].get<double>();
    const fs::path dir = opt.out_dir ? fs::path(*opt.out_dir) : fs::path("out");
    fs::create_directories(dir);
    write_json(dir / "comparison.json", j);
    log << "loading reduction: first " << a.summary["loading_reduction_percent"].get<double>() << "%, second "
        << b.summary["loading_reduction_percent"].get<double>() << "%\n";
    return 0;
}

int cmd_simulate(const std::string& path, const RunOptions& opt, std::optional<double> xi, long dump_paths,
                 std::ostream& log) {
    const ExperimentConfig cfg = load_config(path);
    const fs::path dir = out_dir(cfg, opt);
    fs::create_directories(dir);
    const std::uint64_t seed = seed_of(cfg, opt);
    PolicySurface surface;
    Policy policy;
    if (xi) {
        if (!(*xi >= 0.0 && *xi <= 1.0)) throw ConfigError("--xi", "must lie in [0, 1]");
        policy = ConstantPolicy{*xi};
    } else {
        surface = load_policy(cfg, dir);
        policy = FeedbackPolicy{&surface};
    }
    const SimulationStart start{cfg.risk.initial_wealth, cfg.risk.initial_claims};
    const MCEstimate e = mc_expected_utility(cfg.model, cfg.market, policy, cfg.payoff, cfg.risk.n_paths, seed, start);
    {
        std::ofstream f(dir / "paths.csv", std::ios::binary);
        write_paths_csv_header(f);
        const long n = std::min(dump_paths, cfg.risk.n_paths);
        for (long p = 0; p < n; ++p) {
            const PathSample s = draw_path(cfg.model, seed, static_cast<std::uint64_t>(p));
            write_path_rows(f, p, evaluate_path(s, cfg.market, policy, cfg.model.horizon, start, true));
        }
    }
    write_json(dir / "simulate.json",
               {{"estimate", e.estimate}, {"std_error", e.std_error}, {"n_paths", e.n_paths}, {"seed", e.seed}});
    log << "expected utility " << e.estimate << " +- " << e.std_error << "\n";
    return 0;
}

int cmd_pl_dist(const std::string& path, const RunOptions& opt, std::ostream& log) {
    const ExperimentConfig cfg = load_config(path);
    const fs::path dir = out_dir(cfg, opt);
    const json summary = read_json(dir / "summary.json");
    const PolicySurface surface = load_policy(cfg, dir);
    const double price = summary.at("p_initial").get<double>();
    const SimulationStart start{cfg.risk.initial_wealth, cfg.risk.initial_claims};

    const LaplaceSolver solver(cfg.model, cfg.market, surface, cfg.payoff, cfg.fine, price, start);
    LaplaceGrid lg{cfg.risk.sigma_b, cfg.risk.u_max, cfg.risk.n_u};
    const PLResult res = pl_distribution(solver, lg, cfg.risk.n_rho);

    const std::uint64_t seed = seed_of(cfg, opt);
    const auto samples = pl_samples(cfg.model, cfg.market, FeedbackPolicy{&surface}, cfg.payoff, price,
                                    cfg.risk.n_paths, seed, start);
    const double ks = ks_distance(res.density, samples);
    {
        std::ofstream f(dir / "pl_density.csv", std::ios::binary);
        write_density_csv(f, res.density);
    }
    write_json(dir / "pl_dist.json", {{"integral", res.density.integral()},
                                      {"min_density", res.density.min_value()},
                                      {"sigma_b", res.grid.sigma_b},
                                      {"u_max", res.grid.u_max},
                                      {"n_u", res.grid.n_u},
                                      {"n_rho", cfg.risk.n_rho},
                                      {"tilted_mean", res.tilted_mean},
                                      {"tilted_sd", res.tilted_sd},
                                      {"price", price},
                                      {"mc_ks_distance", ks},
                                      {"mc_n_paths", cfg.risk.n_paths},
                                      {"seed", seed},
                                      {"warnings", res.density.warnings}});
    for (const auto& w : res.density.warnings) log << "warning: " << w << "\n";
    log << "density integral " << res.density.integral() << ", KS distance to MC " << ks << "\n";
    return 0;
}

int cmd_residual_risk(const std::string& path, const RunOptions& opt, std::ostream& log) {
    const ExperimentConfig cfg = load_config(path);
    const fs::path dir = out_dir(cfg, opt);
    const json summary = read_json(dir / "summary.json");
    const PolicySurface surface = load_policy(cfg, dir);
    const double price = summary.at("p_initial").get<double>();
    const double xi0 = summary.at("xi0").get<double>();
    const SimulationStart start{cfg.risk.initial_wealth, cfg.risk.initial_claims};
    const std::uint64_t seed = seed_of(cfg, opt);

    const ResidualRisk rr = residual_risk_density(cfg.model, cfg.market, FeedbackPolicy{&surface}, ConstantPolicy{xi0},
                                                  cfg.payoff, price, cfg.risk.n_paths, seed, start);
    {
        std::ofstream f(dir / "residual_density.csv", std::ios::binary);
        write_density_csv(f, rr.histogram);
    }
    {
        std::ofstream f(dir / "residual_density_kde.csv", std::ios::binary);
        write_density_csv(f, rr.kde);
    }
    const auto& q = rr.quantiles;
    write_json(dir / "residual_quantiles.json",
               {{"q01", q.q01}, {"q05", q.q05}, {"q50", q.q50}, {"q95", q.q95}, {"q99", q.q99}, {"es05", q.es05}});
    write_json(dir / "residual_risk.json", {{"estimate", rr.mean.estimate},
                                            {"std_error", rr.mean.std_error},
                                            {"n_paths", rr.mean.n_paths},
                                            {"seed", rr.mean.seed}});
    log << "residual risk mean " << rr.mean.estimate << ", 5% quantile " << q.q05 << "\n";
    return 0;
}

}  // namespace catderiv
