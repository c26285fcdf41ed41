// Command-line front end: validate, price, compare, simulate, pl-dist,
// residual-risk. Exit codes: 0 success, 1 invalid input or missing
// artifacts, 2 numerical failure.

#include "catderiv/commands.hpp"
#include "catderiv/errors.hpp"

#include <CLI11.hpp>

#include <omp.h>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Indifference pricing of CAT spread options under clustered claims"};
    app.require_subcommand(1);

    std::string config, out, config_b;
    std::vector<std::string> compare_configs;
    std::uint64_t seed = 0;
    int threads = 0;
    double xi = -1.0;
    long dump_paths = 100;

    auto common = [&](CLI::App* sub, bool needs_config = true) {
        if (needs_config) sub->add_option("--config", config, "Experiment config (JSON)")->required();
        sub->add_option("--out", out, "Output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "Random seed (overrides risk.seed)");
        sub->add_option("--threads", threads, "OpenMP threads, 0 = automatic")->check(CLI::NonNegativeNumber);
    };

    auto* validate = app.add_subcommand("validate", "Check model assumptions and grid feasibility");
    common(validate);
    auto* price = app.add_subcommand("price", "Solve for the price and optimal policy surfaces");
    common(price);
    auto* compare = app.add_subcommand("compare", "Price two configs and compare loadings");
    common(compare, false);
    compare->add_option("--config", compare_configs, "Two configs: single-claim first, clustered second")
        ->required()
        ->expected(2);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo expected utility and path dump");
    common(simulate);
    simulate->add_option("--xi", xi, "Constant market share instead of the priced policy");
    simulate->add_option("--dump-paths", dump_paths, "Number of paths written to paths.csv")->check(CLI::NonNegativeNumber);
    auto* pl = app.add_subcommand("pl-dist", "Profit-loss density by Laplace inversion");
    common(pl);
    auto* rr = app.add_subcommand("residual-risk", "Residual risk density and quantiles");
    common(rr);

    CLI11_PARSE(app, argc, argv);

    if (threads > 0) omp_set_num_threads(threads);

    catderiv::RunOptions opt;
    if (!out.empty()) opt.out_dir = out;
    auto* active = app.get_subcommands().front();
    if (active->count("--seed")) opt.seed = seed;

    try {
        if (active == validate) return catderiv::cmd_validate(config, opt, std::cout);
        if (active == price) return catderiv::cmd_price(config, opt, std::cerr);
        if (active == compare) return catderiv::cmd_compare(compare_configs[0], compare_configs[1], opt, std::cerr);
        if (active == simulate) {
            std::optional<double> x;
            if (simulate->count("--xi")) x = xi;
            return catderiv::cmd_simulate(config, opt, x, dump_paths, std::cerr);
        }
        if (active == pl) return catderiv::cmd_pl_dist(config, opt, std::cerr);
        if (active == rr) return catderiv::cmd_residual_risk(config, opt, std::cerr);
    } catch (const catderiv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const catderiv::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
