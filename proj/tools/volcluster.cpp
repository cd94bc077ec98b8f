// volcluster: simulate the news-driven, trend-following and general market
// models, run ensembles, analyze price/return files and solve Kesten
// exponents. Run `volcluster <command> --help` for the flags of each command.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "volcluster/cli.hpp"

namespace {

template <class T>
std::optional<T> opt(CLI::Option* option, const T& value) {
    return option->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace volcluster::cli;

    CLI::App app{"Market simulator with news-driven volatility clustering and heavy tails"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "volcluster 1.0 (generator v" + std::to_string(volcluster::kGeneratorVersion) + ")");

    // simulate
    SimulateArgs sim;
    std::string sim_model, sim_config, sim_units;
    std::uint64_t sim_seed = 0;
    long long sim_periods = 0;
    auto* simulate = app.add_subcommand("simulate", "Run one path and analyze its returns");
    auto* sim_model_opt = simulate->add_option("--model", sim_model, "news | trend | general (or 1 | 2 | 3)");
    auto* sim_config_opt =
        simulate->add_option("--config", sim_config, "Preset name (fig3, fig4, fig5, fig6, fig7-left, fig7-right, trend) "
                                                      "or JSON config file; default fig5");
    auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Root seed (else VOLCLUSTER_SEED, config, random)");
    auto* sim_periods_opt = simulate->add_option("--periods", sim_periods, "Number of steps T (>= 2)");
    auto* sim_units_opt = simulate->add_option("--units", sim_units, "percent | fraction");
    simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();
    unsigned sim_jobs = 0;
    simulate->add_option("--jobs", sim_jobs, "Accepted for symmetry; a single path runs on one thread");

    // ensemble
    EnsembleArgs ens;
    std::string ens_config;
    long long ens_paths = 0;
    std::uint64_t ens_seed = 0;
    auto* ensemble = app.add_subcommand("ensemble", "Run independent paths and pool their returns");
    auto* ens_config_opt = ensemble->add_option("--config", ens_config, "Preset name or JSON config file; default fig6");
    auto* ens_paths_opt = ensemble->add_option("--paths", ens_paths, "Number of paths (>= 1)");
    auto* ens_seed_opt = ensemble->add_option("--seed", ens_seed, "Root seed");
    ensemble->add_option("--out", ens.out, "Output directory")->capture_default_str();
    ensemble->add_option("--jobs", ens.jobs, "Worker threads (0 = all cores)")->capture_default_str();

    // analyze
    AnalyzeArgs ana;
    std::string ana_prices, ana_returns, ana_schema, ana_units;
    auto* analyze = app.add_subcommand("analyze", "Statistics of a price or return series from CSV");
    auto* ana_prices_opt = analyze->add_option("--prices", ana_prices, "CSV file with a price column");
    auto* ana_returns_opt = analyze->add_option("--returns", ana_returns, "CSV file with a return column");
    auto* ana_schema_opt = analyze->add_option(
        "--schema", ana_schema, "column=<name|index>;delimiter=comma|semicolon|tab|space;date=<name>;header=true|false");
    auto* ana_units_opt = analyze->add_option("--units", ana_units, "percent | fraction (for --prices)");
    analyze->add_option("--max-lag", ana.max_lag, "Largest ACF lag")->capture_default_str();
    analyze->add_option("--out", ana.out, "Output directory")->capture_default_str();

    // kesten
    KestenArgs kes;
    auto* kesten = app.add_subcommand("kesten", "Solve E|c|^alpha = 1 for the tail exponent");
    kesten->add_option("--dist", kes.dist, "e.g. kind=exponential,mean=0.5 | kind=uniform,low=0,high=2 | "
                                           "kind=gaussian,mean=0,std=1")
        ->required();
    kesten->add_option("--tol", kes.tol, "Absolute tolerance on alpha")->capture_default_str();

    // reproduce
    ReproduceArgs rep;
    std::uint64_t rep_seed = 0;
    auto* reproduce = app.add_subcommand("reproduce", "Regenerate the data behind a figure (fig3 .. fig7)");
    reproduce->add_option("--figure", rep.figure, "fig3 | fig4 | fig5 | fig6 | fig7")->required();
    auto* rep_seed_opt = reproduce->add_option("--seed", rep_seed, "Root seed");
    reproduce->add_option("--out", rep.out, "Output directory")->capture_default_str();
    reproduce->add_option("--jobs", rep.jobs, "Worker threads for ensembles (0 = all cores)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    CommandOutcome outcome;
    if (simulate->parsed()) {
        sim.model = opt(sim_model_opt, sim_model);
        sim.config = opt(sim_config_opt, sim_config);
        sim.seed = opt(sim_seed_opt, sim_seed);
        sim.periods = opt(sim_periods_opt, sim_periods);
        sim.units = opt(sim_units_opt, sim_units);
        outcome = cmd_simulate(sim, std::cout, std::cerr);
    } else if (ensemble->parsed()) {
        ens.config = opt(ens_config_opt, ens_config);
        ens.paths = opt(ens_paths_opt, ens_paths);
        ens.seed = opt(ens_seed_opt, ens_seed);
        outcome = cmd_ensemble(ens, std::cout, std::cerr);
    } else if (analyze->parsed()) {
        ana.prices = opt(ana_prices_opt, ana_prices);
        ana.returns = opt(ana_returns_opt, ana_returns);
        ana.schema = opt(ana_schema_opt, ana_schema);
        ana.units = opt(ana_units_opt, ana_units);
        outcome = cmd_analyze(ana, std::cout, std::cerr);
    } else if (kesten->parsed()) {
        outcome = cmd_kesten(kes, std::cout, std::cerr);
    } else if (reproduce->parsed()) {
        rep.seed = opt(rep_seed_opt, rep_seed);
        outcome = cmd_reproduce(rep, std::cout, std::cerr);
    }
    return outcome.exit_code;
}
