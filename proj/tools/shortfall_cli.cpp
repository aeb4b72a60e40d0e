#include <iostream>

#include "CLI11.hpp"
#include "shortfall/app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Shortfall-risk hedging: optimal success sets, modified claims and hedges"};
    app.require_subcommand(1);
    shortfall::RunOptions options;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", options.config_path, "problem config (key = value or JSON)")->required();
        sub->add_option("--json", options.json_out, "also write the report as JSON");
    };
    auto add_discrete = [&](CLI::App* sub) {
        sub->add_flag("--rational", options.rational, "exact rational arithmetic");
        sub->add_flag("--table", options.table, "print the per-outcome table (crr: N <= 6)");
    };

    CLI::App* bs = app.add_subcommand("bs", "Black-Scholes call");
    add_common(bs);
    bs->add_flag("--rational", options.rational, "exact arithmetic (not available for bs)");
    CLI::App* crr = app.add_subcommand("crr", "binomial lattice");
    add_common(crr);
    add_discrete(crr);
    CLI::App* tri = app.add_subcommand("tri", "one-period trinomial model");
    add_common(tri);
    add_discrete(tri);
    CLI::App* candidates = app.add_subcommand("candidates", "list every optimal success set");
    add_common(candidates);
    add_discrete(candidates);
    CLI::App* verify = app.add_subcommand("verify", "re-check a report independently");
    add_common(verify);
    verify->add_flag("--rational", options.rational, "exact arithmetic when no report is given");
    verify->add_option("--paths", options.paths, "Monte Carlo paths (bs)");
    verify->add_option("--seed", options.seed, "Monte Carlo seed (bs)");
    verify->add_option("--report", options.report_path, "JSON report to check; solved afresh when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return shortfall::kExitConfig;
    }
    options.command = app.get_subcommands().front()->get_name();
    return shortfall::run(options, std::cout, std::cerr);
}
