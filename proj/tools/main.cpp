#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ramansim/cli.hpp"

using namespace ramansim;

int main(int argc, char** argv) {
    CLI::App app{"raman-lab: circular-Rydberg atom crossing a two-mode cavity"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--out", out_dir, "output directory (created if missing)");
    app.add_option("--threads", threads, "worker threads for scans");
    app.add_option("--seed", seed, "seed for the shot-sampling mode");

    Invocation inv;

    auto* scan = app.add_subcommand("scan", "ground-state transfer vs Raman detuning");
    auto* prepare =
        app.add_subcommand("prepare", "two-photon preparation with the detuning switch");
    auto* ramsey = app.add_subcommand("ramsey", "Ramsey probe of the stored field");
    std::string scenario_opt = "raman";
    ramsey->add_option("--scenario", scenario_opt, "vacuum_ref | one_photon_ref | raman");

    auto* analytic = app.add_subcommand("analytic", "closed-form reference quantities");
    analytic->require_subcommand(1);
    auto add_analytic = [&](const char* name, const char* help, bool takes_levels) {
        auto* sub = analytic->add_subcommand(name, help);
        sub->add_option("--n", inv.n, "photon number");
        double dk = 0.0;
        auto* opt = sub->add_option("--delta-khz", dk, "Raman detuning in kHz");
        sub->callback([&inv, name, opt, &dk] {
            inv.analytic_op = name;
            if (opt->count())
                inv.delta_khz = dk;
        });
        if (takes_levels) {
            sub->add_option("--level", inv.level, "atomic level, g or e");
            sub->add_option("--na", inv.n_a, "photons in mode a");
            sub->add_option("--nb", inv.n_b, "photons in mode b");
        }
        return sub;
    };
    add_analytic("raman-coupling", "third-order two-photon coupling", false);
    add_analytic("resonance", "light-shift corrected Raman resonance", false);
    add_analytic("light-shift", "second-order level shift", true);
    add_analytic("transfer", "perturbative transfer probability", false);

    auto* scenario = app.add_subcommand("scenario", "extension scenarios");
    scenario->add_option("--name", inv.scenario_name, "reverse-raman | fifth-order");
    scenario->add_option("--n", inv.n, "source photon number");

    CLI11_PARSE(app, argc, argv);

    try {
        inv.cfg = config_path.empty() ? parse_config("") : load_config_file(config_path);
        inv.cfg.threads = threads;
        inv.cfg.seed = seed;
        inv.out_dir = out_dir;
        if (*scan)
            inv.command = Invocation::Command::scan;
        else if (*prepare)
            inv.command = Invocation::Command::prepare;
        else if (*ramsey)
            inv.command = Invocation::Command::ramsey;
        else if (*analytic)
            inv.command = Invocation::Command::analytic;
        else if (*scenario)
            inv.command = Invocation::Command::scenario;
        if (*ramsey) {
            if (scenario_opt == "vacuum_ref")
                inv.ramsey_scenario = RamseyScenario::vacuum_ref;
            else if (scenario_opt == "one_photon_ref")
                inv.ramsey_scenario = RamseyScenario::one_photon_ref;
            else if (scenario_opt == "raman")
                inv.ramsey_scenario = RamseyScenario::raman;
            else
                throw ConfigError("ramsey: unknown scenario '" + scenario_opt + "'");
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    return run_cli(inv, std::cout, std::cerr);
}
