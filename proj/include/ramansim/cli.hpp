#pragma once

// Command dispatch behind the raman-lab binary.  main() only parses flags
// into an Invocation; everything observable (files, stdout, exit codes) is
// decided here so it can be tested in-process.

#include <iosfwd>
#include <optional>
#include <string>

#include "ramansim/config.hpp"
#include "ramansim/io.hpp"

namespace ramansim {

struct Invocation {
    enum class Command { scan, prepare, ramsey, analytic, scenario } command =
        Command::scan;
    RunConfig cfg;
    std::string out_dir = ".";

    // ramsey
    RamseyScenario ramsey_scenario = RamseyScenario::raman;

    // analytic: raman-coupling | resonance | light-shift | transfer
    std::string analytic_op = "raman-coupling";
    int n = 6;
    std::optional<double> delta_khz;
    std::string level = "g";
    int n_a = 0;
    int n_b = 0;

    // scenario: reverse-raman | fifth-order
    std::string scenario_name = "reverse-raman";
};

// Exit codes used by the binary: 0 success, 1 unexpected error,
// 2 configuration, 3 numerics, 4 I/O.
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numerics_error = 3;
inline constexpr int exit_io_error = 4;

// Runs one command; writes artifacts under inv.out_dir and human-readable
// lines to `out`.  Throws the project error types; run_cli maps them.
void dispatch(const Invocation& inv, std::ostream& out);

// dispatch wrapped in the error-to-exit-code mapping, diagnostics to `err`.
int run_cli(const Invocation& inv, std::ostream& out, std::ostream& err);

} // namespace ramansim
