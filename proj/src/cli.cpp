#include "ramansim/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <random>

namespace ramansim {

namespace {

std::string join(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

// Finite-statistics emulation: one binomial draw per point, seeded by
// (run seed, point index) so the outcome is independent of threading.
double binomial_draw(double p, int shots, std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + index * 0xbf58476d1ce4e5b9ull +
                        0x94d049bb133111ebull);
    std::binomial_distribution<int> dist(shots, std::clamp(p, 0.0, 1.0));
    return static_cast<double>(dist(rng)) / shots;
}

template <typename Points>
void apply_sampling(Points& points, const RunConfig& cfg) {
    if (cfg.sampling != RunConfig::Sampling::shots)
        return;
    for (std::size_t i = 0; i < points.size(); ++i)
        points[i].p_g = binomial_draw(points[i].p_g, cfg.shots, cfg.seed, i);
}

// The preparation protocol runs slower (170 m/s) and with cold baths unless
// the configuration pins those explicitly.
SystemParams prepare_params(const RunConfig& cfg) {
    SystemParams p = cfg.params;
    if (!cfg.velocity_set)
        p.velocity = 170.0;
    if (!cfg.n_th_set) {
        p.n_th_a = 0.0;
        p.n_th_b = 0.0;
    }
    return p;
}

PrepareSpec build_prepare_spec(const RunConfig& cfg) {
    PrepareSpec spec;
    spec.params = prepare_params(cfg);
    spec.source_mean = cfg.source_mean;
    spec.t_switch = cfg.t_switch;
    spec.delta_before = cfg.delta_before;
    spec.delta_after = cfg.delta_after;
    spec.relaxation = cfg.relaxation.value_or(true);
    spec.n_max_a = cfg.n_max_a;
    spec.n_max_b = cfg.n_max_b;
    spec.component_weight_cutoff = cfg.component_weight_cutoff;
    spec.stepper = cfg.stepper;
    spec.imperfections = cfg.imperfections;
    return spec;
}

void run_scan(const Invocation& inv, std::ostream& out) {
    const RunConfig& cfg = inv.cfg;
    ScanSpec spec;
    spec.params = cfg.params;
    spec.field_a = cfg.field_a;
    spec.field_b = cfg.field_b;
    spec.delta_min = cfg.scan_min;
    spec.delta_max = cfg.scan_max;
    spec.delta_step = cfg.scan_step;
    spec.relaxation = cfg.relaxation.value_or(false);
    spec.n_max_a = cfg.n_max_a;
    spec.n_max_b = cfg.n_max_b;
    spec.component_weight_cutoff = cfg.component_weight_cutoff;
    spec.stepper = cfg.stepper;
    spec.imperfections = cfg.imperfections;
    spec.threads = cfg.threads;

    ScanResult result = scan_pg_vs_delta(spec);
    apply_sampling(result.points, cfg);
    const OutputMeta meta{cfg.config_hash, result.space};
    const std::string path = join(inv.out_dir, "scan.csv");
    write_text_file(path, render_scan_csv(result, meta));
    write_text_file(join(inv.out_dir, "config_echo.txt"), render_config_echo(cfg));
    out << "scan: " << result.points.size() << " points over ["
        << units::to_khz(cfg.scan_min) << ", " << units::to_khz(cfg.scan_max)
        << "] kHz -> " << path << "\n";
}

void run_prepare(const Invocation& inv, std::ostream& out) {
    const RunConfig& cfg = inv.cfg;
    const RamanPrepResult result = prepare_two_photon(build_prepare_spec(cfg));
    const OutputMeta meta{cfg.config_hash, result.joint.space};
    const std::string path = join(inv.out_dir, "prepare.txt");
    write_text_file(path, render_prepare_report(result, meta));
    write_text_file(join(inv.out_dir, "config_echo.txt"), render_config_echo(cfg));
    out << "prepare: success probability " << result.success_probability
        << ", P(n_a=2 | g) " << result.p2_given_g << " -> " << path << "\n";
}

void run_ramsey(const Invocation& inv, std::ostream& out) {
    const RunConfig& cfg = inv.cfg;
    RamseySpec spec;
    spec.scenario = inv.ramsey_scenario;
    spec.prep = build_prepare_spec(cfg);
    spec.ramsey_time = cfg.ramsey_time;
    spec.offset_min = cfg.offset_min;
    spec.offset_max = cfg.offset_max;
    spec.offset_step = cfg.offset_step;
    spec.imperfections = cfg.imperfections;

    FringeResult result = ramsey_probe(spec);
    apply_sampling(result.points, cfg);
    const OutputMeta meta{cfg.config_hash, result.space};
    const std::string fringe_path = join(inv.out_dir, "fringe.csv");
    write_text_file(fringe_path, render_fringe_csv(result, meta));
    write_text_file(join(inv.out_dir, "ramsey.txt"), render_ramsey_report(result, meta));
    write_text_file(join(inv.out_dir, "config_echo.txt"), render_config_echo(cfg));
    out << "ramsey: fitted phase " << result.fitted_phase << " rad, contrast "
        << result.fitted_contrast << " -> " << fringe_path << "\n";
}

void run_analytic(const Invocation& inv, std::ostream& out) {
    const SystemParams& p = inv.cfg.params;
    const double Delta = inv.delta_khz ? units::khz(*inv.delta_khz) : p.delta;
    char buf[160];
    if (inv.analytic_op == "raman-coupling") {
        const double g = raman_coupling(inv.n, Delta, p.delta, p.omega0);
        std::snprintf(buf, sizeof buf,
                      "raman coupling for n=%d at Delta = %.3f kHz: %.2f kHz", inv.n,
                      units::to_khz(Delta), units::to_khz(g));
    } else if (inv.analytic_op == "resonance") {
        const double r = shifted_raman_resonance(inv.n, p.omega0, p.delta);
        std::snprintf(buf, sizeof buf, "shifted resonance for n=%d: %.3f kHz", inv.n,
                      units::to_khz(r));
    } else if (inv.analytic_op == "light-shift") {
        const AtomLevel level = inv.level == "e" ? AtomLevel::e : AtomLevel::g;
        if (inv.level != "e" && inv.level != "g")
            throw ConfigError("analytic light-shift: --level must be g or e");
        const double s = light_shift(level, inv.n_a, inv.n_b, Delta, p.delta, p.omega0);
        std::snprintf(buf, sizeof buf,
                      "light shift of %s with (n_a=%d, n_b=%d) at Delta = %.3f kHz: "
                      "%.4f kHz",
                      inv.level.c_str(), inv.n_a, inv.n_b, units::to_khz(Delta),
                      units::to_khz(s));
    } else if (inv.analytic_op == "transfer") {
        const double t = perturbative_transfer(inv.n, p, Delta);
        std::snprintf(buf, sizeof buf,
                      "perturbative transfer for n=%d at Delta = %.3f kHz: %.6g",
                      inv.n, units::to_khz(Delta), t);
    } else {
        throw ConfigError("analytic: unknown operation '" + inv.analytic_op + "'");
    }
    out << buf << "\n";
}

void run_scenario(const Invocation& inv, std::ostream& out) {
    const RunConfig& cfg = inv.cfg;
    const std::string path = join(inv.out_dir, "scenario.txt");
    if (inv.scenario_name == "reverse-raman") {
        const ReverseRamanResult r =
            scenario_reverse_raman(inv.n, cfg.params, cfg.stepper);
        const OutputMeta meta{cfg.config_hash, r.space};
        write_text_file(path, render_reverse_raman_report(r, inv.n, meta));
        out << "reverse-raman: peak transfer " << r.transfer << " at "
            << units::to_khz(r.delta_peak) << " kHz -> " << path << "\n";
    } else if (inv.scenario_name == "fifth-order") {
        const FifthOrderResult r = scenario_fifth_order(inv.n, cfg.params, cfg.stepper);
        const OutputMeta meta{cfg.config_hash, r.space};
        write_text_file(path, render_fifth_order_report(r, inv.n, meta));
        out << "fifth-order: peak transfer " << r.transfer << " at "
            << units::to_khz(r.delta_peak) << " kHz -> " << path << "\n";
    } else {
        throw ConfigError("scenario: unknown name '" + inv.scenario_name +
                          "' (reverse-raman or fifth-order)");
    }
    write_text_file(join(inv.out_dir, "config_echo.txt"), render_config_echo(cfg));
}

} // namespace

void dispatch(const Invocation& inv, std::ostream& out) {
    if (inv.cfg.threads < 1)
        throw ConfigError("--threads must be >= 1");
    switch (inv.command) {
    case Invocation::Command::scan:
        run_scan(inv, out);
        break;
    case Invocation::Command::prepare:
        run_prepare(inv, out);
        break;
    case Invocation::Command::ramsey:
        run_ramsey(inv, out);
        break;
    case Invocation::Command::analytic:
        run_analytic(inv, out);
        break;
    case Invocation::Command::scenario:
        run_scenario(inv, out);
        break;
    }
}

int run_cli(const Invocation& inv, std::ostream& out, std::ostream& err) {
    try {
        dispatch(inv, out);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const NumericsError& e) {
        err << "numerics error: " << e.what() << "\n";
        return exit_numerics_error;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace ramansim
