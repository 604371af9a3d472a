#include "ramansim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace ramansim {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string format_double(double x) {
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::stod(buf) == x)
            break;
    }
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double x = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(x))
            throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid numeric value for " + key + ": '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    const double x = parse_double(key, value);
    const int i = static_cast<int>(std::lround(x));
    if (x != static_cast<double>(i))
        throw ConfigError("config: " + key + " must be an integer (got '" + value + "')");
    return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1")
        return true;
    if (value == "off" || value == "false" || value == "0")
        return false;
    throw ConfigError("config: " + key + " must be on/off (got '" + value + "')");
}

FieldSpec parse_field(const std::string& key, const std::string& value) {
    if (value == "vacuum")
        return FieldSpec::vacuum();
    const auto colon = value.find(':');
    const std::string kind = value.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : value.substr(colon + 1);
    if (kind == "fock") {
        const int n = parse_int(key, arg);
        if (n < 0)
            throw ConfigError("config: " + key + " photon number must be >= 0");
        return FieldSpec::fock(n);
    }
    if (kind == "coherent") {
        const double mean = parse_double(key, arg);
        if (mean < 0.0)
            throw ConfigError("config: " + key + " coherent mean must be >= 0");
        return FieldSpec::coherent_mean(mean);
    }
    if (kind == "thermal") {
        const double nbar = parse_double(key, arg);
        if (nbar < 0.0)
            throw ConfigError("config: " + key + " thermal occupation must be >= 0");
        return FieldSpec::thermal(nbar);
    }
    throw ConfigError("config: " + key + " must be vacuum, fock:N, coherent:MEAN or "
                      "thermal:NBAR (got '" + value + "')");
}

std::string format_field(const FieldSpec& f) {
    switch (f.kind) {
    case FieldSpec::Kind::fock:
        return f.value == 0.0 ? "vacuum" : "fock:" + format_double(f.value);
    case FieldSpec::Kind::coherent:
        return "coherent:" + format_double(f.value * f.value); // value is alpha
    case FieldSpec::Kind::thermal:
        return "thermal:" + format_double(f.value);
    }
    return "vacuum";
}

void require(bool ok, const std::string& key, const std::string& what,
             const std::string& value) {
    if (!ok)
        throw ConfigError("config: constraint violated, " + key + " must be " + what +
                          " (got " + value + ")");
}

} // namespace

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

RunConfig parse_config(const std::string& text) {
    static const std::vector<std::string> known = {
        "omega0_khz", "delta_khz", "waist_mm", "velocity_mps", "t_cav_a_ms",
        "t_cav_b_ms", "n_th_a", "n_th_b", "field_a", "field_b", "scan_min_khz",
        "scan_max_khz", "scan_step_khz", "relaxation", "n_max_a", "n_max_b",
        "component_weight_cutoff", "source_mean", "t_switch_us", "delta_before_khz",
        "delta_after_khz", "ramsey_time_us", "offset_min_hz", "offset_max_hz",
        "offset_step_hz", "p_enter_g", "background_floor", "ramsey_contrast",
        "mean_atoms", "thermal_growth", "dt_us", "dt_outside_us", "method",
        "tol_rel", "sampling", "shots"};

    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty())
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not of the form key = value: '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config: unknown key '" + key + "'");
        if (value.empty())
            throw ConfigError("config: empty value for " + key);
        kv[key] = value;
    }

    RunConfig cfg;
    auto has = [&](const char* k) { return kv.count(k) != 0; };
    auto num = [&](const char* k, double dflt) {
        return has(k) ? parse_double(k, kv[k]) : dflt;
    };

    // Physical parameters (CLI units -> internal at this boundary only).
    const double omega0_khz = num("omega0_khz", 49.0);
    require(omega0_khz > 0.0, "omega0_khz", "> 0", format_double(omega0_khz));
    cfg.params.omega0 = units::khz(omega0_khz);

    const double delta_khz = num("delta_khz", 128.0);
    require(delta_khz > 0.0, "delta_khz", "> 0", format_double(delta_khz));
    cfg.params.delta = units::khz(delta_khz);

    const double waist_mm = num("waist_mm", 6.0);
    require(waist_mm > 0.0, "waist_mm", "> 0", format_double(waist_mm));
    cfg.params.waist = units::mm(waist_mm);

    const double velocity = num("velocity_mps", 200.0);
    require(velocity > 0.0, "velocity_mps", "> 0", format_double(velocity));
    cfg.params.velocity = velocity;
    cfg.velocity_set = has("velocity_mps");

    const double t_cav_a = num("t_cav_a_ms", 1.2);
    require(t_cav_a > 0.0, "t_cav_a_ms", "> 0", format_double(t_cav_a));
    cfg.params.kappa_a = 1.0 / units::ms(t_cav_a);

    const double t_cav_b = num("t_cav_b_ms", 0.9);
    require(t_cav_b > 0.0, "t_cav_b_ms", "> 0", format_double(t_cav_b));
    cfg.params.kappa_b = 1.0 / units::ms(t_cav_b);

    cfg.params.n_th_a = num("n_th_a", 1.0);
    require(cfg.params.n_th_a >= 0.0, "n_th_a", ">= 0", format_double(cfg.params.n_th_a));
    cfg.params.n_th_b = num("n_th_b", 1.0);
    require(cfg.params.n_th_b >= 0.0, "n_th_b", ">= 0", format_double(cfg.params.n_th_b));
    cfg.n_th_set = has("n_th_a") || has("n_th_b");

    if (has("field_a"))
        cfg.field_a = parse_field("field_a", kv["field_a"]);
    if (has("field_b"))
        cfg.field_b = parse_field("field_b", kv["field_b"]);

    const double scan_min_khz = num("scan_min_khz", -300.0);
    const double scan_max_khz = num("scan_max_khz", 150.0);
    const double scan_step_khz = num("scan_step_khz", 2.0);
    require(scan_step_khz > 0.0, "scan_step_khz", "> 0", format_double(scan_step_khz));
    require(scan_max_khz >= scan_min_khz, "scan_max_khz", ">= scan_min_khz",
            format_double(scan_max_khz));
    cfg.scan_min = units::khz(scan_min_khz);
    cfg.scan_max = units::khz(scan_max_khz);
    cfg.scan_step = units::khz(scan_step_khz);

    if (has("relaxation"))
        cfg.relaxation = parse_bool("relaxation", kv["relaxation"]);

    cfg.n_max_a = has("n_max_a") ? parse_int("n_max_a", kv["n_max_a"]) : -1;
    require(cfg.n_max_a >= -1, "n_max_a", ">= -1 (-1: automatic)",
            std::to_string(cfg.n_max_a));
    cfg.n_max_b = has("n_max_b") ? parse_int("n_max_b", kv["n_max_b"]) : -1;
    require(cfg.n_max_b >= -1, "n_max_b", ">= -1 (-1: automatic)",
            std::to_string(cfg.n_max_b));

    cfg.component_weight_cutoff = num("component_weight_cutoff", 1e-4);
    require(cfg.component_weight_cutoff >= 0.0 && cfg.component_weight_cutoff < 1.0,
            "component_weight_cutoff", "in [0, 1)",
            format_double(cfg.component_weight_cutoff));

    cfg.source_mean = num("source_mean", 6.0);
    require(cfg.source_mean >= 0.0, "source_mean", ">= 0", format_double(cfg.source_mean));

    const double t_switch_us = num("t_switch_us", 5.0);
    cfg.t_switch = units::us(t_switch_us);

    const double delta_before_khz = num("delta_before_khz", 65.0);
    require(delta_before_khz != 0.0, "delta_before_khz", "nonzero",
            format_double(delta_before_khz));
    cfg.delta_before = units::khz(delta_before_khz);

    const double delta_after_khz = num("delta_after_khz", 135.0);
    require(delta_after_khz != 0.0, "delta_after_khz", "nonzero",
            format_double(delta_after_khz));
    cfg.delta_after = units::khz(delta_after_khz);

    const double ramsey_time_us = num("ramsey_time_us", 100.0);
    require(ramsey_time_us > 0.0, "ramsey_time_us", "> 0", format_double(ramsey_time_us));
    cfg.ramsey_time = units::us(ramsey_time_us);

    cfg.offset_min = num("offset_min_hz", 0.0);
    cfg.offset_max = num("offset_max_hz", 20e3);
    cfg.offset_step = num("offset_step_hz", 500.0);
    require(cfg.offset_step > 0.0, "offset_step_hz", "> 0", format_double(cfg.offset_step));
    require(cfg.offset_max >= cfg.offset_min, "offset_max_hz", ">= offset_min_hz",
            format_double(cfg.offset_max));

    cfg.imperfections.p_enter_g = num("p_enter_g", 0.0);
    require(cfg.imperfections.p_enter_g >= 0.0 && cfg.imperfections.p_enter_g <= 1.0,
            "p_enter_g", "in [0, 1]", format_double(cfg.imperfections.p_enter_g));
    cfg.imperfections.background_floor = num("background_floor", 0.0);
    require(cfg.imperfections.background_floor >= 0.0 &&
                cfg.imperfections.background_floor <= 1.0,
            "background_floor", "in [0, 1]",
            format_double(cfg.imperfections.background_floor));
    cfg.imperfections.ramsey_contrast = num("ramsey_contrast", 1.0);
    require(cfg.imperfections.ramsey_contrast > 0.0 &&
                cfg.imperfections.ramsey_contrast <= 1.0,
            "ramsey_contrast", "in (0, 1]",
            format_double(cfg.imperfections.ramsey_contrast));
    cfg.imperfections.mean_atoms = num("mean_atoms", 0.0);
    require(cfg.imperfections.mean_atoms >= 0.0, "mean_atoms", ">= 0",
            format_double(cfg.imperfections.mean_atoms));
    cfg.imperfections.thermal_growth = num("thermal_growth", 0.0);
    require(cfg.imperfections.thermal_growth >= 0.0, "thermal_growth", ">= 0",
            format_double(cfg.imperfections.thermal_growth));

    const double dt_us = num("dt_us", 0.05);
    require(dt_us > 0.0, "dt_us", "> 0", format_double(dt_us));
    cfg.stepper.dt = units::us(dt_us);
    const double dt_outside_us = num("dt_outside_us", 5.0);
    require(dt_outside_us > 0.0, "dt_outside_us", "> 0", format_double(dt_outside_us));
    cfg.stepper.dt_outside = units::us(dt_outside_us);

    if (has("method")) {
        if (kv["method"] == "fixed")
            cfg.stepper.method = StepperSettings::Method::fixed4;
        else if (kv["method"] == "adaptive")
            cfg.stepper.method = StepperSettings::Method::adaptive;
        else
            throw ConfigError("config: method must be fixed or adaptive (got '" +
                              kv["method"] + "')");
    }
    cfg.stepper.tol_rel = num("tol_rel", 1e-9);
    require(cfg.stepper.tol_rel > 0.0, "tol_rel", "> 0",
            format_double(cfg.stepper.tol_rel));

    if (has("sampling")) {
        if (kv["sampling"] == "exact")
            cfg.sampling = RunConfig::Sampling::exact;
        else if (kv["sampling"] == "shots")
            cfg.sampling = RunConfig::Sampling::shots;
        else
            throw ConfigError("config: sampling must be exact or shots (got '" +
                              kv["sampling"] + "')");
    }
    cfg.shots = has("shots") ? parse_int("shots", kv["shots"]) : 1000;
    require(cfg.shots > 0, "shots", "> 0", std::to_string(cfg.shots));

    // Canonical echo: every key with its resolved value, in declaration order.
    std::ostringstream echo;
    auto line_out = [&](const char* k, const std::string& v) {
        echo << k << " = " << v << "\n";
    };
    line_out("omega0_khz", format_double(omega0_khz));
    line_out("delta_khz", format_double(delta_khz));
    line_out("waist_mm", format_double(waist_mm));
    line_out("velocity_mps", cfg.velocity_set ? format_double(velocity) : "auto");
    line_out("t_cav_a_ms", format_double(t_cav_a));
    line_out("t_cav_b_ms", format_double(t_cav_b));
    line_out("n_th_a", format_double(cfg.params.n_th_a));
    line_out("n_th_b", format_double(cfg.params.n_th_b));
    line_out("field_a", format_field(cfg.field_a));
    line_out("field_b", format_field(cfg.field_b));
    line_out("scan_min_khz", format_double(scan_min_khz));
    line_out("scan_max_khz", format_double(scan_max_khz));
    line_out("scan_step_khz", format_double(scan_step_khz));
    line_out("relaxation", cfg.relaxation ? (*cfg.relaxation ? "on" : "off") : "auto");
    line_out("n_max_a", std::to_string(cfg.n_max_a));
    line_out("n_max_b", std::to_string(cfg.n_max_b));
    line_out("component_weight_cutoff", format_double(cfg.component_weight_cutoff));
    line_out("source_mean", format_double(cfg.source_mean));
    line_out("t_switch_us", format_double(t_switch_us));
    line_out("delta_before_khz", format_double(delta_before_khz));
    line_out("delta_after_khz", format_double(delta_after_khz));
    line_out("ramsey_time_us", format_double(ramsey_time_us));
    line_out("offset_min_hz", format_double(cfg.offset_min));
    line_out("offset_max_hz", format_double(cfg.offset_max));
    line_out("offset_step_hz", format_double(cfg.offset_step));
    line_out("p_enter_g", format_double(cfg.imperfections.p_enter_g));
    line_out("background_floor", format_double(cfg.imperfections.background_floor));
    line_out("ramsey_contrast", format_double(cfg.imperfections.ramsey_contrast));
    line_out("mean_atoms", format_double(cfg.imperfections.mean_atoms));
    line_out("thermal_growth", format_double(cfg.imperfections.thermal_growth));
    line_out("dt_us", format_double(dt_us));
    line_out("dt_outside_us", format_double(dt_outside_us));
    line_out("method",
             cfg.stepper.method == StepperSettings::Method::fixed4 ? "fixed" : "adaptive");
    line_out("tol_rel", format_double(cfg.stepper.tol_rel));
    line_out("sampling", cfg.sampling == RunConfig::Sampling::exact ? "exact" : "shots");
    line_out("shots", std::to_string(cfg.shots));

    cfg.canonical = echo.str();
    cfg.config_hash = fnv1a64(cfg.canonical);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace ramansim
