#pragma once

// Key = value run configuration.  All keys are optional; defaults reproduce
// the reference parameter set (49 kHz peak coupling, 128 kHz mode splitting,
// 6 mm waist, 200 m/s, 1.2 / 0.9 ms cavity lifetimes, n_th = 1).  Unit
// conversions happen exactly once, here; everything downstream runs on rad/s,
// seconds and meters.

#include <cstdint>
#include <optional>
#include <string>

#include "ramansim/experiments.hpp"

namespace ramansim {

struct RunConfig {
    SystemParams params;
    // velocity_mps carries a per-command default (200 m/s for scans and
    // scenarios, 170 m/s for the preparation protocol and its Ramsey probe);
    // an explicit key overrides it everywhere.
    bool velocity_set = false;
    // relaxation likewise: scans default to the closed system, the
    // preparation runs default to the full master equation.
    std::optional<bool> relaxation;
    // n_th defaults to 1 for scans (thermal equilibrium) and to 0 for the
    // preparation protocol; explicit keys override both.
    bool n_th_set = false;

    FieldSpec field_a = FieldSpec::vacuum();
    FieldSpec field_b = FieldSpec::thermal(1.0);
    double scan_min = -units::khz(300.0);
    double scan_max = units::khz(150.0);
    double scan_step = units::khz(2.0);

    int n_max_a = -1; // -1: automatic truncation
    int n_max_b = -1;
    double component_weight_cutoff = 1e-4;

    double source_mean = 6.0;
    double t_switch = units::us(5.0);
    double delta_before = units::khz(65.0);
    double delta_after = units::khz(135.0);

    double ramsey_time = units::us(100.0);
    double offset_min = 0.0;
    double offset_max = 20e3;
    double offset_step = 500.0;

    ImperfectionModel imperfections;
    StepperSettings stepper;

    // exact: deterministic probabilities; shots: binomial finite-statistics
    // emulation driven by the seed.
    enum class Sampling { exact, shots } sampling = Sampling::exact;
    int shots = 1000;

    // Runtime knobs (command-line flags, not config keys).
    int threads = 1;
    std::uint64_t seed = 0;

    std::string canonical;       // normalized echo of every key
    std::uint64_t config_hash = 0; // FNV-1a of the canonical echo
};

// Parses configuration text.  Unknown keys, malformed values and constraint
// violations throw ConfigError naming the offending key.
RunConfig parse_config(const std::string& text);

// Reads and parses a config file; IoError when the file cannot be read.
RunConfig load_config_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);

} // namespace ramansim
