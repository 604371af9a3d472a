#pragma once

// Physical model: system parameters, Gaussian transit coupling, Stark
// detuning schedule, rotating-frame Hamiltonian and Lindblad dissipators.
//
// Frame convention: rotating at the M_a frequency, with detuning
// Delta = omega_atom - omega_a and omega_b = omega_a - delta (M_a has the
// highest frequency).  In that frame
//
//   H(t)/hbar = Delta(t) P_e - delta n_b
//             + (Omega(t)/2) (a sigma+ + a^dag sigma- + b sigma+ + b^dag sigma-)
//
// Internal units are rad/s and seconds throughout; conversions from kHz, ms
// and mm happen only at the CLI boundary.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "ramansim/fockspace.hpp"

namespace ramansim {

namespace units {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
// CLI-facing unit conversions.
inline double khz(double x) { return two_pi * 1e3 * x; } // frequency in kHz -> rad/s
inline double to_khz(double w) { return w / (two_pi * 1e3); }
inline double hz(double x) { return two_pi * x; }
inline double ms(double x) { return 1e-3 * x; }
inline double us(double x) { return 1e-6 * x; }
inline double mm(double x) { return 1e-3 * x; }
} // namespace units

struct SystemParams {
    double omega0 = units::khz(49.0);   // peak vacuum Rabi angular frequency (rad/s)
    double delta = units::khz(128.0);   // mode splitting omega_a - omega_b (rad/s)
    double waist = units::mm(6.0);      // Gaussian mode waist (m)
    double velocity = 200.0;            // atomic velocity (m/s)
    double kappa_a = 1.0 / units::ms(1.2); // mode a energy decay rate (1/s)
    double kappa_b = 1.0 / units::ms(0.9); // mode b energy decay rate (1/s)
    double n_th_a = 1.0;                // bath occupation seen by mode a
    double n_th_b = 1.0;                // bath occupation seen by mode b

    // Transit half-length: coupling is cut off exactly at |v t| = 3 w.
    double transit_half_time() const { return 3.0 * waist / velocity; }
};

void validate(const SystemParams& params);

// Omega(t) = omega0 exp(-(v t)^2 / w^2) for |v t| <= 3w, exactly 0 outside.
double coupling_at(double t, const SystemParams& params);

struct DetuningSegment {
    double t_start;
    double t_end;
    double value; // rad/s
};

// Contiguous, non-overlapping segments covering the simulation window.
// Segment membership is closed-open: t in [t_start, t_end).
struct DetuningSchedule {
    std::vector<DetuningSegment> segments;

    double t_begin() const { return segments.front().t_start; }
    double t_end() const { return segments.back().t_end; }
};

DetuningSchedule flat_schedule(double detuning, double t0, double t1);
DetuningSchedule switched_schedule(double before, double after, double t_switch,
                                   double t0, double t1);
void validate(const DetuningSchedule& schedule);

double detuning_at(double t, const DetuningSchedule& schedule);

LinearOperator hamiltonian_at(double t, const DetuningSchedule& schedule,
                              const SystemParams& params, const FockSpaceConfig& space);

// Collapse channel: rate * (L rho L^dag - 1/2 {L^dag L, rho}) with the rate
// kept separate from the (unit-normalized) operator L.
struct Dissipator {
    LinearOperator op;
    double rate; // 1/s
};

// Four channels: kappa_a(1+n_th_a) a, kappa_a n_th_a a^dag, and the mode-b
// analogues.  Zero-rate channels are dropped.
std::vector<Dissipator> lindblad_dissipators(const SystemParams& params,
                                             const FockSpaceConfig& space);

// Assembled generator handed to the integrators.  Keeps the structural
// pieces (diagonals and the coupling pattern) so the stepper can evaluate
// H(t) without reassembling a sparse matrix every step.
struct LindbladModel {
    FockSpaceConfig space;
    SystemParams params;
    DetuningSchedule schedule;
    bool relaxation = true;
    // When set, Omega(t) is held at this constant value (used by oracle
    // tests); otherwise the Gaussian transit profile applies.
    std::optional<double> omega_override;

    Eigen::VectorXd diag_pe; // 1 on atom-e basis states
    Eigen::VectorXd diag_nb; // n_b on each basis state
    SpMat coupling;          // a sigma+ + a^dag sigma- + b sigma+ + b^dag sigma- (no Omega/2)
    std::vector<Dissipator> dissipators;

    double omega_at(double t) const {
        return omega_override ? *omega_override : coupling_at(t, params);
    }
    // Hamiltonian as a function of time (sparse assembly; for inspection and
    // oracle diagonalization, not the integrator hot path).
    LinearOperator hamiltonian(double t) const;
};

LindbladModel build_model(const DetuningSchedule& schedule, const SystemParams& params,
                          const FockSpaceConfig& space, bool relaxation = true);

} // namespace ramansim
