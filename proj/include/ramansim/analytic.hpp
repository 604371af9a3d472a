#pragma once

// Closed-form perturbation theory: third-order Raman coupling strength,
// second-order light shifts, the shift-corrected resonance condition and the
// Ramsey phase accumulated after the freeze.  Used both as fast estimators
// and as oracles against the full numerics.

#include "ramansim/model.hpp"

namespace ramansim {

struct LevelShift {
    AtomLevel level;
    int n_a = 0;
    int n_b = 0;
    double shift = 0.0; // rad/s
};

// Third-order Raman matrix element Omega^3 sqrt(2n) / (8 Delta (Delta+delta))
// for |e,0,n> <-> |g,2,n-1>.  All angular frequencies in rad/s.
double raman_coupling(int n, double Delta, double delta, double Omega);

// Second-order light shifts of the dressed levels:
//   shift(e, n_a, n_b) = +(Omega^2/4) [ (n_a+1)/Delta + (n_b+1)/(Delta+delta) ]
//   shift(g, n_a, n_b) = -(Omega^2/4) [  n_a   /Delta +  n_b   /(Delta+delta) ]
double light_shift(AtomLevel level, int n_a, int n_b, double Delta, double delta,
                   double Omega);

// Solves Delta - delta + [shift(e,0,n) - shift(g,2,n-1)] = 0 for Delta by
// bisection on (0, delta]; the shifts pull the resonance below the bare
// Delta = delta condition.
double shifted_raman_resonance(int n, double Omega, double delta);

// Phase accumulated by level g relative to the inert probe level over the
// given post-freeze schedule: phi = -integral shift(g, n_a, n_b, Delta(t)) dt.
double ramsey_phase(int n_a, int n_b, const DetuningSchedule& schedule_after_freeze,
                    const SystemParams& params);

// Two-level pulse-area estimate of the Raman transfer at fixed detuning:
// P = sin^2(theta/2) with theta = integral of raman_coupling over the
// transit; the Omega(t)^3 envelope integrates to w sqrt(pi/3) / v.
double perturbative_transfer(int n, const SystemParams& params, double Delta);

// Effective duration of the Omega^3 envelope, w sqrt(pi/3) / v.
double raman_envelope_time(const SystemParams& params);

} // namespace ramansim
