#pragma once

// Time integration of pure-state (Schrodinger) and open-system (Lindblad)
// dynamics under the time-dependent generator of module model.
//
// The integrator is a classical 4th-order Runge-Kutta, either with a fixed
// step or with step-doubling adaptive control.  Step boundaries are aligned
// with detuning switches and with the Gaussian coupling cutoff, so H(t) is
// smooth inside every step.  Outside the coupling window a much larger step
// is used (relaxation is the only remaining dynamics there).

#include <optional>
#include <vector>

#include "ramansim/fockspace.hpp"
#include "ramansim/model.hpp"

namespace ramansim {

struct StepperSettings {
    double dt = 5e-8; // base step inside the coupling window (s)
    // Step for the dissipative part outside the Gaussian cutoff.  There the
    // Hamiltonian is diagonal and commutes with the cavity channels, so it is
    // split off and applied as exact phase rotations; only the dissipators
    // are stepped numerically (not at all in closed-system runs).
    double dt_outside = 5e-6;
    enum class Method { fixed4, adaptive } method = Method::fixed4;
    double tol_rel = 1e-9; // local error tolerance in adaptive mode
};

// Diagnostics of one integration run.  Drifts are reported, never silently
// repaired (the unitary engine does not renormalize, the density engine only
// re-symmetrizes the Hermitian part each step).
struct EvolveReport {
    long steps = 0;
    double norm_drift = 0.0;   // | ||psi|| - 1 | at the end (unitary engine)
    double trace_drift = 0.0;  // max |tr rho - tr rho_0| over the run
    double min_eigenvalue = 0.0; // smallest eigenvalue of the final rho
};

// Optional per-step observable record (CSV-friendly).  min_eig_estimate is
// the smallest diagonal element: a cheap per-step estimate, the exact value
// is computed once on the final state.
struct StepRecord {
    double t;
    double p_e;
    double p_g;
    double n_a;
    double n_b;
    double trace;
    double min_eig_estimate;
};

StateVector evolve_unitary(const StateVector& psi0, const LindbladModel& model,
                           double t0, double t1, const StepperSettings& settings,
                           EvolveReport* report = nullptr);

DensityOperator evolve_density(const DensityOperator& rho0, const LindbladModel& model,
                               double t0, double t1, const StepperSettings& settings,
                               EvolveReport* report = nullptr,
                               std::vector<StepRecord>* trace_out = nullptr);

// ---------------------------------------------------------------------------
// Total-excitation sector fast path (closed system only).
//
// H commutes with N = P_e + n_a + n_b, so with relaxation off a basis state
// |atom, n_a, n_b> evolves inside the small sector N = atom + n_a + n_b.
// Diagonal mixtures (Fock/thermal sources) are exact sums of such runs; for
// coherent sources the inter-sector coherences never reach any observable
// that commutes with N (P_g, photon distributions), so the weighted sector
// sum reproduces those observables exactly as well.

struct SectorBasis {
    int N = 0;
    FockSpaceConfig space;
    std::vector<BasisLabel> labels;
    int index_of(const BasisLabel& lab) const; // -1 when absent

    int dim() const { return static_cast<int>(labels.size()); }
};

SectorBasis sector_basis(int N, const FockSpaceConfig& space);

struct SectorRun {
    SectorBasis basis;
    Vec amplitudes; // final state in the sector basis
    double norm_drift = 0.0;
};

SectorRun evolve_sector(const BasisLabel& start, const LindbladModel& model,
                        double t0, double t1, const StepperSettings& settings);

// Probability of finding the atom in the given level (sector amplitudes).
double sector_atom_population(const SectorRun& run, AtomLevel level);

// Probability of one specific basis label in the final sector state.
double sector_population(const SectorRun& run, const BasisLabel& lab);

// Accumulate weight * |amplitude|^2 of each (n_a, n_b), optionally restricted
// to one atom level, into a (n_max_a+1) x (n_max_b+1) matrix.
void sector_accumulate_joint(const SectorRun& run, double weight,
                             std::optional<AtomLevel> level, Eigen::MatrixXd& joint);

} // namespace ramansim
