#pragma once

// Scripted experiment protocols on top of the model/evolve engines:
// detuning scans of the atomic transfer, two-photon preparation with the
// sudden detuning switch, the semi-analytic Ramsey probe of the stored field,
// the classical imperfection ladder, and the reverse-Raman / fifth-order
// extension scenarios.

#include <optional>
#include <string>
#include <vector>

#include "ramansim/analytic.hpp"
#include "ramansim/evolve.hpp"
#include "ramansim/fockspace.hpp"
#include "ramansim/model.hpp"

namespace ramansim {

// Classical imperfection mixture applied to experiment results.
//
// Semantics (all exact mixtures, no sampling):
//   p_enter_g        probability the atom enters the cavity in g instead of e;
//                    realized by a rerun with the atom starting in g, mixed in.
//   background_floor additive atomic-detection background, clamped to [0,1];
//                    affects scan and fringe probabilities.
//   ramsey_contrast  multiplicative fringe contrast (interferometer quality).
//   mean_atoms       Poisson mean of the per-event atom count; 0 and 1 both
//                    mean "exactly one atom".  The two-atom branch is two
//                    sequential transits through the shared field state;
//                    branches with >= 3 atoms are truncated.
//   thermal_growth   residual thermal occupation during the run; realized by
//                    raising the bath n_th in a rerun, never post hoc.
struct ImperfectionModel {
    double p_enter_g = 0.0;
    double background_floor = 0.0;
    double ramsey_contrast = 1.0;
    double mean_atoms = 0.0;
    double thermal_growth = 0.0;

    bool is_identity() const;
    bool operator==(const ImperfectionModel&) const = default;
};

void validate(const ImperfectionModel& model);

// ---------------------------------------------------------------------------
// Single transit.

// Full Lindblad evolution of atom (x) field_a (x) field_b across the transit
// window [-3w/v, +3w/v].  The schedule must cover that window.  With all
// relaxation rates zero the evolution is effectively unitary.
DensityOperator run_transit(AtomLevel atom, const FieldState& field_a,
                            const FieldState& field_b, const DetuningSchedule& schedule,
                            const SystemParams& params, const StepperSettings& settings,
                            bool relaxation = true, EvolveReport* report = nullptr);

// ---------------------------------------------------------------------------
// Detuning scans.

struct ScanSpec {
    SystemParams params;
    FieldSpec field_a = FieldSpec::vacuum();
    FieldSpec field_b = FieldSpec::thermal(1.0);
    AtomLevel atom = AtomLevel::e;
    double delta_min = -units::khz(300.0);
    double delta_max = units::khz(150.0);
    double delta_step = units::khz(2.0);
    // Off: closed-system dynamics via the excitation-sector fast path (the
    // source mixtures are diagonal in photon number for every recorded
    // observable).  On: full density-matrix evolution with the dissipators.
    bool relaxation = false;
    int n_max_a = -1; // -1: automatic truncation
    int n_max_b = -1;
    double component_weight_cutoff = 1e-4;
    StepperSettings stepper;
    ImperfectionModel imperfections;
    int threads = 1;
};

struct ScanPoint {
    double delta; // rad/s
    double p_g;
};

struct ScanResult {
    std::vector<ScanPoint> points;
    FockSpaceConfig space;
    ScanSpec spec;
};

ScanResult scan_pg_vs_delta(const ScanSpec& spec);

// ---------------------------------------------------------------------------
// Two-photon preparation.

struct PrepareSpec {
    SystemParams params; // velocity 170 m/s, baths at n_th = 0 by default
    AtomLevel atom = AtomLevel::e;
    double source_mean = 6.0;              // coherent source in M_b
    double t_switch = units::us(5.0);      // switch time after crossing the axis
    double delta_before = units::khz(65.0);
    double delta_after = units::khz(135.0);
    bool relaxation = true;
    int n_max_a = -1;
    int n_max_b = -1;
    double component_weight_cutoff = 1e-4;
    StepperSettings stepper;
    ImperfectionModel imperfections;

    PrepareSpec() {
        params.velocity = 170.0;
        params.n_th_a = 0.0;
        params.n_th_b = 0.0;
    }
};

struct RamanPrepResult {
    DensityOperator joint;            // final joint state at cavity exit
    double success_probability = 0.0; // P(atom detected in g)
    std::vector<double> dist_a_given_g;
    std::vector<double> dist_b_given_g;
    Eigen::MatrixXd joint_given_g; // p(n_a, n_b | g)
    double p2_given_g = 0.0;       // P(n_a = 2 | g)
    double mean_a_given_g = 0.0;
    double mean_b_given_g = 0.0;
    PrepareSpec spec;
};

RamanPrepResult prepare_two_photon(const PrepareSpec& spec);

// ---------------------------------------------------------------------------
// Ramsey probe of the stored field (semi-analytic).
//
// The atom is put in a (g + i)/sqrt(2) superposition at the detuning switch
// and read out at cavity exit; level i is inert, so the fringe is
//   P_g(nu) = 1/2 [1 - C sum p(n_a,n_b) cos(2 pi nu T_R + phi(n_a,n_b))]
// with phi the g-level light-shift phase over the post-switch window and
// p(n_a,n_b) the g-conditioned joint photon distribution at the switch.
// Fitted phases are reported relative to the vacuum_ref scenario.

enum class RamseyScenario { vacuum_ref, one_photon_ref, raman };

struct RamseySpec {
    RamseyScenario scenario = RamseyScenario::raman;
    PrepareSpec prep; // underlying preparation protocol and parameters
    double ramsey_time = units::us(100.0); // T_R, fringe abscissa scale
    double offset_min = 0.0;               // source frequency offset grid (Hz)
    double offset_max = 20e3;
    double offset_step = 500.0;
    ImperfectionModel imperfections;
};

struct FringePoint {
    double offset_hz;
    double p_g;
};

struct FringeFit {
    double phase = 0.0;     // rad, of A cos(2 pi nu T_R + phase) + B
    double amplitude = 0.0; // A
    double baseline = 0.0;  // B
    double max_residual = 0.0;
};

struct FringeResult {
    std::vector<FringePoint> points;
    double fitted_phase = 0.0;    // relative to the vacuum_ref convention
    double fitted_contrast = 0.0; // C = 2 x fitted amplitude
    double raw_phase = 0.0;       // absolute fitted phase of this scenario
    double reference_phase = 0.0; // absolute fitted phase of vacuum_ref
    std::string reference = "vacuum_ref";
    FockSpaceConfig space;
    RamseySpec spec;
};

FringeResult ramsey_probe(const RamseySpec& spec);

// Least-squares fit of A cos(2 pi nu T_R + phase) + B to (offset, P_g)
// points.  Requires >= 5 points spanning at least one period; throws
// NumericsError when the data carry no resolvable oscillation.
FringeFit fit_fringe(const std::vector<FringePoint>& points, double ramsey_time);

// ---------------------------------------------------------------------------
// Imperfection ladder.
//
// Returns the experiment rerun under the given imperfection model (replacing
// any model stored in the result's spec).  The identity model returns the
// input unchanged.  thermal_growth and p_enter_g always trigger reruns; the
// post-hoc pieces (background floor, fringe contrast) never do.

ScanResult apply_imperfections(const ScanResult& ideal, const ImperfectionModel& model);
RamanPrepResult apply_imperfections(const RamanPrepResult& ideal,
                                    const ImperfectionModel& model);
FringeResult apply_imperfections(const FringeResult& ideal,
                                 const ImperfectionModel& model);

// ---------------------------------------------------------------------------
// Extension scenarios (closed system).

struct ReverseRamanResult {
    double delta_peak = 0.0; // rad/s, location of the transfer maximum
    double transfer = 0.0;   // P(|e,1,n-2>) at the peak
    std::vector<double> dist_b_given_e;
    int peak_n_b = 0;
    double forward_transfer = 0.0; // time-reversed partner at the same detuning
    FockSpaceConfig space;
};

// Transfer |g,0,n> -> |e,1,n-2>.  The energy balance puts the bare resonance
// at Delta = -2 delta; the feature is located by scanning around it.
ReverseRamanResult scenario_reverse_raman(int n, const SystemParams& params,
                                          const StepperSettings& settings = {});

struct FifthOrderResult {
    double delta_peak = 0.0;
    double transfer = 0.0; // peak P(n_a = 3, atom g)
    FockSpaceConfig space;
};

// Transfer |e,0,n> -> |g,3,n-2> near Delta = 2 delta (window widened downward
// because the light shifts pull the feature tens of kHz below 2 delta).
FifthOrderResult scenario_fifth_order(int n, const SystemParams& params,
                                      const StepperSettings& settings = {});

} // namespace ramansim
