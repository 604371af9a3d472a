#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ramansim/evolve.hpp"

using namespace ramansim;
using namespace ramansim::units;

namespace {

// Two-level vacuum Rabi setup: one excitation shared between the atom and
// mode a, constant coupling, mode b frozen out.
LindbladModel rabi_model(double detuning, double t1) {
    SystemParams p;
    FockSpaceConfig sp{1, 0};
    auto model = build_model(flat_schedule(detuning, 0.0, t1), p, sp,
                             /*relaxation=*/false);
    model.omega_override = p.omega0;
    return model;
}

double pop_g10(const StateVector& psi) {
    return std::norm(psi.amplitudes(basis_index({0, 1, 0}, psi.space)));
}

} // namespace

TEST_CASE("resonant vacuum Rabi oscillation") {
    SystemParams p;
    const double t_pi = pi / p.omega0;
    auto model = rabi_model(0.0, 2.0 * t_pi);

    auto psi0 = basis_state(AtomLevel::e, 0, 0, model.space);
    EvolveReport rep;
    StepperSettings st;
    auto psi = evolve_unitary(psi0, model, 0.0, t_pi, st, &rep);
    // P_g(t) = sin^2(Omega t / 2): full inversion at the pi time
    CHECK(pop_g10(psi) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.norm_drift < 1e-12);
    CHECK(rep.steps > 0);

    auto psi_quarter = evolve_unitary(psi0, model, 0.0, 0.5 * t_pi, st);
    CHECK(pop_g10(psi_quarter) == doctest::Approx(0.5).epsilon(1e-9));

    auto psi_full = evolve_unitary(psi0, model, 0.0, 2.0 * t_pi, st);
    CHECK(pop_g10(psi_full) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("detuned Rabi oscillation") {
    SystemParams p;
    const double omr = std::sqrt(2.0) * p.omega0; // generalized Rabi at Delta=Omega
    const double t1 = pi / omr;
    auto model = rabi_model(p.omega0, t1);
    auto psi0 = basis_state(AtomLevel::e, 0, 0, model.space);
    StepperSettings st;
    auto psi = evolve_unitary(psi0, model, 0.0, t1, st);
    // P_g(t) = (Omega/Omega_R)^2 sin^2(Omega_R t/2) -> 1/2 at t = pi/Omega_R
    CHECK(pop_g10(psi) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("adaptive stepper reproduces the fixed-step result") {
    SystemParams p;
    const double t_pi = pi / p.omega0;
    auto model = rabi_model(0.0, t_pi);
    auto psi0 = basis_state(AtomLevel::e, 0, 0, model.space);
    StepperSettings st;
    st.method = StepperSettings::Method::adaptive;
    st.tol_rel = 1e-10;
    auto psi = evolve_unitary(psi0, model, 0.0, 0.5 * t_pi, st);
    CHECK(pop_g10(psi) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("density engine agrees with the pure-state engine") {
    SystemParams p;
    const double t1 = 0.35 * pi / p.omega0;
    auto model = rabi_model(0.0, t1);
    auto psi0 = basis_state(AtomLevel::e, 0, 0, model.space);
    StepperSettings st;
    auto psi = evolve_unitary(psi0, model, 0.0, t1, st);

    EvolveReport rep;
    auto rho = evolve_density(density_from_state(psi0), model, 0.0, t1, st, &rep);
    CHECK(atom_population(rho, AtomLevel::g) ==
          doctest::Approx(pop_g10(psi)).epsilon(1e-8));
    CHECK(rep.trace_drift < 1e-12);
    CHECK(rep.min_eigenvalue > -1e-12);
}

TEST_CASE("free decay of a Fock state") {
    SystemParams p;
    p.n_th_a = 0.0;
    p.n_th_b = 0.0;
    FockSpaceConfig sp{4, 0};
    const double t1 = 1.0 / p.kappa_a;
    auto model = build_model(flat_schedule(0.0, 0.0, t1), p, sp);
    model.omega_override = 0.0;

    auto rho0 = compose_initial_state(AtomLevel::g,
                                      make_field_state(FieldSpec::fock(3), sp.n_max_a),
                                      make_field_state(FieldSpec::vacuum(), sp.n_max_b),
                                      sp);
    StepperSettings st;
    auto rho = evolve_density(rho0, model, 0.0, t1, st);
    auto na = build_mode_operator(Mode::a, ModeOp::number, sp);
    // <n>(t) = n0 exp(-kappa t)
    CHECK(expectation(na, rho).real() ==
          doctest::Approx(3.0 * std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("damped mode equilibrates to the bath occupation") {
    SystemParams p;
    FockSpaceConfig sp{13, 0}; // single thermal mode, bath n_th = 1
    const double t1 = 5.0 / p.kappa_a;
    auto model = build_model(flat_schedule(0.0, 0.0, t1), p, sp);
    model.omega_override = 0.0;

    auto rho0 = compose_initial_state(AtomLevel::g,
                                      make_field_state(FieldSpec::vacuum(), sp.n_max_a),
                                      make_field_state(FieldSpec::vacuum(), sp.n_max_b),
                                      sp);
    StepperSettings st;
    st.dt = 2e-7; // pure dissipation; no fast phases in this run
    EvolveReport rep;
    auto rho = evolve_density(rho0, model, 0.0, t1, st, &rep);
    auto na = build_mode_operator(Mode::a, ModeOp::number, sp);
    const double n_final = expectation(na, rho).real();
    // analytic relaxation: n(t) = n_th (1 - exp(-kappa t))
    CHECK(std::abs(n_final - 1.0) < 0.01);
    CHECK(n_final ==
          doctest::Approx(1.0 - std::exp(-5.0)).epsilon(2e-3));
    CHECK(rep.trace_drift < 1e-8);
    CHECK(rep.min_eigenvalue >= -1e-8);

    // detailed balance: stationary distribution is geometric with ratio
    // n_th/(1+n_th) = 1/2
    auto dist = photon_distribution(rho, Mode::a);
    for (int n = 0; n <= 2; ++n)
        CHECK(dist[n + 1] / dist[n] == doctest::Approx(0.5).epsilon(2e-2));
}

TEST_CASE("diagonal phases and dissipation split exactly outside the window") {
    SystemParams p;
    p.n_th_a = 0.0;
    p.n_th_b = 0.0;
    FockSpaceConfig sp{0, 1};
    // window far outside the transit: coupling is identically zero there
    const double t0 = 1e-3, t1 = 1.5e-3, T = t1 - t0;
    REQUIRE(t0 > p.transit_half_time());
    auto model = build_model(flat_schedule(0.0, t0, t1), p, sp);

    const int i0 = basis_index({0, 0, 0}, sp);
    const int i1 = basis_index({0, 0, 1}, sp);
    Mat r0 = Mat::Zero(sp.dim(), sp.dim());
    r0(i0, i0) = r0(i1, i1) = 0.5;
    r0(i0, i1) = r0(i1, i0) = 0.5;

    StepperSettings st;
    auto rho = evolve_density({r0, sp}, model, t0, t1, st);

    // coherence: rho01(T) = 1/2 exp(-kappa_b T / 2) exp(-i delta T)
    const cplx expect = 0.5 * std::exp(-0.5 * p.kappa_b * T) *
                        std::exp(cplx(0.0, -p.delta * T));
    CHECK(std::abs(rho.elements(i0, i1) - expect) < 1e-9);
    // population decay: <n_b> = exp(-kappa_b T) / 2
    CHECK(rho.elements(i1, i1).real() ==
          doctest::Approx(0.5 * std::exp(-p.kappa_b * T)).epsilon(1e-9));
}

TEST_CASE("closed-system transit conserves the excitation number") {
    SystemParams p;
    FockSpaceConfig sp{2, 2};
    const double tc = p.transit_half_time();
    auto model = build_model(flat_schedule(khz(65.0), -tc, tc), p, sp,
                             /*relaxation=*/false);
    auto rho0 = density_from_state(basis_state(AtomLevel::e, 0, 0, sp));
    auto N = total_excitation_operator(sp);

    StepperSettings st;
    EvolveReport rep;
    auto rho = evolve_density(rho0, model, -tc, tc, st, &rep);
    const double drift =
        std::abs(expectation(N, rho).real() - expectation(N, rho0).real());
    CHECK(drift < 1e-9);
    CHECK(rep.trace_drift < 1e-10);
    CHECK(atom_population(rho, AtomLevel::g) + atom_population(rho, AtomLevel::e) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("sector engine matches the full-space engines across a transit") {
    SystemParams p;
    FockSpaceConfig sp{2, 2};
    const double tc = p.transit_half_time();
    auto closed = build_model(flat_schedule(khz(65.0), -tc, tc), p, sp,
                              /*relaxation=*/false);
    const BasisLabel start{1, 0, 1}; // |e,0,1>, sector N = 2
    StepperSettings st;

    auto run = evolve_sector(start, closed, -tc, tc, st);
    CHECK(run.norm_drift < 1e-8);

    auto psi = evolve_unitary(basis_state(AtomLevel::e, 0, 1, sp), closed, -tc, tc, st);
    for (int i = 0; i < run.basis.dim(); ++i) {
        const double p_sector = std::norm(run.amplitudes(i));
        const double p_full =
            std::norm(psi.amplitudes(basis_index(run.basis.labels[i], sp)));
        CHECK(p_sector == doctest::Approx(p_full).epsilon(1e-10));
    }

    auto rho = evolve_density(density_from_state(basis_state(AtomLevel::e, 0, 1, sp)),
                              closed, -tc, tc, st);
    CHECK(sector_atom_population(run, AtomLevel::g) ==
          doctest::Approx(atom_population(rho, AtomLevel::g)).epsilon(1e-6));
}

TEST_CASE("sector helpers") {
    FockSpaceConfig sp{2, 2};
    auto basis = sector_basis(2, sp);
    // sector N=2 in a 2x2 space: (g,0,2),(g,1,1),(g,2,0),(e,0,1),(e,1,0)
    CHECK(basis.dim() == 5);
    CHECK(basis.index_of({0, 0, 2}) >= 0);
    CHECK(basis.index_of({1, 1, 1}) == -1);

    SystemParams p;
    const double tc = p.transit_half_time();
    auto closed = build_model(flat_schedule(0.0, -tc, tc), p, sp, false);
    StepperSettings st;
    auto run = evolve_sector({1, 0, 1}, closed, -tc, -tc + 1e-5, st);
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(sp.dim_a(), sp.dim_b());
    sector_accumulate_joint(run, 1.0, std::nullopt, joint);
    CHECK(joint.sum() == doctest::Approx(1.0).epsilon(1e-10));
    const double pg = sector_atom_population(run, AtomLevel::g);
    const double pe = sector_atom_population(run, AtomLevel::e);
    CHECK(pg + pe == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sector_population(run, {1, 0, 1}) <= 1.0);
}

TEST_CASE("step records expose the evolution trace") {
    SystemParams p;
    const double t_pi = pi / p.omega0;
    auto model = rabi_model(0.0, t_pi);
    auto rho0 = density_from_state(basis_state(AtomLevel::e, 0, 0, model.space));
    StepperSettings st;
    std::vector<StepRecord> recs;
    evolve_density(rho0, model, 0.0, t_pi, st, nullptr, &recs);
    REQUIRE(!recs.empty());
    for (size_t i = 1; i < recs.size(); ++i) CHECK(recs[i].t > recs[i - 1].t);
    CHECK(recs.back().t == doctest::Approx(t_pi).epsilon(1e-12));
    for (const auto& r : recs) {
        CHECK(r.p_e + r.p_g == doctest::Approx(r.trace).epsilon(1e-9));
        CHECK(r.min_eig_estimate > -1e-9);
    }
    CHECK(recs.back().p_g == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("engine preconditions") {
    SystemParams p;
    FockSpaceConfig sp{1, 1};
    auto open_model = build_model(flat_schedule(0.0, 0.0, 1e-5), p, sp);
    CHECK_THROWS_AS(evolve_sector({1, 0, 0}, open_model, 0.0, 1e-5, StepperSettings{}),
                    ConfigError);

    auto closed = build_model(flat_schedule(0.0, 0.0, 1e-5), p, sp, false);
    CHECK_THROWS_AS(evolve_sector({1, 2, 1}, closed, 0.0, 1e-5, StepperSettings{}),
                    ConfigError);

    FockSpaceConfig other{3, 3};
    auto psi_other = basis_state(AtomLevel::g, 0, 0, other);
    CHECK_THROWS_AS(evolve_unitary(psi_other, closed, 0.0, 1e-5, StepperSettings{}),
                    ConfigError);
}
