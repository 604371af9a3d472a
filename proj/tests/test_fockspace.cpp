#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ramansim/fockspace.hpp"

using namespace ramansim;

TEST_CASE("basis indexing follows the stated ordering") {
    FockSpaceConfig sp{1, 1};
    CHECK(basis_index(AtomLevel::g, 0, 0, sp) == 0);
    CHECK(basis_index(AtomLevel::e, 0, 0, sp) == 4);
    CHECK(sp.dim() == 8);

    FockSpaceConfig any{3, 5};
    CHECK(basis_index(AtomLevel::g, 0, 0, any) == 0);
}

TEST_CASE("basis indexing is a bijection on a small space") {
    FockSpaceConfig sp{2, 3};
    std::vector<bool> seen(sp.dim(), false);
    for (int at = 0; at <= 1; ++at)
        for (int na = 0; na <= sp.n_max_a; ++na)
            for (int nb = 0; nb <= sp.n_max_b; ++nb) {
                const int idx = basis_index({at, na, nb}, sp);
                REQUIRE(idx >= 0);
                REQUIRE(idx < sp.dim());
                CHECK_FALSE(seen[idx]);
                seen[idx] = true;
                const BasisLabel lab = basis_label(idx, sp);
                CHECK(lab == BasisLabel{at, na, nb});
            }
    for (bool s : seen) CHECK(s);
}

TEST_CASE("out-of-range labels are rejected") {
    FockSpaceConfig sp{2, 3};
    CHECK_THROWS_AS(basis_index(AtomLevel::g, 3, 0, sp), ConfigError);
    CHECK_THROWS_AS(basis_index(AtomLevel::g, 0, 4, sp), ConfigError);
    CHECK_THROWS_AS(basis_label(sp.dim(), sp), ConfigError);
}

TEST_CASE("mode operators carry the bosonic matrix elements") {
    FockSpaceConfig sp{3, 3};
    auto a = build_mode_operator(Mode::a, ModeOp::annihilate, sp);
    auto adag = build_mode_operator(Mode::a, ModeOp::create, sp);
    auto na = build_mode_operator(Mode::a, ModeOp::number, sp);

    // <1| a |2> = sqrt(2) on mode a
    const int from = basis_index(AtomLevel::g, 2, 0, sp);
    const int to = basis_index(AtomLevel::g, 1, 0, sp);
    CHECK(std::abs(a.elements.coeff(to, from) - cplx(std::sqrt(2.0))) < 1e-15);

    // adjoint(annihilate) = create exactly
    SpMat diff = SpMat(a.elements.adjoint()) - adag.elements;
    CHECK(Mat(diff).cwiseAbs().maxCoeff() == 0.0);

    // number on |g,1,3>, mode b -> eigenvalue 3
    auto nb = build_mode_operator(Mode::b, ModeOp::number, sp);
    auto psi = basis_state(AtomLevel::g, 1, 3, sp);
    CHECK(expectation(nb, psi).real() == doctest::Approx(3.0).epsilon(1e-14));

    // number = create * annihilate
    SpMat nfroma = (adag.elements * a.elements) - na.elements;
    CHECK(Mat(nfroma).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("[a, adag] = identity away from the truncation boundary") {
    FockSpaceConfig sp{4, 2};
    auto a = build_mode_operator(Mode::a, ModeOp::annihilate, sp);
    auto adag = build_mode_operator(Mode::a, ModeOp::create, sp);
    Mat comm = Mat(a.elements * adag.elements - adag.elements * a.elements);
    for (int i = 0; i < sp.dim(); ++i) {
        const BasisLabel lab = basis_label(i, sp);
        if (lab.n_a == sp.n_max_a) continue; // truncation row excluded
        CHECK(std::abs(comm(i, i) - cplx(1.0)) < 1e-14);
    }
}

TEST_CASE("atomic operators") {
    FockSpaceConfig sp{2, 2};
    auto lower = build_atomic_operator(AtomOp::lower, sp);
    auto raise = build_atomic_operator(AtomOp::raise, sp);
    auto pe = build_atomic_operator(AtomOp::project_e, sp);
    auto pg = build_atomic_operator(AtomOp::project_g, sp);

    // lower |e,0,0> = |g,0,0>; lower |g,na,nb> = 0
    auto e00 = basis_state(AtomLevel::e, 0, 0, sp);
    Vec lowered = lower.elements * e00.amplitudes;
    CHECK(std::abs(lowered(basis_index(AtomLevel::g, 0, 0, sp)) - cplx(1.0)) < 1e-15);
    CHECK(lowered.norm() == doctest::Approx(1.0).epsilon(1e-14));
    auto g12 = basis_state(AtomLevel::g, 1, 2, sp);
    CHECK((lower.elements * g12.amplitudes).norm() == 0.0);

    // raise = adjoint(lower)
    SpMat diff = SpMat(lower.elements.adjoint()) - raise.elements;
    CHECK(Mat(diff).cwiseAbs().maxCoeff() == 0.0);

    // project_e + project_g = identity
    Mat sum = Mat(pe.elements + pg.elements);
    CHECK((sum - Mat::Identity(sp.dim(), sp.dim())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("field state factory: coherent") {
    // coherent(alpha = 0) is the vacuum
    auto vac = make_field_state(FieldSpec{FieldSpec::Kind::coherent, 0.0}, 3);
    CHECK(std::abs(vac.elements(0, 0) - cplx(1.0)) < 1e-15);
    CHECK(std::abs(vac.elements.trace() - cplx(1.0)) < 1e-15);

    // coherent |alpha|^2 = 6: Poisson weights, p(0) = exp(-6).  The default
    // truncation is the smallest cut that keeps the Poisson tail under the
    // 1e-4 deficit bound (one above the mean + 4*sqrt(mean) heuristic here).
    const int n_max = default_coherent_n_max(6.0);
    CHECK(n_max == 17);
    auto coh = make_field_state(FieldSpec::coherent_mean(6.0), n_max);
    CHECK(std::abs(coh.elements.trace() - cplx(1.0)) < 1e-12);
    CHECK(coh.elements(0, 0).real() == doctest::Approx(std::exp(-6.0)).epsilon(1e-3));
    double mean = 0.0;
    for (int n = 0; n <= n_max; ++n) mean += n * coh.elements(n, n).real();
    CHECK(mean == doctest::Approx(6.0).epsilon(2e-4));

    // default for the 11.2-photon source also honours the deficit bound
    CHECK(default_coherent_n_max(11.2) == 26);

    // truncation deficit above 1e-4 is rejected
    CHECK_THROWS_AS(make_field_state(FieldSpec::coherent_mean(6.0), 8), ConfigError);
}

TEST_CASE("field state factory: thermal") {
    // geometric law p(n) = nbar^n/(1+nbar)^(n+1); nbar=1 -> p(0)=1/2, p(1)=1/4
    const int n_max = default_thermal_n_max(1.0);
    CHECK(n_max == 13);
    auto th = make_field_state(FieldSpec::thermal(1.0), n_max);
    CHECK(std::abs(th.elements.trace() - cplx(1.0)) < 1e-12);
    CHECK(th.elements(0, 0).real() == doctest::Approx(0.5).epsilon(2e-4));
    CHECK(th.elements(1, 1).real() == doctest::Approx(0.25).epsilon(2e-4));
    // ratio p(0)/p(1) = 2 exactly even after renormalization
    CHECK(th.elements(0, 0).real() / th.elements(1, 1).real() ==
          doctest::Approx(2.0).epsilon(1e-12));
    // off-diagonals vanish
    CHECK(std::abs(th.elements(0, 1)) == 0.0);

    CHECK_THROWS_AS(make_field_state(FieldSpec::thermal(1.0), 8), ConfigError);
}

TEST_CASE("composition of initial states") {
    FockSpaceConfig sp{2, 6};
    auto vac_a = make_field_state(FieldSpec::vacuum(), sp.n_max_a);
    auto fock6 = make_field_state(FieldSpec::fock(6), sp.n_max_b);

    auto rho = compose_initial_state(AtomLevel::e, vac_a, fock6, sp);
    CHECK(std::abs(rho.elements.trace() - cplx(1.0)) < 1e-14);
    const int idx = basis_index(AtomLevel::e, 0, 6, sp);
    CHECK(rho.elements(idx, idx).real() == doctest::Approx(1.0).epsilon(1e-14));
    validate_density(rho);

    // (e, vacuum, vacuum) -> pure |e,0,0>
    auto vb = make_field_state(FieldSpec::vacuum(), sp.n_max_b);
    auto rho0 = compose_initial_state(AtomLevel::e, vac_a, vb, sp);
    const int i0 = basis_index(AtomLevel::e, 0, 0, sp);
    CHECK(rho0.elements(i0, i0).real() == doctest::Approx(1.0).epsilon(1e-14));

    // mismatched truncation is rejected
    auto wrong = make_field_state(FieldSpec::vacuum(), 3);
    CHECK_THROWS_AS(compose_initial_state(AtomLevel::e, wrong, fock6, sp), ConfigError);
}

TEST_CASE("photon distribution") {
    FockSpaceConfig sp{3, 6};
    auto rho = compose_initial_state(AtomLevel::e,
                                     make_field_state(FieldSpec::fock(2), sp.n_max_a),
                                     make_field_state(FieldSpec::fock(5), sp.n_max_b), sp);
    auto pa = photon_distribution(rho, Mode::a);
    auto pb = photon_distribution(rho, Mode::b);
    CHECK(pa[2] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pb[5] == doctest::Approx(1.0).epsilon(1e-14));

    // thermal factor stays geometric in the composite
    FockSpaceConfig sp2{13, 2};
    auto rho2 = compose_initial_state(AtomLevel::g,
                                      make_field_state(FieldSpec::thermal(1.0), 13),
                                      make_field_state(FieldSpec::vacuum(), 2), sp2);
    auto p2 = photon_distribution(rho2, Mode::a);
    double sum = 0.0;
    for (size_t n = 0; n + 1 < p2.size(); ++n) {
        CHECK(p2[n] / p2[n + 1] == doctest::Approx(2.0).epsilon(1e-10));
        sum += p2[n];
    }
    sum += p2.back();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("conditional field state") {
    FockSpaceConfig sp{2, 6};
    // pure |g,2,5>, condition on g -> (1.0, pure |2,5>)
    auto rho = density_from_state(basis_state(AtomLevel::g, 2, 5, sp));
    auto cond = conditional_field_state(rho, AtomLevel::g);
    CHECK(cond.probability == doctest::Approx(1.0).epsilon(1e-12));
    const int f25 = 2 * sp.dim_b() + 5;
    CHECK(cond.fields(f25, f25).real() == doctest::Approx(1.0).epsilon(1e-12));

    // pure |e,0,6>, condition on g -> degenerate-condition error
    auto rho_e = density_from_state(basis_state(AtomLevel::e, 0, 6, sp));
    CHECK_THROWS_AS(conditional_field_state(rho_e, AtomLevel::g), NumericsError);

    // (|e,0,6> + |g,2,5>)/sqrt(2), condition on g -> (0.5, pure |2,5>)
    StateVector sup{Vec::Zero(sp.dim()), sp};
    sup.amplitudes(basis_index(AtomLevel::e, 0, 6, sp)) = 1.0 / std::sqrt(2.0);
    sup.amplitudes(basis_index(AtomLevel::g, 2, 5, sp)) = 1.0 / std::sqrt(2.0);
    auto cond2 = conditional_field_state(density_from_state(sup), AtomLevel::g);
    CHECK(cond2.probability == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cond2.fields(f25, f25).real() == doctest::Approx(1.0).epsilon(1e-12));

    auto joint = joint_photon_distribution(cond2);
    CHECK(joint(2, 5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expectation values") {
    FockSpaceConfig sp{2, 6};
    auto rho = density_from_state(basis_state(AtomLevel::e, 0, 6, sp));
    CHECK(expectation(identity_operator(sp), rho).real() ==
          doctest::Approx(1.0).epsilon(1e-14));

    auto na = build_mode_operator(Mode::a, ModeOp::number, sp);
    auto rho_g1 = density_from_state(basis_state(AtomLevel::g, 1, 3, sp));
    CHECK(expectation(na, rho_g1).real() == doctest::Approx(1.0).epsilon(1e-14));

    // total excitation N on |e,0,6> -> 7
    auto N = total_excitation_operator(sp);
    CHECK(expectation(N, rho).real() == doctest::Approx(7.0).epsilon(1e-14));

    FockSpaceConfig other{1, 1};
    auto id_other = identity_operator(other);
    CHECK_THROWS_AS(expectation(id_other, rho), ConfigError);
}

TEST_CASE("density invariants hold for constructed states") {
    FockSpaceConfig sp{4, 13};
    auto rho = compose_initial_state(AtomLevel::e,
                                     make_field_state(FieldSpec::vacuum(), sp.n_max_a),
                                     make_field_state(FieldSpec::thermal(1.0), sp.n_max_b),
                                     sp);
    validate_density(rho);
    CHECK(min_eigenvalue(rho) >= -1e-12);
    CHECK(atom_population(rho, AtomLevel::e) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(atom_population(rho, AtomLevel::g) == doctest::Approx(0.0).epsilon(1e-12));
}
