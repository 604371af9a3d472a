#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <iostream>
#include <sstream>

#include "ramansim/analytic.hpp"

using namespace ramansim;
using namespace ramansim::units;

TEST_CASE("effective two-photon coupling") {
    SystemParams p;
    // at the bare resonance Delta = delta, n = 6
    CHECK(raman_coupling(6, p.delta, p.delta, p.omega0) ==
          doctest::Approx(hz(1554.6726)).epsilon(1e-6));
    // at the operating point Delta = 2 pi 65 kHz
    CHECK(raman_coupling(6, khz(65.0), p.delta, p.omega0) ==
          doctest::Approx(hz(4060.8618)).epsilon(1e-6));
    // sqrt(2n) scaling
    CHECK(raman_coupling(2, khz(65.0), p.delta, p.omega0) /
              raman_coupling(1, khz(65.0), p.delta, p.omega0) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(raman_coupling(0, khz(65.0), p.delta, p.omega0) == 0.0);
    CHECK_THROWS_AS(raman_coupling(-1, khz(65.0), p.delta, p.omega0), ConfigError);
    CHECK_THROWS_AS(raman_coupling(1, 0.0, p.delta, p.omega0), NumericsError);
    CHECK_THROWS_AS(raman_coupling(1, -p.delta, p.delta, p.omega0), NumericsError);
}

TEST_CASE("light shifts") {
    SystemParams p;
    CHECK(light_shift(AtomLevel::e, 0, 0, khz(65.0), p.delta, p.omega0) ==
          doctest::Approx(hz(12344.7190)).epsilon(1e-6));
    CHECK(light_shift(AtomLevel::g, 1, 6, khz(65.0), p.delta, p.omega0) ==
          doctest::Approx(hz(-27895.2371)).epsilon(1e-6));
    CHECK(light_shift(AtomLevel::g, 0, 6, khz(135.0), p.delta, p.omega0) ==
          doctest::Approx(hz(-13693.9163)).epsilon(1e-6));
    // the bare ground state with empty modes is unshifted
    CHECK(light_shift(AtomLevel::g, 0, 0, khz(65.0), p.delta, p.omega0) == 0.0);
    // linearity in the photon numbers
    const double g01 = light_shift(AtomLevel::g, 0, 1, khz(65.0), p.delta, p.omega0);
    const double g03 = light_shift(AtomLevel::g, 0, 3, khz(65.0), p.delta, p.omega0);
    CHECK(g03 == doctest::Approx(3.0 * g01).epsilon(1e-12));
    // vanishes with the coupling
    CHECK(light_shift(AtomLevel::e, 1, 2, khz(65.0), p.delta, 0.0) == 0.0);
}

TEST_CASE("shift-corrected two-photon resonance") {
    SystemParams p;
    const double r6 = shifted_raman_resonance(6, p.omega0, p.delta);
    CHECK(r6 == doctest::Approx(khz(58.85504)).epsilon(1e-5));
    // paper operating window
    CHECK(to_khz(r6) > 55.0);
    CHECK(to_khz(r6) < 75.0);

    CHECK(shifted_raman_resonance(1, p.omega0, p.delta) ==
          doctest::Approx(khz(105.85500)).epsilon(1e-5));
    CHECK(shifted_raman_resonance(2, p.omega0, p.delta) ==
          doctest::Approx(khz(99.30315)).epsilon(1e-5));
    CHECK(shifted_raman_resonance(3, p.omega0, p.delta) ==
          doctest::Approx(khz(92.07878)).epsilon(1e-5));

    // resonance approaches the bare crossing as the drive weakens
    const double weak = shifted_raman_resonance(6, 0.01 * p.omega0, p.delta);
    CHECK(std::abs(weak - p.delta) / p.delta < 1e-4);

    CHECK_THROWS_AS(shifted_raman_resonance(0, p.omega0, p.delta), ConfigError);
    // a drive too strong for any root in (0, delta] is reported
    CHECK_THROWS_AS(shifted_raman_resonance(200, 10.0 * p.omega0, p.delta),
                    NumericsError);
}

TEST_CASE("Ramsey phase accumulation after the freeze") {
    SystemParams p;
    p.velocity = 170.0;
    const double t_freeze = 5e-6;
    const double t_exit = p.transit_half_time();
    auto sched = flat_schedule(khz(135.0), t_freeze, t_exit);

    const double phi00 = ramsey_phase(0, 0, sched, p);
    CHECK(phi00 == 0.0);

    const double phi06 = ramsey_phase(0, 6, sched, p);
    const double phi16 = ramsey_phase(1, 6, sched, p);
    const double phi25 = ramsey_phase(2, 5, sched, p);

    // one extra photon in mode a advances the phase by I/Delta'
    CHECK(phi16 - phi06 == doctest::Approx(0.48005123).epsilon(1e-5));
    // two-photon signature ratio: 2 - Delta'/(Delta'+delta)
    CHECK((phi25 - phi06) / (phi16 - phi06) ==
          doctest::Approx(1.486692).epsilon(1e-5));
    CHECK((phi25 - phi06) / (phi16 - phi06) ==
          doctest::Approx(2.0 - 135.0 / (135.0 + 128.0)).epsilon(1e-6));

    // phases are positive for g (level pushed down by the drive)
    CHECK(phi06 > 0.0);
}

TEST_CASE("transit envelope time for the cubed coupling") {
    SystemParams p;
    CHECK(raman_envelope_time(p) == doctest::Approx(3.06998012e-05).epsilon(1e-8));
    p.velocity = 170.0;
    CHECK(raman_envelope_time(p) == doctest::Approx(3.61174132e-05).epsilon(1e-8));
}

TEST_CASE("perturbative transfer estimate") {
    SystemParams p;
    CHECK(perturbative_transfer(0, p, khz(65.0)) == 0.0);

    // n=1 at its shifted resonance, v = 200 m/s
    CHECK(perturbative_transfer(1, p, khz(105.85500)) ==
          doctest::Approx(0.0065513).epsilon(1e-4));

    // n=6 at its shifted resonance, v = 170 m/s (regime warning expected:
    // Delta < 2 Omega there)
    SystemParams slow = p;
    slow.velocity = 170.0;
    std::ostringstream sink;
    auto* old = std::cerr.rdbuf(sink.rdbuf());
    const double t6 = perturbative_transfer(6, slow, khz(58.85504));
    std::cerr.rdbuf(old);
    CHECK(t6 == doctest::Approx(0.251747).epsilon(1e-4));
    CHECK(sink.str().find("regime") != std::string::npos);

    CHECK_THROWS_AS(perturbative_transfer(1, p, -khz(10.0)), ConfigError);
    CHECK_THROWS_AS(perturbative_transfer(1, p, khz(300.0)), ConfigError);
}
