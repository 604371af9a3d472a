#include "ramansim/analytic.hpp"

#include <cmath>
#include <iostream>
#include <string>

namespace ramansim {

namespace {

void check_detunings(double Delta, double delta) {
    if (Delta == 0.0)
        throw NumericsError("light shift singular at Delta = 0");
    if (Delta + delta == 0.0)
        throw NumericsError("light shift singular at Delta = -delta");
}

} // namespace

double raman_coupling(int n, double Delta, double delta, double Omega) {
    if (n < 0) throw ConfigError("raman_coupling: n must be >= 0");
    check_detunings(Delta, delta);
    return std::pow(Omega, 3) * std::sqrt(2.0 * n) / (8.0 * Delta * (Delta + delta));
}

double light_shift(AtomLevel level, int n_a, int n_b, double Delta, double delta,
                   double Omega) {
    check_detunings(Delta, delta);
    const double pref = Omega * Omega / 4.0;
    if (level == AtomLevel::e)
        return pref * ((n_a + 1.0) / Delta + (n_b + 1.0) / (Delta + delta));
    return -pref * (n_a / Delta + n_b / (Delta + delta));
}

double shifted_raman_resonance(int n, double Omega, double delta) {
    if (n < 1) throw ConfigError("shifted_raman_resonance: n must be >= 1");
    // Dressed degeneracy of |e,0,n> and |g,2,n-1>:
    //   f(Delta) = Delta - delta + shift(e,0,n) - shift(g,2,n-1) = 0
    auto f = [&](double Delta) {
        return Delta - delta + light_shift(AtomLevel::e, 0, n, Delta, delta, Omega) -
               light_shift(AtomLevel::g, 2, n - 1, Delta, delta, Omega);
    };
    // f is positive at both ends of (0, delta]: the 1/Delta divergence wins
    // near 0 and f(delta) = D(delta) > 0.  The physical root (the one that
    // tends to delta as Omega -> 0) is the upper edge of the negative pocket
    // in between; march down from delta until f turns negative to bracket it.
    double lo = 1e-6 * delta;
    double hi = delta;
    if (f(hi) < 0.0)
        throw NumericsError("shifted_raman_resonance: no root in (0, delta]");
    bool bracketed = false;
    for (double probe = hi * 0.95; probe > lo; probe *= 0.95) {
        if (f(probe) < 0.0) {
            lo = probe;
            bracketed = true;
            break;
        }
        hi = probe;
    }
    if (!bracketed)
        throw NumericsError("shifted_raman_resonance: no root in (0, delta]");
    for (int it = 0; it < 200 && (hi - lo) > 1e-9 * delta; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double ramsey_phase(int n_a, int n_b, const DetuningSchedule& schedule_after_freeze,
                    const SystemParams& params) {
    validate(schedule_after_freeze);
    // Simpson integration of -shift(g) over the schedule coverage, segment by
    // segment so the piecewise detuning never straddles a panel.
    double phi = 0.0;
    for (const auto& seg : schedule_after_freeze.segments) {
        const double len = seg.t_end - seg.t_start;
        int panels = std::max(16, static_cast<int>(std::ceil(len / 5e-8)));
        panels += panels % 2; // Simpson needs an even panel count
        const double h = len / panels;
        auto integrand = [&](double t) {
            const double om = coupling_at(t, params);
            if (om == 0.0) return 0.0;
            return -light_shift(AtomLevel::g, n_a, n_b, seg.value, params.delta, om);
        };
        double sum = integrand(seg.t_start) + integrand(seg.t_end);
        for (int k = 1; k < panels; ++k)
            sum += integrand(seg.t_start + k * h) * (k % 2 ? 4.0 : 2.0);
        phi += sum * h / 3.0;
    }
    return phi;
}

double raman_envelope_time(const SystemParams& params) {
    return params.waist * std::sqrt(units::pi / 3.0) / params.velocity;
}

double perturbative_transfer(int n, const SystemParams& params, double Delta) {
    if (n == 0) return 0.0;
    if (Delta <= 0.0 || Delta > params.delta)
        throw ConfigError("perturbative_transfer: Delta must lie in (0, delta]");
    if (Delta < 2.0 * params.omega0)
        std::cerr << "warning: perturbative_transfer outside its regime "
                     "(Delta < 2 Omega)\n";
    const double theta = raman_coupling(n, Delta, params.delta, params.omega0) *
                         raman_envelope_time(params);
    const double s = std::sin(theta / 2.0);
    return s * s;
}

} // namespace ramansim
