#include "ramansim/model.hpp"

#include <cmath>
#include <string>

namespace ramansim {

void validate(const SystemParams& params) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw ConfigError(std::string(name) + " must be strictly positive");
    };
    positive(params.omega0, "omega0");
    positive(params.delta, "delta");
    positive(params.waist, "waist");
    positive(params.velocity, "velocity");
    positive(params.kappa_a, "kappa_a");
    positive(params.kappa_b, "kappa_b");
    if (params.n_th_a < 0.0 || params.n_th_b < 0.0)
        throw ConfigError("n_th must be >= 0");
}

double coupling_at(double t, const SystemParams& params) {
    const double x = params.velocity * t;
    if (std::abs(x) > 3.0 * params.waist) return 0.0;
    const double u = x / params.waist;
    return params.omega0 * std::exp(-u * u);
}

DetuningSchedule flat_schedule(double detuning, double t0, double t1) {
    return {{{t0, t1, detuning}}};
}

DetuningSchedule switched_schedule(double before, double after, double t_switch,
                                   double t0, double t1) {
    if (t_switch <= t0 || t_switch >= t1)
        return flat_schedule(t_switch <= t0 ? after : before, t0, t1);
    return {{{t0, t_switch, before}, {t_switch, t1, after}}};
}

void validate(const DetuningSchedule& schedule) {
    if (schedule.segments.empty())
        throw ConfigError("detuning schedule has no segments");
    for (size_t i = 0; i < schedule.segments.size(); ++i) {
        const auto& s = schedule.segments[i];
        if (!(s.t_end > s.t_start))
            throw ConfigError("detuning schedule segment has non-positive length");
        if (i > 0 && schedule.segments[i - 1].t_end != s.t_start)
            throw ConfigError("detuning schedule segments must be contiguous");
    }
}

double detuning_at(double t, const DetuningSchedule& schedule) {
    // Closed-open convention: a switch time belongs to the later segment.
    for (const auto& s : schedule.segments)
        if (t >= s.t_start && t < s.t_end) return s.value;
    if (t == schedule.segments.back().t_end) return schedule.segments.back().value;
    throw ConfigError("time " + std::to_string(t) + " outside detuning schedule coverage");
}

namespace {

SpMat coupling_pattern(const FockSpaceConfig& space) {
    // a sigma+ + b sigma+ plus Hermitian conjugates, unit prefactor.
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(4 * space.dim());
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        if (lab.atom != 0) continue;
        // |g, n_a, n_b> -> |e, n_a - 1, n_b>  (absorb from a)
        if (lab.n_a > 0) {
            const int j = basis_index({1, lab.n_a - 1, lab.n_b}, space);
            const double v = std::sqrt(double(lab.n_a));
            trips.emplace_back(j, i, v);
            trips.emplace_back(i, j, v);
        }
        // |g, n_a, n_b> -> |e, n_a, n_b - 1>  (absorb from b)
        if (lab.n_b > 0) {
            const int j = basis_index({1, lab.n_a, lab.n_b - 1}, space);
            const double v = std::sqrt(double(lab.n_b));
            trips.emplace_back(j, i, v);
            trips.emplace_back(i, j, v);
        }
    }
    SpMat m(space.dim(), space.dim());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

} // namespace

LinearOperator hamiltonian_at(double t, const DetuningSchedule& schedule,
                              const SystemParams& params, const FockSpaceConfig& space) {
    const double det = detuning_at(t, schedule);
    const double om = coupling_at(t, params);
    SpMat h = coupling_pattern(space) * cplx(om / 2.0);
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        const double diag = det * (lab.atom == 1) - params.delta * lab.n_b;
        if (diag != 0.0) h.coeffRef(i, i) += diag;
    }
    h.makeCompressed();
    // Hermitian by construction; symmetrize anyway to guard roundoff.
    SpMat hd = h.adjoint();
    h = (h + hd) * cplx(0.5);
    return {std::move(h), space};
}

std::vector<Dissipator> lindblad_dissipators(const SystemParams& params,
                                             const FockSpaceConfig& space) {
    std::vector<Dissipator> out;
    auto add = [&](Mode mode, ModeOp kind, double rate) {
        if (rate > 0.0) out.push_back({build_mode_operator(mode, kind, space), rate});
    };
    add(Mode::a, ModeOp::annihilate, params.kappa_a * (1.0 + params.n_th_a));
    add(Mode::a, ModeOp::create, params.kappa_a * params.n_th_a);
    add(Mode::b, ModeOp::annihilate, params.kappa_b * (1.0 + params.n_th_b));
    add(Mode::b, ModeOp::create, params.kappa_b * params.n_th_b);
    return out;
}

LinearOperator LindbladModel::hamiltonian(double t) const {
    const double det = detuning_at(t, schedule);
    const double om = omega_at(t);
    SpMat h = coupling * cplx(om / 2.0);
    for (int i = 0; i < space.dim(); ++i) {
        const double diag = det * diag_pe(i) - params.delta * diag_nb(i);
        if (diag != 0.0) h.coeffRef(i, i) += diag;
    }
    h.makeCompressed();
    SpMat hd = h.adjoint();
    h = (h + hd) * cplx(0.5);
    return {std::move(h), space};
}

LindbladModel build_model(const DetuningSchedule& schedule, const SystemParams& params,
                          const FockSpaceConfig& space, bool relaxation) {
    validate(params);
    validate(schedule);
    LindbladModel model;
    model.space = space;
    model.params = params;
    model.schedule = schedule;
    model.relaxation = relaxation;
    model.diag_pe = Eigen::VectorXd::Zero(space.dim());
    model.diag_nb = Eigen::VectorXd::Zero(space.dim());
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        model.diag_pe(i) = lab.atom;
        model.diag_nb(i) = lab.n_b;
    }
    model.coupling = coupling_pattern(space);
    if (relaxation) model.dissipators = lindblad_dissipators(params, space);
    return model;
}

} // namespace ramansim
