#include "ramansim/evolve.hpp"

#include <algorithm>
#include <cmath>

namespace ramansim {

namespace {

struct MeshInterval {
    double t0;
    double t1;
    bool inside; // overlaps the coupling window (or constant-coupling mode)
};

// Split [t0, t1] at detuning switches and at the Gaussian cutoff so every
// interval has smooth H(t) and a well-defined step size.
std::vector<MeshInterval> build_mesh(const LindbladModel& model, double t0, double t1) {
    if (!(t1 > t0)) throw ConfigError("evolve: t1 must exceed t0");
    std::vector<double> pts{t0, t1};
    for (const auto& s : model.schedule.segments)
        if (s.t_start > t0 && s.t_start < t1) pts.push_back(s.t_start);
    const double tc = model.params.transit_half_time();
    if (!model.omega_override) {
        if (-tc > t0 && -tc < t1) pts.push_back(-tc);
        if (tc > t0 && tc < t1) pts.push_back(tc);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<MeshInterval> mesh;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const double mid = 0.5 * (pts[i] + pts[i + 1]);
        const bool inside = model.omega_override.has_value() ||
                            (mid >= -tc && mid <= tc);
        mesh.push_back({pts[i], pts[i + 1], inside});
    }
    return mesh;
}

// Generic RK4 driver over Eigen states (VectorXcd or MatrixXcd).
//
// Inside the coupling window the full right-hand side runs at settings.dt
// (or under step-doubling control in adaptive mode).  Outside the window the
// Hamiltonian is purely diagonal and commutes with every cavity dissipation
// channel (a and b pick up only global phases under the diagonal rotation),
// so the two generators are split exactly: the dissipative part alone is
// integrated at settings.dt_outside and the accumulated diagonal phases are
// applied in closed form at the end of the interval.  With no dissipation the
// outside intervals reduce to a single exact phase rotation.  PostStep runs
// after each accepted step; it only reads diagonal observables, which the
// deferred phase rotation leaves untouched.
template <class State, class RhsIn, class RhsOut, class Phase, class PostStep>
long integrate(State& y, const LindbladModel& model, double t0, double t1,
               const StepperSettings& settings, RhsIn&& rhs_inside,
               bool dissipative_outside, RhsOut&& rhs_outside, Phase&& phase,
               PostStep&& post) {
    State k1 = y, k2 = y, k3 = y, k4 = y, tmp = y;
    // t_cap clamps the t + h stage: accumulated rounding on the last step of
    // an interval must not probe the schedule beyond its coverage.
    auto make_rk4 = [&](auto& rhs) {
        return [&](double t, double h, double t_cap, const State& in, State& out) {
            rhs(t, in, k1);
            tmp = in + (h / 2.0) * k1;
            rhs(t + h / 2.0, tmp, k2);
            tmp = in + (h / 2.0) * k2;
            rhs(t + h / 2.0, tmp, k3);
            tmp = in + h * k3;
            rhs(std::min(t + h, t_cap), tmp, k4);
            out = in + (h / 6.0) * k1 + (h / 3.0) * k2 + (h / 3.0) * k3 +
                  (h / 6.0) * k4;
        };
    };
    auto rk4 = make_rk4(rhs_inside);
    auto rk4_out = make_rk4(rhs_outside);

    long steps = 0;
    State ynext = y;
    const bool adaptive = settings.method == StepperSettings::Method::adaptive;
    State yhalf = adaptive ? y : State();
    State yfull = adaptive ? y : State();

    for (const auto& iv : build_mesh(model, t0, t1)) {
        const double len = iv.t1 - iv.t0;
        if (!iv.inside) {
            if (dissipative_outside) {
                const long n = std::max<long>(
                    1, static_cast<long>(std::ceil(len / settings.dt_outside)));
                const double h = len / double(n);
                double t = iv.t0;
                for (long k = 0; k < n; ++k) {
                    rk4_out(t, h, iv.t1, y, ynext);
                    y.swap(ynext);
                    t = (k + 1 == n) ? iv.t1 : t + h;
                    post(y, t);
                    ++steps;
                }
                phase(y, 0.5 * (iv.t0 + iv.t1), len);
            } else {
                phase(y, 0.5 * (iv.t0 + iv.t1), len);
                post(y, iv.t1);
                ++steps;
            }
            continue;
        }

        if (!adaptive) {
            const long n =
                std::max<long>(1, static_cast<long>(std::ceil(len / settings.dt)));
            const double h = len / double(n);
            double t = iv.t0;
            for (long k = 0; k < n; ++k) {
                rk4(t, h, iv.t1, y, ynext);
                y.swap(ynext);
                t = (k + 1 == n) ? iv.t1 : t + h;
                post(y, t);
                ++steps;
            }
            continue;
        }

        // Step-doubling adaptive control (inside intervals only).
        double h = std::min(settings.dt, len);
        double t = iv.t0;
        while (t < iv.t1 - 1e-18) {
            h = std::min(h, iv.t1 - t);
            if (h < 1e-15)
                throw NumericsError("adaptive integrator: step-size underflow");
            rk4(t, h, iv.t1, y, yfull);
            // same span with two half steps
            rk4(t, h / 2.0, iv.t1, y, yhalf);
            rk4(t + h / 2.0, h / 2.0, iv.t1, yhalf, ynext);
            const double err = (yfull - ynext).cwiseAbs().maxCoeff() / 15.0;
            const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
            if (err <= settings.tol_rel * scale) {
                // Accept with local extrapolation (5th order).
                y = ynext + (ynext - yfull) / 15.0;
                t += h;
                post(y, t);
                ++steps;
                const double grow =
                    (err > 0.0) ? 0.9 * std::pow(settings.tol_rel * scale / err, 0.2)
                                : 5.0;
                h *= std::clamp(grow, 0.2, 5.0);
            } else {
                h *= std::clamp(0.9 * std::pow(settings.tol_rel * scale / err, 0.25),
                                0.1, 0.9);
            }
        }
    }
    return steps;
}

// Diagonal of L^dag L for a dissipator, weighted by its rate.
Eigen::VectorXd weighted_jump_diagonal(const Dissipator& d) {
    const SpMat& L = d.op.elements;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(L.cols());
    for (int k = 0; k < L.outerSize(); ++k)
        for (SpMat::InnerIterator it(L, k); it; ++it)
            q(it.col()) += d.rate * std::norm(it.value());
    return q;
}

// Interaction picture on the static diagonal det(t)*P_e - delta*n_b.  In this
// frame the integrator only sees the slow drive and the dissipators: drive
// elements rotate at det(t) (a exchange) or det(t)+delta (b exchange), far
// below the bare diagonal spread, which keeps fixed-step RK4 in its accurate
// regime on every space size.  The cavity operators a and b pick up only
// global phases under the diagonal rotation, so the dissipators are left
// untouched.
struct FramePhase {
    const DetuningSchedule* schedule;
    double t_ref;
    double delta;

    // integral of det over [t_ref, t]
    double theta(double t) const {
        double th = 0.0;
        for (const auto& s : schedule->segments) {
            const double lo = std::max(t_ref, s.t_start);
            const double hi = std::min(t, s.t_end);
            if (hi > lo) th += s.value * (hi - lo);
        }
        return th;
    }
    // frame angle of basis state i at time t
    double angle(double pe_i, double nb_i, double t) const {
        return pe_i * theta(t) - delta * nb_i * (t - t_ref);
    }
    void factors(double t, cplx& ua, cplx& ub) const {
        const double th = theta(t);
        ua = std::exp(cplx(0.0, -th));
        ub = std::exp(cplx(0.0, -(th + delta * (t - t_ref))));
    }
};

// Drive matrix with per-element rotating phases.  Elements are tagged by
// exchange type and direction; assemble() rewrites the value array in place.
struct PhasedCoupling {
    SpMat mat;                // union sparsity, values rewritten per call
    std::vector<double> base; // bare matrix elements in nnz order
    std::vector<int> tag;     // 0: ua, 1: conj(ua), 2: ub, 3: conj(ub)

    void assemble(cplx ua, cplx ub) {
        const cplx f[4] = {ua, std::conj(ua), ub, std::conj(ub)};
        cplx* v = mat.valuePtr();
        for (size_t k = 0; k < base.size(); ++k) v[k] = base[k] * f[tag[k]];
    }
};

PhasedCoupling phased_coupling(const SpMat& coupling, const Eigen::VectorXd& pe,
                               const Eigen::VectorXd& nb) {
    PhasedCoupling pc;
    pc.mat = coupling;
    pc.mat.makeCompressed();
    pc.base.reserve(pc.mat.nonZeros());
    pc.tag.reserve(pc.mat.nonZeros());
    for (int k = 0; k < pc.mat.outerSize(); ++k)
        for (SpMat::InnerIterator it(pc.mat, k); it; ++it) {
            const int i = static_cast<int>(it.row());
            const int j = static_cast<int>(it.col());
            const double dpe = pe(i) - pe(j);
            const double dnb = nb(i) - nb(j);
            // theta_i - theta_j = dpe*Theta(t) - delta*dnb*(t - t_ref)
            int t;
            if (dnb == 0.0)
                t = (dpe < 0.0) ? 0 : 1;
            else
                t = (dpe < 0.0) ? 2 : 3;
            pc.base.push_back(it.value().real());
            pc.tag.push_back(t);
        }
    return pc;
}

// rho -> W rho W^dag with W = diag(exp(-i*theta_i(t1))): back to the lab frame.
void unframe(Mat& rho, const FramePhase& fp, const Eigen::VectorXd& pe,
             const Eigen::VectorXd& nb, double t1) {
    const int dim = static_cast<int>(pe.size());
    Vec w(dim);
    for (int i = 0; i < dim; ++i)
        w(i) = std::exp(cplx(0.0, -fp.angle(pe(i), nb(i), t1)));
    rho = w.asDiagonal() * rho * w.conjugate().asDiagonal();
}

void unframe(Vec& psi, const FramePhase& fp, const Eigen::VectorXd& pe,
             const Eigen::VectorXd& nb, double t1) {
    const int dim = static_cast<int>(pe.size());
    for (int i = 0; i < dim; ++i)
        psi(i) *= std::exp(cplx(0.0, -fp.angle(pe(i), nb(i), t1)));
}

} // namespace

int SectorBasis::index_of(const BasisLabel& lab) const {
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == lab) return static_cast<int>(i);
    return -1;
}

SectorBasis sector_basis(int N, const FockSpaceConfig& space) {
    SectorBasis basis;
    basis.N = N;
    basis.space = space;
    for (int at = 0; at <= 1; ++at)
        for (int na = 0; na <= space.n_max_a; ++na) {
            const int nb = N - at - na;
            if (nb >= 0 && nb <= space.n_max_b) basis.labels.push_back({at, na, nb});
        }
    return basis;
}

StateVector evolve_unitary(const StateVector& psi0, const LindbladModel& model,
                           double t0, double t1, const StepperSettings& settings,
                           EvolveReport* report) {
    const int dim = model.space.dim();
    if (psi0.amplitudes.size() != dim)
        throw ConfigError("evolve_unitary: state dimension mismatch");

    const FramePhase frame{&model.schedule, t0, model.params.delta};
    PhasedCoupling drive = phased_coupling(model.coupling, model.diag_pe, model.diag_nb);

    auto rhs = [&](double t, const Vec& psi, Vec& out) {
        const double om2 = 0.5 * model.omega_at(t);
        cplx ua, ub;
        frame.factors(t, ua, ub);
        drive.assemble(ua, ub);
        out.noalias() = drive.mat * psi;
        out *= cplx(0.0, -om2);
    };
    // The frame absorbs the whole diagonal, so drive-free stretches are inert.
    auto phase = [](Vec&, double, double) {};

    Vec y = psi0.amplitudes;
    long steps = integrate(y, model, t0, t1, settings, rhs,
                           /*dissipative_outside=*/false, rhs, phase,
                           [](Vec&, double) {});
    unframe(y, frame, model.diag_pe, model.diag_nb, t1);
    if (report) {
        report->steps = steps;
        report->norm_drift = std::abs(y.norm() - psi0.amplitudes.norm());
    }
    return {std::move(y), model.space};
}

DensityOperator evolve_density(const DensityOperator& rho0, const LindbladModel& model,
                               double t0, double t1, const StepperSettings& settings,
                               EvolveReport* report, std::vector<StepRecord>* trace_out) {
    const int dim = model.space.dim();
    if (rho0.elements.rows() != dim || rho0.elements.cols() != dim)
        throw ConfigError("evolve_density: state dimension mismatch");

    const FramePhase frame{&model.schedule, t0, model.params.delta};
    PhasedCoupling drive = phased_coupling(model.coupling, model.diag_pe, model.diag_nb);

    struct Jump {
        SpMat L;
        SpMat Ldag;
        double rate;
    };
    std::vector<Jump> jumps;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(dim);
    if (model.relaxation) {
        for (const auto& d : model.dissipators) {
            jumps.push_back({d.op.elements, SpMat(d.op.elements.adjoint()), d.rate});
            q += weighted_jump_diagonal(d);
        }
    }

    Mat buf(dim, dim), buf2(dim, dim);

    // Dissipative part: jump terms plus the -(q_i + q_j)/2 anticommutator
    // diagonal.  Both are frame-invariant.
    auto add_dissipation = [&](const Mat& rho, Mat& out) {
        for (const auto& j : jumps) {
            buf.noalias() = j.L * rho;
            buf2.noalias() = buf * j.Ldag;
            out += j.rate * buf2;
        }
        if (jumps.empty()) return;
        const double* qv = q.data();
        for (int col = 0; col < dim; ++col) {
            const double qj = qv[col];
            cplx* o = out.col(col).data();
            const cplx* r = rho.col(col).data();
            for (int row = 0; row < dim; ++row)
                o[row] -= 0.5 * (qv[row] + qj) * r[row];
        }
    };
    auto rhs = [&](double t, const Mat& rho, Mat& out) {
        const double om2 = 0.5 * model.omega_at(t);
        // Coupling commutator: -i (Omega/2) (C~ rho - rho C~)
        if (om2 != 0.0) {
            cplx ua, ub;
            frame.factors(t, ua, ub);
            drive.assemble(ua, ub);
            buf.noalias() = drive.mat * rho;
            buf.noalias() -= rho * drive.mat;
            out = cplx(0.0, -om2) * buf;
        } else {
            out.setZero();
        }
        add_dissipation(rho, out);
    };
    // Dissipative part alone (valid outside the coupling window).
    auto rhs_outside = [&](double, const Mat& rho, Mat& out) {
        out.setZero();
        add_dissipation(rho, out);
    };
    // The frame absorbs the whole diagonal Hamiltonian.
    auto phase = [](Mat&, double, double) {};

    const double tr0 = rho0.elements.trace().real();
    double max_trace_drift = 0.0;
    Mat adj(dim, dim);
    auto post = [&](Mat& rho, double t) {
        // Hermiticity enforced by symmetrization each step.
        adj = rho.adjoint();
        rho = 0.5 * (rho + adj);
        max_trace_drift =
            std::max(max_trace_drift, std::abs(rho.trace().real() - tr0));
        if (trace_out) {
            StepRecord rec;
            rec.t = t;
            rec.trace = rho.trace().real();
            rec.min_eig_estimate = rho.diagonal().real().minCoeff();
            rec.p_e = rec.p_g = rec.n_a = rec.n_b = 0.0;
            for (int i = 0; i < dim; ++i) {
                const BasisLabel lab = basis_label(i, model.space);
                const double pop = rho(i, i).real();
                (lab.atom == 1 ? rec.p_e : rec.p_g) += pop;
                rec.n_a += lab.n_a * pop;
                rec.n_b += lab.n_b * pop;
            }
            trace_out->push_back(rec);
        }
    };

    Mat y = rho0.elements;
    long steps = integrate(y, model, t0, t1, settings, rhs, !jumps.empty(),
                           rhs_outside, phase, post);
    unframe(y, frame, model.diag_pe, model.diag_nb, t1);

    DensityOperator out{std::move(y), model.space};
    const double min_eig = min_eigenvalue(out);
    if (report) {
        report->steps = steps;
        report->trace_drift = max_trace_drift;
        report->min_eigenvalue = min_eig;
    }
    if (min_eig < -1e-8)
        throw NumericsError("evolve_density: final state min eigenvalue " +
                            std::to_string(min_eig) +
                            " below -1e-8; reduce the step size");
    return out;
}

SectorRun evolve_sector(const BasisLabel& start, const LindbladModel& model,
                        double t0, double t1, const StepperSettings& settings) {
    if (model.relaxation && !model.dissipators.empty())
        throw ConfigError("evolve_sector requires a closed system (relaxation off)");
    const int N = start.atom + start.n_a + start.n_b;
    SectorBasis basis = sector_basis(N, model.space);
    if (basis.index_of(start) < 0)
        throw ConfigError("evolve_sector: start label outside the space");
    const int m = basis.dim();

    // Dense sector projections of the coupling and the diagonals.
    Mat C = Mat::Zero(m, m);
    Eigen::VectorXd pe(m), nb(m);
    for (int i = 0; i < m; ++i) {
        const BasisLabel& li = basis.labels[i];
        pe(i) = li.atom;
        nb(i) = li.n_b;
        if (li.atom == 1) {
            // |e, n_a, n_b> couples to |g, n_a+1, n_b> and |g, n_a, n_b+1>
            const int ja = basis.index_of({0, li.n_a + 1, li.n_b});
            if (ja >= 0 && li.n_a + 1 <= model.space.n_max_a) {
                const double v = std::sqrt(double(li.n_a + 1));
                C(i, ja) = v;
                C(ja, i) = v;
            }
            const int jb = basis.index_of({0, li.n_a, li.n_b + 1});
            if (jb >= 0 && li.n_b + 1 <= model.space.n_max_b) {
                const double v = std::sqrt(double(li.n_b + 1));
                C(i, jb) = v;
                C(jb, i) = v;
            }
        }
    }
    const FramePhase frame{&model.schedule, t0, model.params.delta};
    PhasedCoupling drive = phased_coupling(C.sparseView(), pe, nb);

    auto rhs = [&](double t, const Vec& psi, Vec& out) {
        const double om2 = 0.5 * model.omega_at(t);
        cplx ua, ub;
        frame.factors(t, ua, ub);
        drive.assemble(ua, ub);
        out.noalias() = drive.mat * psi;
        out *= cplx(0.0, -om2);
    };
    auto phase = [](Vec&, double, double) {};

    Vec y = Vec::Zero(m);
    y(basis.index_of(start)) = 1.0;
    integrate(y, model, t0, t1, settings, rhs, /*dissipative_outside=*/false, rhs,
              phase, [](Vec&, double) {});
    unframe(y, frame, pe, nb, t1);

    SectorRun run;
    run.norm_drift = std::abs(y.norm() - 1.0);
    run.basis = std::move(basis);
    run.amplitudes = std::move(y);
    return run;
}

double sector_atom_population(const SectorRun& run, AtomLevel level) {
    const int at = static_cast<int>(level);
    double p = 0.0;
    for (int i = 0; i < run.basis.dim(); ++i)
        if (run.basis.labels[i].atom == at) p += std::norm(run.amplitudes(i));
    return p;
}

double sector_population(const SectorRun& run, const BasisLabel& lab) {
    const int i = run.basis.index_of(lab);
    return (i >= 0) ? std::norm(run.amplitudes(i)) : 0.0;
}

void sector_accumulate_joint(const SectorRun& run, double weight,
                             std::optional<AtomLevel> level, Eigen::MatrixXd& joint) {
    for (int i = 0; i < run.basis.dim(); ++i) {
        const BasisLabel& lab = run.basis.labels[i];
        if (level && lab.atom != static_cast<int>(*level)) continue;
        joint(lab.n_a, lab.n_b) += weight * std::norm(run.amplitudes(i));
    }
}

} // namespace ramansim
