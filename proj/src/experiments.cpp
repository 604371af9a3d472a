#include "ramansim/experiments.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <utility>

namespace ramansim {

namespace {

// "Exactly one atom" is the baseline; a Poisson mean of 0 or 1 both request it.
bool multi_atom(const ImperfectionModel& m) {
    return m.mean_atoms > 0.0 && m.mean_atoms != 1.0;
}

// Poisson weights of the 1- and 2-atom branches (3+ truncated).  Only events
// with at least one atom produce a detection, so the 0-atom branch drops out
// of every detected-event mixture.
std::pair<double, double> atom_count_weights(double mean) {
    const double p1 = mean * std::exp(-mean);
    const double p2 = 0.5 * mean * mean * std::exp(-mean);
    const double norm = p1 + p2;
    if (norm <= 0.0)
        throw NumericsError("imperfections: mean_atoms leaves no detectable branch");
    return {p1 / norm, p2 / norm};
}

std::vector<double> linear_grid(double lo, double hi, double step, const char* what) {
    if (!(step > 0.0))
        throw ConfigError(std::string(what) + ": step must be positive");
    if (hi < lo)
        throw ConfigError(std::string(what) + ": empty range");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = lo + i * step;
    return grid;
}

// Run work(i) for i in [0, n) across a small thread pool.  Each index is
// owned by exactly one worker and written to caller-owned slots, so results
// are independent of the thread count.
template <typename F>
void parallel_for(int n, int threads, F&& work) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i)
            work(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int k = 0; k < threads; ++k) {
        pool.emplace_back([&, k] {
            try {
                for (int i = k; i < n; i += threads)
                    work(i);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

int resolve_n_max_a(const FieldSpec& field, int requested) {
    // Headroom for the Raman dynamics: the transfer adds two photons to M_a
    // plus one more virtually.
    return requested >= 0 ? requested : std::max(default_n_max(field) + 3, 4);
}

int resolve_n_max_b(const FieldSpec& field, int requested) {
    // One extra level above the source: the virtual path reaches n_b + 1.
    return requested >= 0 ? requested : std::max(default_n_max(field) + 1, 4);
}

std::vector<double> diagonal_weights(const FieldSpec& spec, int n_max) {
    FieldState f = make_field_state(spec, n_max);
    std::vector<double> w(n_max + 1);
    for (int n = 0; n <= n_max; ++n)
        w[n] = f.elements(n, n).real();
    return w;
}

struct Component {
    BasisLabel start;
    double weight;
};

// Diagonal decomposition of atom (x) field_a (x) field_b into basis-state
// components, dropping joint weights below the cutoff and renormalizing.
std::vector<Component> product_components(AtomLevel atom, const FieldSpec& field_a,
                                          const FieldSpec& field_b,
                                          const FockSpaceConfig& space, double cutoff) {
    const auto wa = diagonal_weights(field_a, space.n_max_a);
    const auto wb = diagonal_weights(field_b, space.n_max_b);
    std::vector<Component> comps;
    double kept = 0.0;
    for (int na = 0; na <= space.n_max_a; ++na) {
        for (int nb = 0; nb <= space.n_max_b; ++nb) {
            const double w = wa[na] * wb[nb];
            if (w >= cutoff) {
                comps.push_back({{static_cast<int>(atom), na, nb}, w});
                kept += w;
            }
        }
    }
    if (comps.empty())
        throw NumericsError("component decomposition: weight cutoff removed the whole source");
    for (auto& c : comps)
        c.weight /= kept;
    return comps;
}

// Field-only reduced density matrix (trace over the atom).
Mat trace_atom(const DensityOperator& rho) {
    const int fd = rho.space.field_dim();
    return rho.elements.block(0, 0, fd, fd) + rho.elements.block(fd, fd, fd, fd);
}

// Fresh atom in a pure level attached to an (entangled) field density.
DensityOperator attach_atom(AtomLevel atom, const Mat& field, const FockSpaceConfig& space) {
    const int fd = space.field_dim();
    const int at = static_cast<int>(atom);
    DensityOperator rho{Mat::Zero(space.dim(), space.dim()), space};
    rho.elements.block(at * fd, at * fd, fd, fd) = field;
    return rho;
}

void check_scan_common(const ScanSpec& spec) {
    validate(spec.params);
    validate(spec.imperfections);
    if (!(spec.component_weight_cutoff >= 0.0 && spec.component_weight_cutoff < 1.0))
        throw ConfigError("scan: component_weight_cutoff must lie in [0, 1)");
}

double wrap_pi(double x) { return std::remainder(x, units::two_pi); }

} // namespace

bool ImperfectionModel::is_identity() const {
    return p_enter_g == 0.0 && background_floor == 0.0 && ramsey_contrast == 1.0 &&
           !multi_atom(*this) && thermal_growth == 0.0;
}

void validate(const ImperfectionModel& model) {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(model.p_enter_g))
        throw ConfigError("imperfections: p_enter_g must lie in [0, 1]");
    if (!in01(model.background_floor))
        throw ConfigError("imperfections: background_floor must lie in [0, 1]");
    if (!(model.ramsey_contrast > 0.0 && model.ramsey_contrast <= 1.0))
        throw ConfigError("imperfections: ramsey_contrast must lie in (0, 1]");
    if (model.mean_atoms < 0.0)
        throw ConfigError("imperfections: mean_atoms must be non-negative");
    if (model.thermal_growth < 0.0)
        throw ConfigError("imperfections: thermal_growth must be non-negative");
}

// ---------------------------------------------------------------------------
// Single transit.

DensityOperator run_transit(AtomLevel atom, const FieldState& field_a,
                            const FieldState& field_b, const DetuningSchedule& schedule,
                            const SystemParams& params, const StepperSettings& settings,
                            bool relaxation, EvolveReport* report) {
    validate(params);
    validate(schedule);
    const double tc = params.transit_half_time();
    if (schedule.t_begin() > -tc || schedule.t_end() < tc)
        throw ConfigError("run_transit: schedule must cover the transit window [-3w/v, 3w/v]");
    const FockSpaceConfig space{field_a.n_max, field_b.n_max};
    const LindbladModel model = build_model(schedule, params, space, relaxation);
    const DensityOperator rho0 = compose_initial_state(atom, field_a, field_b, space);
    return evolve_density(rho0, model, schedule.t_begin(), schedule.t_end(), settings, report);
}

// ---------------------------------------------------------------------------
// Detuning scans.

namespace {

// P(g) after one transit at a fixed detuning, closed-system component path.
double sector_point_pg(double delta_val, AtomLevel atom, const std::vector<Component>& comps,
                       const ScanSpec& spec, const SystemParams& params,
                       const FockSpaceConfig& space) {
    const double tc = params.transit_half_time();
    const LindbladModel model =
        build_model(flat_schedule(delta_val, -tc, tc), params, space, false);
    double pg = 0.0;
    for (const auto& c : comps) {
        BasisLabel start = c.start;
        start.atom = static_cast<int>(atom);
        const SectorRun run = evolve_sector(start, model, -tc, tc, spec.stepper);
        pg += c.weight * sector_atom_population(run, AtomLevel::g);
    }
    return pg;
}

// Density-matrix path; handles relaxation and the sequential two-atom branch.
double density_point_pg(double delta_val, AtomLevel atom, const FieldState& fa,
                        const FieldState& fb, const ScanSpec& spec,
                        const SystemParams& params, const FockSpaceConfig& space,
                        bool relaxation) {
    const double tc = params.transit_half_time();
    const LindbladModel model =
        build_model(flat_schedule(delta_val, -tc, tc), params, space, relaxation);
    const DensityOperator rho0 = compose_initial_state(atom, fa, fb, space);
    const DensityOperator rho1 = evolve_density(rho0, model, -tc, tc, spec.stepper);
    const double pg1 = atom_population(rho1, AtomLevel::g);
    if (!multi_atom(spec.imperfections))
        return pg1;
    // Second atom crosses the field left behind by the first.
    const DensityOperator rho20 = attach_atom(atom, trace_atom(rho1), space);
    const DensityOperator rho2 = evolve_density(rho20, model, -tc, tc, spec.stepper);
    const double pg2 = atom_population(rho2, AtomLevel::g);
    const auto [w1, w2] = atom_count_weights(spec.imperfections.mean_atoms);
    return w1 * pg1 + w2 * 0.5 * (pg1 + pg2);
}

} // namespace

ScanResult scan_pg_vs_delta(const ScanSpec& spec) {
    check_scan_common(spec);
    const ImperfectionModel& imp = spec.imperfections;

    SystemParams params = spec.params;
    bool relaxation = spec.relaxation;
    if (imp.thermal_growth > 0.0) {
        params.n_th_a = imp.thermal_growth;
        params.n_th_b = imp.thermal_growth;
        relaxation = true;
    }

    const FockSpaceConfig space{resolve_n_max_a(spec.field_a, spec.n_max_a),
                                resolve_n_max_b(spec.field_b, spec.n_max_b)};
    const std::vector<double> deltas =
        linear_grid(spec.delta_min, spec.delta_max, spec.delta_step, "scan");
    const int n = static_cast<int>(deltas.size());

    const bool density_path = relaxation || multi_atom(imp);
    std::vector<Component> comps;
    FieldState fa, fb;
    if (density_path) {
        fa = make_field_state(spec.field_a, space.n_max_a);
        fb = make_field_state(spec.field_b, space.n_max_b);
    } else {
        comps = product_components(spec.atom, spec.field_a, spec.field_b, space,
                                   spec.component_weight_cutoff);
    }

    auto run_branch = [&](AtomLevel atom) {
        std::vector<double> pg(n);
        parallel_for(n, spec.threads, [&](int i) {
            pg[i] = density_path
                        ? density_point_pg(deltas[i], atom, fa, fb, spec, params, space,
                                           relaxation)
                        : sector_point_pg(deltas[i], atom, comps, spec, params, space);
        });
        return pg;
    };

    std::vector<double> pg = run_branch(spec.atom);
    if (imp.p_enter_g > 0.0) {
        const std::vector<double> pg_wrong = run_branch(AtomLevel::g);
        for (int i = 0; i < n; ++i)
            pg[i] = (1.0 - imp.p_enter_g) * pg[i] + imp.p_enter_g * pg_wrong[i];
    }

    ScanResult result;
    result.space = space;
    result.spec = spec;
    result.points.resize(n);
    for (int i = 0; i < n; ++i) {
        double p = pg[i];
        if (imp.background_floor > 0.0)
            p = std::min(1.0, p + imp.background_floor);
        result.points[i] = {deltas[i], std::clamp(p, 0.0, 1.0)};
    }
    return result;
}

// ---------------------------------------------------------------------------
// Two-photon preparation.

namespace {

// Conditional-statistics bundle shared by the sector and density paths.
struct PrepStats {
    double success = 0.0;          // P(atom in g)
    Eigen::MatrixXd joint_unnorm;  // p(n_a, n_b, g), not divided by success
};

PrepStats density_prep_stats(const DensityOperator& rho) {
    PrepStats s;
    s.success = atom_population(rho, AtomLevel::g);
    s.joint_unnorm = Eigen::MatrixXd::Zero(rho.space.dim_a(), rho.space.dim_b());
    for (int na = 0; na <= rho.space.n_max_a; ++na)
        for (int nb = 0; nb <= rho.space.n_max_b; ++nb) {
            const int i = na * rho.space.dim_b() + nb; // g block starts at 0
            s.joint_unnorm(na, nb) = rho.elements(i, i).real();
        }
    return s;
}

void derive_conditionals(RamanPrepResult& out) {
    const int dim_a = static_cast<int>(out.joint_given_g.rows());
    const int dim_b = static_cast<int>(out.joint_given_g.cols());
    out.dist_a_given_g.assign(dim_a, 0.0);
    out.dist_b_given_g.assign(dim_b, 0.0);
    out.mean_a_given_g = 0.0;
    out.mean_b_given_g = 0.0;
    for (int na = 0; na < dim_a; ++na) {
        out.dist_a_given_g[na] = out.joint_given_g.row(na).sum();
        out.mean_a_given_g += na * out.dist_a_given_g[na];
    }
    for (int nb = 0; nb < dim_b; ++nb) {
        out.dist_b_given_g[nb] = out.joint_given_g.col(nb).sum();
        out.mean_b_given_g += nb * out.dist_b_given_g[nb];
    }
    out.p2_given_g = out.dist_a_given_g.size() > 2 ? out.dist_a_given_g[2] : 0.0;
}

void finalize_prep(RamanPrepResult& out, const PrepStats& stats) {
    if (stats.success < 1e-12)
        throw NumericsError("prepare_two_photon: degenerate post-selection, P(g) = " +
                            std::to_string(stats.success));
    out.success_probability = stats.success;
    out.joint_given_g = stats.joint_unnorm / stats.success;
    derive_conditionals(out);
}

} // namespace

RamanPrepResult prepare_two_photon(const PrepareSpec& spec) {
    validate(spec.params);
    validate(spec.imperfections);
    if (spec.source_mean < 0.0)
        throw ConfigError("prepare: source_mean must be non-negative");
    const double tc = spec.params.transit_half_time();
    if (!(spec.t_switch > -tc && spec.t_switch < tc))
        throw ConfigError("prepare: t_switch must lie inside the transit window");

    if (spec.imperfections.p_enter_g > 0.0) {
        // A fraction p of the detected sample comes from atoms that entered in
        // g and saw no Raman transfer, so the conditioned statistics are the
        // p-weighted mixture of the two branches' conditioned statistics.
        const double p = spec.imperfections.p_enter_g;
        PrepareSpec clean = spec;
        clean.imperfections.p_enter_g = 0.0;
        PrepareSpec entered = clean;
        entered.atom = AtomLevel::g;
        const RamanPrepResult normal = prepare_two_photon(clean);
        const RamanPrepResult wrong = prepare_two_photon(entered);
        RamanPrepResult out = normal;
        out.spec = spec;
        out.joint.elements =
            (1.0 - p) * normal.joint.elements + p * wrong.joint.elements;
        out.success_probability = (1.0 - p) * normal.success_probability +
                                  p * wrong.success_probability;
        out.joint_given_g =
            (1.0 - p) * normal.joint_given_g + p * wrong.joint_given_g;
        derive_conditionals(out);
        return out;
    }

    const ImperfectionModel& imp = spec.imperfections;
    SystemParams params = spec.params;
    if (imp.thermal_growth > 0.0) {
        params.n_th_a = imp.thermal_growth;
        params.n_th_b = imp.thermal_growth;
    }

    const FieldSpec source = FieldSpec::coherent_mean(spec.source_mean);
    const FockSpaceConfig space{resolve_n_max_a(FieldSpec::vacuum(), spec.n_max_a),
                                resolve_n_max_b(source, spec.n_max_b)};
    const DetuningSchedule schedule =
        switched_schedule(spec.delta_before, spec.delta_after, spec.t_switch, -tc, tc);

    RamanPrepResult out;
    out.spec = spec;

    const bool density_path =
        spec.relaxation || imp.thermal_growth > 0.0 || multi_atom(imp);

    if (!density_path) {
        // Closed system: weighted basis-state components inside excitation
        // sectors.  The assembled density is the sector-diagonal equivalent,
        // exact for every photon-number observable recorded here.
        const LindbladModel model = build_model(schedule, params, space, false);
        PrepStats stats;
        stats.joint_unnorm = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
        out.joint = DensityOperator{Mat::Zero(space.dim(), space.dim()), space};

        const auto comps = product_components(spec.atom, FieldSpec::vacuum(), source,
                                              space, spec.component_weight_cutoff);
        for (const auto& c : comps) {
            const SectorRun run = evolve_sector(c.start, model, -tc, tc, spec.stepper);
            stats.success += c.weight * sector_atom_population(run, AtomLevel::g);
            sector_accumulate_joint(run, c.weight, AtomLevel::g, stats.joint_unnorm);
            Vec full = Vec::Zero(space.dim());
            for (int i = 0; i < run.basis.dim(); ++i)
                full(basis_index(run.basis.labels[i], space)) = run.amplitudes(i);
            out.joint.elements += c.weight * (full * full.adjoint());
        }
        finalize_prep(out, stats);
        return out;
    }

    const FieldState fa = make_field_state(FieldSpec::vacuum(), space.n_max_a);
    const FieldState fb = make_field_state(source, space.n_max_b);
    const LindbladModel model = build_model(schedule, params, space, spec.relaxation);

    const DensityOperator rho0 = compose_initial_state(spec.atom, fa, fb, space);
    const DensityOperator rho1 = evolve_density(rho0, model, -tc, tc, spec.stepper);
    const PrepStats s1 = density_prep_stats(rho1);

    if (!multi_atom(imp)) {
        out.joint = rho1;
        finalize_prep(out, s1);
        return out;
    }

    // Two-atom branch: the second atom crosses the field the first one left.
    const DensityOperator rho20 = attach_atom(spec.atom, trace_atom(rho1), space);
    const DensityOperator rho2 = evolve_density(rho20, model, -tc, tc, spec.stepper);
    const PrepStats s2 = density_prep_stats(rho2);

    const auto [w1, w2] = atom_count_weights(imp.mean_atoms);
    PrepStats mixed;
    mixed.success = w1 * s1.success + w2 * 0.5 * (s1.success + s2.success);
    mixed.joint_unnorm =
        w1 * s1.joint_unnorm + w2 * 0.5 * (s1.joint_unnorm + s2.joint_unnorm);
    // Final joint state after all transits of the detected event's branch.
    out.joint = rho1;
    out.joint.elements = w1 * rho1.elements + w2 * rho2.elements;
    finalize_prep(out, mixed);
    return out;
}

namespace {

// Birth-death generator for a single cavity mode acting on a photon-number
// distribution.
Eigen::MatrixXd mode_decay_generator(int n_max, double kappa, double n_th) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        const double down = kappa * (1.0 + n_th) * n;
        if (n > 0) {
            g(n - 1, n) += down;
            g(n, n) -= down;
        }
        if (n < n_max) {
            const double up = kappa * n_th * (n + 1);
            g(n + 1, n) += up;
            g(n, n) -= up;
        }
    }
    return g;
}

// Propagates a joint photon-number distribution under independent cavity
// decay for a time tau.
void decay_joint(Eigen::MatrixXd& dist, const SystemParams& params, double tau) {
    const int n_max_a = static_cast<int>(dist.rows()) - 1;
    const int n_max_b = static_cast<int>(dist.cols()) - 1;
    const Eigen::MatrixXd ea =
        (mode_decay_generator(n_max_a, params.kappa_a, params.n_th_a) * tau).exp();
    const Eigen::MatrixXd eb =
        (mode_decay_generator(n_max_b, params.kappa_b, params.n_th_b) * tau).exp();
    dist = ea * dist * eb.transpose();
}

// g-conditioned joint photon distribution at the freeze (switch) time, which
// is what the probe atom interrogates.  Shares the preparation engine paths
// but stops the evolution at t_switch.
struct FreezeStats {
    double success = 0.0;
    Eigen::MatrixXd joint_unnorm;
    FockSpaceConfig space;
};

FreezeStats freeze_distribution(const PrepareSpec& spec) {
    validate(spec.params);
    validate(spec.imperfections);
    const double tc = spec.params.transit_half_time();
    if (!(spec.t_switch > -tc && spec.t_switch < tc))
        throw ConfigError("ramsey: t_switch must lie inside the transit window");

    if (spec.imperfections.p_enter_g > 0.0) {
        // Same branch mixture as the full preparation: conditioned freeze-time
        // distributions blend with weight p, detection rates with weight p.
        const double p = spec.imperfections.p_enter_g;
        PrepareSpec clean = spec;
        clean.imperfections.p_enter_g = 0.0;
        PrepareSpec entered = clean;
        entered.atom = AtomLevel::g;
        const FreezeStats normal = freeze_distribution(clean);
        const FreezeStats wrong = freeze_distribution(entered);
        if (normal.success < 1e-12 || wrong.success < 1e-12)
            throw NumericsError("ramsey: degenerate post-selection at the freeze");
        FreezeStats out;
        out.space = normal.space;
        out.success = (1.0 - p) * normal.success + p * wrong.success;
        out.joint_unnorm =
            out.success * ((1.0 - p) * normal.joint_unnorm / normal.success +
                           p * wrong.joint_unnorm / wrong.success);
        return out;
    }

    const ImperfectionModel& imp = spec.imperfections;
    SystemParams params = spec.params;
    if (imp.thermal_growth > 0.0) {
        params.n_th_a = imp.thermal_growth;
        params.n_th_b = imp.thermal_growth;
    }
    const FieldSpec source = FieldSpec::coherent_mean(spec.source_mean);
    FreezeStats out;
    out.space = FockSpaceConfig{resolve_n_max_a(FieldSpec::vacuum(), spec.n_max_a),
                                resolve_n_max_b(source, spec.n_max_b)};
    const FockSpaceConfig& space = out.space;
    out.joint_unnorm = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
    const DetuningSchedule schedule =
        switched_schedule(spec.delta_before, spec.delta_after, spec.t_switch, -tc, tc);

    const bool density_path =
        spec.relaxation || imp.thermal_growth > 0.0 || multi_atom(imp);
    if (!density_path) {
        const LindbladModel model = build_model(schedule, params, space, false);
        const auto comps = product_components(spec.atom, FieldSpec::vacuum(), source,
                                              space, spec.component_weight_cutoff);
        for (const auto& c : comps) {
            const SectorRun run =
                evolve_sector(c.start, model, -tc, spec.t_switch, spec.stepper);
            out.success += c.weight * sector_atom_population(run, AtomLevel::g);
            sector_accumulate_joint(run, c.weight, AtomLevel::g, out.joint_unnorm);
        }
        return out;
    }

    const FieldState fa = make_field_state(FieldSpec::vacuum(), space.n_max_a);
    const FieldState fb = make_field_state(source, space.n_max_b);
    const LindbladModel model = build_model(schedule, params, space, spec.relaxation);
    const DensityOperator rho0 = compose_initial_state(spec.atom, fa, fb, space);
    const DensityOperator rho_freeze =
        evolve_density(rho0, model, -tc, spec.t_switch, spec.stepper);
    const PrepStats s1 = density_prep_stats(rho_freeze);
    if (!multi_atom(imp)) {
        out.success = s1.success;
        out.joint_unnorm = s1.joint_unnorm;
        return out;
    }

    // Two-atom events: the second prep atom crosses the field the first left
    // behind at exit; its own freeze-time snapshot enters the mixture.
    const DensityOperator rho1 =
        evolve_density(rho_freeze, model, spec.t_switch, tc, spec.stepper);
    const DensityOperator rho20 = attach_atom(spec.atom, trace_atom(rho1), space);
    const DensityOperator rho2_freeze =
        evolve_density(rho20, model, -tc, spec.t_switch, spec.stepper);
    const PrepStats s2 = density_prep_stats(rho2_freeze);
    const auto [w1, w2] = atom_count_weights(imp.mean_atoms);
    out.success = w1 * s1.success + w2 * 0.5 * (s1.success + s2.success);
    out.joint_unnorm =
        w1 * s1.joint_unnorm + w2 * 0.5 * (s1.joint_unnorm + s2.joint_unnorm);
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Ramsey probe.

FringeResult ramsey_probe(const RamseySpec& spec) {
    validate(spec.imperfections);
    if (!(spec.ramsey_time > 0.0))
        throw ConfigError("ramsey: ramsey_time must be positive");

    // Preparation-side imperfections propagate into the prep run; the probe
    // interferometer keeps contrast and background for itself.
    PrepareSpec prep = spec.prep;
    prep.imperfections = ImperfectionModel{};
    prep.imperfections.p_enter_g = spec.imperfections.p_enter_g;
    prep.imperfections.thermal_growth = spec.imperfections.thermal_growth;
    prep.imperfections.mean_atoms = spec.imperfections.mean_atoms;

    const double tc = prep.params.transit_half_time();
    if (!(prep.t_switch > -tc && prep.t_switch < tc))
        throw ConfigError("ramsey: t_switch must lie inside the transit window");
    const DetuningSchedule after = flat_schedule(prep.delta_after, prep.t_switch, tc);

    const FieldSpec source = FieldSpec::coherent_mean(prep.source_mean);
    FockSpaceConfig space{resolve_n_max_a(FieldSpec::vacuum(), prep.n_max_a),
                          resolve_n_max_b(source, prep.n_max_b)};

    // Joint photon distribution carried into the probe window.  With
    // relaxation on, the references ride the same cavity decay as the Raman
    // run up to the freeze, so the decay shift cancels in relative phases.
    const auto reference_dist = [&](int n_a_row) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
        const auto wb = diagonal_weights(source, space.n_max_b);
        for (int nb = 0; nb <= space.n_max_b; ++nb)
            d(n_a_row, nb) = wb[nb];
        if (prep.relaxation) {
            SystemParams ref_params = prep.params;
            if (spec.imperfections.thermal_growth > 0.0) {
                ref_params.n_th_a = spec.imperfections.thermal_growth;
                ref_params.n_th_b = spec.imperfections.thermal_growth;
            }
            decay_joint(d, ref_params, prep.t_switch + tc);
        }
        return d;
    };

    Eigen::MatrixXd dist;
    switch (spec.scenario) {
    case RamseyScenario::vacuum_ref:
        dist = reference_dist(0);
        break;
    case RamseyScenario::one_photon_ref:
        dist = reference_dist(1);
        break;
    case RamseyScenario::raman: {
        const FreezeStats fs = freeze_distribution(prep);
        if (fs.success < 1e-12)
            throw NumericsError("ramsey: degenerate post-selection at the freeze");
        space = fs.space;
        dist = fs.joint_unnorm / fs.success;
        break;
    }
    }

    // Light-shift phase of the g arm over the frozen window, per Fock pair.
    Eigen::MatrixXd phases(space.dim_a(), space.dim_b());
    for (int na = 0; na <= space.n_max_a; ++na)
        for (int nb = 0; nb <= space.n_max_b; ++nb)
            phases(na, nb) = ramsey_phase(na, nb, after, prep.params);

    const std::vector<double> offsets =
        linear_grid(spec.offset_min, spec.offset_max, spec.offset_step, "ramsey");
    const double contrast_in = spec.imperfections.ramsey_contrast;
    const double floor = spec.imperfections.background_floor;

    auto build_points = [&](const Eigen::MatrixXd& d) {
        std::vector<FringePoint> pts(offsets.size());
        for (size_t i = 0; i < offsets.size(); ++i) {
            const double x = units::two_pi * offsets[i] * spec.ramsey_time;
            double s = 0.0;
            for (int na = 0; na <= space.n_max_a; ++na)
                for (int nb = 0; nb <= space.n_max_b; ++nb)
                    s += d(na, nb) * std::cos(x + phases(na, nb));
            double p = 0.5 * (1.0 - contrast_in * s);
            if (floor > 0.0)
                p = std::min(1.0, p + floor);
            pts[i] = {offsets[i], std::clamp(p, 0.0, 1.0)};
        }
        return pts;
    };

    FringeResult out;
    out.spec = spec;
    out.space = space;
    out.points = build_points(dist);
    const FringeFit fit = fit_fringe(out.points, spec.ramsey_time);
    const FringeFit ref =
        spec.scenario == RamseyScenario::vacuum_ref
            ? fit
            : fit_fringe(build_points(reference_dist(0)), spec.ramsey_time);
    out.raw_phase = fit.phase;
    out.reference_phase = ref.phase;
    out.fitted_phase = wrap_pi(fit.phase - ref.phase);
    out.fitted_contrast = 2.0 * fit.amplitude;
    return out;
}

FringeFit fit_fringe(const std::vector<FringePoint>& points, double ramsey_time) {
    if (!(ramsey_time > 0.0))
        throw ConfigError("fit_fringe: ramsey_time must be positive");
    const int n = static_cast<int>(points.size());
    if (n < 5)
        throw ConfigError("fit_fringe: need at least 5 points");
    double lo = points.front().offset_hz, hi = lo;
    for (const auto& p : points) {
        lo = std::min(lo, p.offset_hz);
        hi = std::max(hi, p.offset_hz);
    }
    if ((hi - lo) * ramsey_time < 1.0 - 1e-12)
        throw ConfigError("fit_fringe: points must span at least one fringe period");

    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double x = units::two_pi * points[i].offset_hz * ramsey_time;
        X(i, 0) = std::cos(x);
        X(i, 1) = std::sin(x);
        X(i, 2) = 1.0;
        y(i) = points[i].p_g;
    }
    const Eigen::Vector3d beta = X.colPivHouseholderQr().solve(y);
    FringeFit fit;
    fit.amplitude = std::hypot(beta(0), beta(1));
    fit.baseline = beta(2);
    if (fit.amplitude < 1e-10 * std::max(1.0, std::abs(fit.baseline)))
        throw NumericsError("fit_fringe: ill-conditioned fit, no resolvable fringe");
    // p = a cos x + b sin x + c = A cos(x + phase) with a = A cos(phase),
    // b = -A sin(phase).
    fit.phase = std::atan2(-beta(1), beta(0));
    fit.max_residual = (X * beta - y).cwiseAbs().maxCoeff();
    return fit;
}

// ---------------------------------------------------------------------------
// Imperfection ladder.

ScanResult apply_imperfections(const ScanResult& ideal, const ImperfectionModel& model) {
    validate(model);
    if (model == ideal.spec.imperfections)
        return ideal;
    ScanSpec spec = ideal.spec;
    spec.imperfections = model;
    return scan_pg_vs_delta(spec);
}

RamanPrepResult apply_imperfections(const RamanPrepResult& ideal,
                                    const ImperfectionModel& model) {
    validate(model);
    if (model == ideal.spec.imperfections)
        return ideal;
    PrepareSpec spec = ideal.spec;
    spec.imperfections = model;
    return prepare_two_photon(spec);
}

FringeResult apply_imperfections(const FringeResult& ideal,
                                 const ImperfectionModel& model) {
    validate(model);
    if (model == ideal.spec.imperfections)
        return ideal;
    RamseySpec spec = ideal.spec;
    spec.imperfections = model;
    return ramsey_probe(spec);
}

// ---------------------------------------------------------------------------
// Extension scenarios.

ReverseRamanResult scenario_reverse_raman(int n, const SystemParams& params,
                                          const StepperSettings& settings) {
    if (n < 2)
        throw ConfigError("scenario_reverse_raman: needs a source with n >= 2 photons");
    validate(params);
    const FockSpaceConfig space{4, n + 1};
    const double tc = params.transit_half_time();
    const BasisLabel start{static_cast<int>(AtomLevel::g), 0, n};
    const BasisLabel target{static_cast<int>(AtomLevel::e), 1, n - 2};

    // Bare energy balance at Delta = -2 delta; the dressed feature sits a few
    // tens of kHz above it, so scan upward from just below.
    const auto grid = linear_grid(-2.0 * params.delta - units::khz(10.0),
                                  -2.0 * params.delta + units::khz(110.0),
                                  units::khz(2.0), "reverse_raman");
    ReverseRamanResult out;
    out.space = space;
    SectorRun best;
    for (const double d : grid) {
        const LindbladModel model =
            build_model(flat_schedule(d, -tc, tc), params, space, false);
        SectorRun run = evolve_sector(start, model, -tc, tc, settings);
        const double p = sector_population(run, target);
        if (p > out.transfer) {
            out.transfer = p;
            out.delta_peak = d;
            best = std::move(run);
        }
    }
    if (best.basis.dim() == 0)
        throw NumericsError("scenario_reverse_raman: no transfer found in the scan window");

    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
    sector_accumulate_joint(best, 1.0, AtomLevel::e, joint);
    const double pe = joint.sum();
    out.dist_b_given_e.assign(space.dim_b(), 0.0);
    if (pe > 0.0) {
        for (int nb = 0; nb <= space.n_max_b; ++nb)
            out.dist_b_given_e[nb] = joint.col(nb).sum() / pe;
        out.peak_n_b = static_cast<int>(
            std::max_element(out.dist_b_given_e.begin(), out.dist_b_given_e.end()) -
            out.dist_b_given_e.begin());
    }

    // Microreversibility partner: |<f|U|i>| = |<i|U|f>| for unitary U.
    const LindbladModel model =
        build_model(flat_schedule(out.delta_peak, -tc, tc), params, space, false);
    const SectorRun forward = evolve_sector(target, model, -tc, tc, settings);
    out.forward_transfer = sector_population(forward, start);
    return out;
}

FifthOrderResult scenario_fifth_order(int n, const SystemParams& params,
                                      const StepperSettings& settings) {
    if (n < 0)
        throw ConfigError("scenario_fifth_order: photon number must be non-negative");
    validate(params);
    const FockSpaceConfig space{4, std::max(n, 1) + 1};
    const double tc = params.transit_half_time();
    const BasisLabel start{static_cast<int>(AtomLevel::e), 0, n};

    // Bare balance at Delta = +2 delta; light shifts pull the feature down.
    const auto grid = linear_grid(2.0 * params.delta - units::khz(40.0),
                                  2.0 * params.delta + units::khz(10.0),
                                  units::khz(2.0), "fifth_order");
    FifthOrderResult out;
    out.space = space;
    out.delta_peak = grid.front();
    for (const double d : grid) {
        const LindbladModel model =
            build_model(flat_schedule(d, -tc, tc), params, space, false);
        const SectorRun run = evolve_sector(start, model, -tc, tc, settings);
        Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
        sector_accumulate_joint(run, 1.0, AtomLevel::g, joint);
        const double p = joint.row(3).sum();
        if (p > out.transfer) {
            out.transfer = p;
            out.delta_peak = d;
        }
    }
    return out;
}

} // namespace ramansim
