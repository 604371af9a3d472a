#include "ramansim/fockspace.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace ramansim {

namespace {

void check_range(int atom, int n_a, int n_b, const FockSpaceConfig& space) {
    if (atom < 0 || atom > 1 || n_a < 0 || n_a > space.n_max_a || n_b < 0 ||
        n_b > space.n_max_b) {
        throw ConfigError("basis label (atom=" + std::to_string(atom) +
                          ", n_a=" + std::to_string(n_a) +
                          ", n_b=" + std::to_string(n_b) +
                          ") out of range for n_max_a=" + std::to_string(space.n_max_a) +
                          ", n_max_b=" + std::to_string(space.n_max_b));
    }
}

} // namespace

FieldSpec FieldSpec::coherent_mean(double mean) {
    if (mean < 0.0) throw ConfigError("coherent mean photon number must be >= 0");
    return {Kind::coherent, std::sqrt(mean)};
}

int basis_index(AtomLevel atom, int n_a, int n_b, const FockSpaceConfig& space) {
    const int at = static_cast<int>(atom);
    check_range(at, n_a, n_b, space);
    return (at * (space.n_max_a + 1) + n_a) * (space.n_max_b + 1) + n_b;
}

int basis_index(const BasisLabel& label, const FockSpaceConfig& space) {
    check_range(label.atom, label.n_a, label.n_b, space);
    return (label.atom * (space.n_max_a + 1) + label.n_a) * (space.n_max_b + 1) +
           label.n_b;
}

BasisLabel basis_label(int index, const FockSpaceConfig& space) {
    if (index < 0 || index >= space.dim())
        throw ConfigError("basis index " + std::to_string(index) + " out of range");
    const int n_b = index % space.dim_b();
    const int rest = index / space.dim_b();
    const int n_a = rest % space.dim_a();
    const int atom = rest / space.dim_a();
    return {atom, n_a, n_b};
}

LinearOperator build_mode_operator(Mode mode, ModeOp kind, const FockSpaceConfig& space) {
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(space.dim());
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        const int n = (mode == Mode::a) ? lab.n_a : lab.n_b;
        switch (kind) {
        case ModeOp::annihilate:
            if (n > 0) {
                BasisLabel to = lab;
                (mode == Mode::a ? to.n_a : to.n_b) -= 1;
                trips.emplace_back(basis_index(to, space), i, std::sqrt(double(n)));
            }
            break;
        case ModeOp::create: {
            const int n_max = (mode == Mode::a) ? space.n_max_a : space.n_max_b;
            if (n < n_max) {
                BasisLabel to = lab;
                (mode == Mode::a ? to.n_a : to.n_b) += 1;
                trips.emplace_back(basis_index(to, space), i, std::sqrt(double(n + 1)));
            }
            break;
        }
        case ModeOp::number:
            if (n > 0) trips.emplace_back(i, i, double(n));
            break;
        }
    }
    SpMat m(space.dim(), space.dim());
    m.setFromTriplets(trips.begin(), trips.end());
    return {std::move(m), space};
}

LinearOperator build_atomic_operator(AtomOp kind, const FockSpaceConfig& space) {
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(space.dim());
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        switch (kind) {
        case AtomOp::lower: // |g><e|
            if (lab.atom == 1)
                trips.emplace_back(basis_index({0, lab.n_a, lab.n_b}, space), i, 1.0);
            break;
        case AtomOp::raise: // |e><g|
            if (lab.atom == 0)
                trips.emplace_back(basis_index({1, lab.n_a, lab.n_b}, space), i, 1.0);
            break;
        case AtomOp::project_e:
            if (lab.atom == 1) trips.emplace_back(i, i, 1.0);
            break;
        case AtomOp::project_g:
            if (lab.atom == 0) trips.emplace_back(i, i, 1.0);
            break;
        }
    }
    SpMat m(space.dim(), space.dim());
    m.setFromTriplets(trips.begin(), trips.end());
    return {std::move(m), space};
}

LinearOperator identity_operator(const FockSpaceConfig& space) {
    SpMat m(space.dim(), space.dim());
    m.setIdentity();
    return {std::move(m), space};
}

LinearOperator total_excitation_operator(const FockSpaceConfig& space) {
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(space.dim());
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        const double n = lab.atom + lab.n_a + lab.n_b;
        if (n > 0) trips.emplace_back(i, i, n);
    }
    SpMat m(space.dim(), space.dim());
    m.setFromTriplets(trips.begin(), trips.end());
    return {std::move(m), space};
}

int default_fock_n_max(int n) { return n; }

int default_coherent_n_max(double mean) {
    if (mean == 0.0) return 0;
    // Start from mean + 4*sqrt(mean) and grow until the Poisson tail beyond
    // n_max drops to the 1e-4 deficit bound enforced by make_field_state.
    int n_max = static_cast<int>(std::ceil(mean + 4.0 * std::sqrt(mean)));
    double kept = 0.0, p = std::exp(-mean);
    for (int n = 0; n <= n_max; ++n) {
        kept += p;
        p *= mean / (n + 1);
    }
    while (1.0 - kept > 1e-4) {
        kept += p;
        p *= mean / (++n_max + 1);
    }
    return n_max;
}

int default_thermal_n_max(double nbar) {
    if (nbar <= 0.0) return 0;
    // Tail mass of the geometric law beyond n_max is (nbar/(1+nbar))^(n_max+1).
    const double r = nbar / (1.0 + nbar);
    int n_max = static_cast<int>(std::ceil(std::log(1e-4) / std::log(r))) - 1;
    while (std::pow(r, n_max + 1) > 1e-4) ++n_max;
    return n_max;
}

int default_n_max(const FieldSpec& spec) {
    switch (spec.kind) {
    case FieldSpec::Kind::fock:
        return default_fock_n_max(static_cast<int>(spec.value));
    case FieldSpec::Kind::coherent:
        return default_coherent_n_max(spec.value * spec.value);
    case FieldSpec::Kind::thermal:
        return default_thermal_n_max(spec.value);
    }
    return 0;
}

FieldState make_field_state(const FieldSpec& spec, int n_max) {
    if (n_max < 0) throw ConfigError("field n_max must be >= 0");
    const int d = n_max + 1;
    Mat rho = Mat::Zero(d, d);
    switch (spec.kind) {
    case FieldSpec::Kind::fock: {
        const int n = static_cast<int>(spec.value);
        if (n < 0 || n > n_max)
            throw ConfigError("fock photon number " + std::to_string(n) +
                              " exceeds n_max " + std::to_string(n_max));
        rho(n, n) = 1.0;
        break;
    }
    case FieldSpec::Kind::coherent: {
        const double alpha = spec.value;
        // Amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!), built recursively.
        Vec amp(d);
        double log_norm = -alpha * alpha / 2.0;
        amp(0) = std::exp(log_norm);
        for (int n = 1; n < d; ++n)
            amp(n) = amp(n - 1) * alpha / std::sqrt(double(n));
        const double captured = amp.squaredNorm();
        if (1.0 - captured > 1e-4)
            throw ConfigError("coherent state truncation deficit " +
                              std::to_string(1.0 - captured) + " exceeds 1e-4; raise n_max above " +
                              std::to_string(n_max));
        amp /= std::sqrt(captured); // renormalize after truncation
        rho = amp * amp.adjoint();
        break;
    }
    case FieldSpec::Kind::thermal: {
        const double nbar = spec.value;
        if (nbar < 0.0) throw ConfigError("thermal occupation must be >= 0");
        double total = 0.0;
        for (int n = 0; n < d; ++n) {
            const double p = std::pow(nbar / (1.0 + nbar), n) / (1.0 + nbar);
            rho(n, n) = p;
            total += p;
        }
        if (1.0 - total > 1e-4)
            throw ConfigError("thermal state truncation deficit " +
                              std::to_string(1.0 - total) + " exceeds 1e-4; raise n_max above " +
                              std::to_string(n_max));
        rho /= total; // renormalize after truncation
        break;
    }
    }
    return {std::move(rho), n_max};
}

DensityOperator compose_initial_state(AtomLevel atom, const FieldState& field_a,
                                      const FieldState& field_b,
                                      const FockSpaceConfig& space) {
    if (field_a.n_max != space.n_max_a || field_b.n_max != space.n_max_b)
        throw ConfigError("field truncations do not match the space");
    Mat rho = Mat::Zero(space.dim(), space.dim());
    const int at = static_cast<int>(atom);
    for (int na = 0; na <= space.n_max_a; ++na)
        for (int nb = 0; nb <= space.n_max_b; ++nb) {
            const int row = basis_index({at, na, nb}, space);
            for (int ma = 0; ma <= space.n_max_a; ++ma) {
                const cplx fa = field_a.elements(na, ma);
                if (fa == cplx(0.0)) continue;
                for (int mb = 0; mb <= space.n_max_b; ++mb) {
                    const cplx fb = field_b.elements(nb, mb);
                    if (fb == cplx(0.0)) continue;
                    rho(row, basis_index({at, ma, mb}, space)) = fa * fb;
                }
            }
        }
    return {std::move(rho), space};
}

StateVector basis_state(AtomLevel atom, int n_a, int n_b, const FockSpaceConfig& space) {
    Vec psi = Vec::Zero(space.dim());
    psi(basis_index(atom, n_a, n_b, space)) = 1.0;
    return {std::move(psi), space};
}

DensityOperator density_from_state(const StateVector& psi) {
    return {psi.amplitudes * psi.amplitudes.adjoint(), psi.space};
}

std::vector<double> photon_distribution(const DensityOperator& rho, Mode mode) {
    const FockSpaceConfig& space = rho.space;
    const int n_max = (mode == Mode::a) ? space.n_max_a : space.n_max_b;
    std::vector<double> p(n_max + 1, 0.0);
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        p[(mode == Mode::a) ? lab.n_a : lab.n_b] += rho.elements(i, i).real();
    }
    return p;
}

Eigen::MatrixXd joint_photon_distribution(const DensityOperator& rho) {
    const FockSpaceConfig& space = rho.space;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
    for (int i = 0; i < space.dim(); ++i) {
        const BasisLabel lab = basis_label(i, space);
        p(lab.n_a, lab.n_b) += rho.elements(i, i).real();
    }
    return p;
}

ConditionalState conditional_field_state(const DensityOperator& rho, AtomLevel level) {
    const FockSpaceConfig& space = rho.space;
    const int at = static_cast<int>(level);
    const int fd = space.field_dim();
    const int offset = at * fd; // block of the chosen atom level
    Mat fields = rho.elements.block(offset, offset, fd, fd);
    const double prob = fields.trace().real();
    if (prob < 1e-12)
        throw NumericsError("conditional_field_state: projection probability " +
                            std::to_string(prob) + " below 1e-12");
    fields /= prob;
    return {prob, std::move(fields), space};
}

Eigen::MatrixXd joint_photon_distribution(const ConditionalState& cond) {
    const FockSpaceConfig& space = cond.space;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(space.dim_a(), space.dim_b());
    for (int na = 0; na <= space.n_max_a; ++na)
        for (int nb = 0; nb <= space.n_max_b; ++nb)
            p(na, nb) = cond.fields(na * space.dim_b() + nb, na * space.dim_b() + nb).real();
    return p;
}

cplx expectation(const LinearOperator& op, const DensityOperator& rho) {
    if (!(op.space == rho.space))
        throw ConfigError("expectation: operator and state spaces differ");
    // trace(op * rho)
    cplx tr = 0.0;
    for (int k = 0; k < op.elements.outerSize(); ++k)
        for (SpMat::InnerIterator it(op.elements, k); it; ++it)
            tr += it.value() * rho.elements(it.col(), it.row());
    return tr;
}

cplx expectation(const LinearOperator& op, const StateVector& psi) {
    if (!(op.space == psi.space))
        throw ConfigError("expectation: operator and state spaces differ");
    return psi.amplitudes.dot(op.elements * psi.amplitudes);
}

double atom_population(const DensityOperator& rho, AtomLevel level) {
    const int fd = rho.space.field_dim();
    const int offset = static_cast<int>(level) * fd;
    double p = 0.0;
    for (int i = 0; i < fd; ++i) p += rho.elements(offset + i, offset + i).real();
    return p;
}

double min_eigenvalue(const DensityOperator& rho) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho.elements, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void validate_density(const DensityOperator& rho, double herm_tol, double trace_tol,
                      double eig_tol) {
    const Mat& m = rho.elements;
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol)
        throw NumericsError("density operator not Hermitian: max asymmetry " +
                            std::to_string(herm));
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > trace_tol)
        throw NumericsError("density operator trace " + std::to_string(tr) +
                            " deviates from 1");
    const double lam = min_eigenvalue(rho);
    if (lam < -eig_tol)
        throw NumericsError("density operator min eigenvalue " + std::to_string(lam) +
                            " below -" + std::to_string(eig_tol));
}

} // namespace ramansim
