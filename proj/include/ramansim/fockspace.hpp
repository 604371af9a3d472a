#pragma once

// Truncated Hilbert space for a two-level atom {g, e} coupled to two cavity
// modes M_a and M_b.
//
// Basis ordering: index = (atom*(n_max_a+1) + n_a)*(n_max_b+1) + n_b,
// i.e. the atom level varies slowest and n_b fastest.  Every operator and
// state in this project uses that convention, so serialized data stays
// comparable across tools and runs.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ramansim/errors.hpp"

namespace ramansim {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

enum class AtomLevel { g = 0, e = 1 };
enum class Mode { a, b };
enum class ModeOp { annihilate, create, number };
enum class AtomOp { lower, raise, project_e, project_g };

struct FockSpaceConfig {
    int n_max_a = 0;
    int n_max_b = 0;
    static constexpr int atom_dim = 2;

    int dim_a() const { return n_max_a + 1; }
    int dim_b() const { return n_max_b + 1; }
    int field_dim() const { return dim_a() * dim_b(); }
    int dim() const { return atom_dim * field_dim(); }

    bool operator==(const FockSpaceConfig&) const = default;
};

struct BasisLabel {
    int atom; // 0 = g, 1 = e
    int n_a;
    int n_b;
    bool operator==(const BasisLabel&) const = default;
};

int basis_index(AtomLevel atom, int n_a, int n_b, const FockSpaceConfig& space);
int basis_index(const BasisLabel& label, const FockSpaceConfig& space);
BasisLabel basis_label(int index, const FockSpaceConfig& space);

struct StateVector {
    Vec amplitudes;
    FockSpaceConfig space;
};

struct DensityOperator {
    Mat elements;
    FockSpaceConfig space;
};

struct LinearOperator {
    SpMat elements;
    FockSpaceConfig space;
};

// Single-mode field state (dimension n_max+1), used as a tensor factor.
struct FieldState {
    Mat elements;
    int n_max = 0;
};

struct FieldSpec {
    enum class Kind { fock, coherent, thermal } kind = Kind::fock;
    // fock: photon number; coherent: amplitude alpha (mean = alpha^2);
    // thermal: mean occupation.
    double value = 0.0;

    static FieldSpec vacuum() { return {Kind::fock, 0.0}; }
    static FieldSpec fock(int n) { return {Kind::fock, double(n)}; }
    static FieldSpec coherent_mean(double mean);
    static FieldSpec thermal(double nbar) { return {Kind::thermal, nbar}; }
};

LinearOperator build_mode_operator(Mode mode, ModeOp kind, const FockSpaceConfig& space);
LinearOperator build_atomic_operator(AtomOp kind, const FockSpaceConfig& space);
LinearOperator identity_operator(const FockSpaceConfig& space);
// N = project_e + n_a + n_b (total excitation number).
LinearOperator total_excitation_operator(const FockSpaceConfig& space);

// Truncation defaults; both keep the discarded population below 1e-4.
int default_fock_n_max(int n);
int default_coherent_n_max(double mean);
int default_thermal_n_max(double nbar);
int default_n_max(const FieldSpec& spec);

FieldState make_field_state(const FieldSpec& spec, int n_max);

DensityOperator compose_initial_state(AtomLevel atom, const FieldState& field_a,
                                      const FieldState& field_b,
                                      const FockSpaceConfig& space);

StateVector basis_state(AtomLevel atom, int n_a, int n_b, const FockSpaceConfig& space);
DensityOperator density_from_state(const StateVector& psi);

std::vector<double> photon_distribution(const DensityOperator& rho, Mode mode);

// Joint field distribution p(n_a, n_b), traced over the atom.
Eigen::MatrixXd joint_photon_distribution(const DensityOperator& rho);

struct ConditionalState {
    double probability = 0.0;
    // Field-only density matrix, indexed by n_a*(n_max_b+1) + n_b.
    Mat fields;
    FockSpaceConfig space;
};

ConditionalState conditional_field_state(const DensityOperator& rho, AtomLevel level);

// Joint field distribution of a conditional (field-only) state.
Eigen::MatrixXd joint_photon_distribution(const ConditionalState& cond);

cplx expectation(const LinearOperator& op, const DensityOperator& rho);
cplx expectation(const LinearOperator& op, const StateVector& psi);

double atom_population(const DensityOperator& rho, AtomLevel level);

// Validation of the DensityOperator invariants (Hermiticity, unit trace,
// positivity).  Throws NumericsError when violated beyond tolerance.
void validate_density(const DensityOperator& rho, double herm_tol = 1e-10,
                      double trace_tol = 1e-8, double eig_tol = 1e-8);

double min_eigenvalue(const DensityOperator& rho);

} // namespace ramansim
