// steady_state.hpp — Lindblad master equation, steady state, transmission.
//
// drho/dt = -i[H,rho] + kappa D[a]rho + gamma D[s-]rho with half-width rates
// and D[C]rho = 2 C rho C' - C'C rho - rho C'C.  The steady state solves
// L vec(rho) = 0 with one row of L replaced by the trace functional
// (column-major vec, so vec(A rho B) = (B^T kron A) vec(rho)).

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "cqed/operators.hpp"
#include "cqed/params.hpp"

namespace cqed {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Drive amplitude giving <a'a> = photons_per_pw_in * p_in for the empty
// resonant cavity (where <a'a> = eta^2/kappa^2): eta = kappa sqrt(c * p).
inline double drive_from_power(double p_in_pw, double kappa, const PowerCalibration& cal) {
    if (p_in_pw < 0.0 || !std::isfinite(p_in_pw))
        throw std::invalid_argument("drive_from_power: input power must be >= 0");
    if (kappa <= 0.0) throw std::invalid_argument("drive_from_power: kappa must be > 0");
    cal.validate();
    return kappa * std::sqrt(cal.photons_per_pw_in * p_in_pw);
}

// Generic Lindblad superoperator for given H and collapse terms (rate, C),
// acting on column-stacked density matrices.
inline Eigen::MatrixXcd lindblad_superoperator(
    const Eigen::MatrixXcd& hamiltonian,
    const std::vector<std::pair<double, Eigen::MatrixXcd>>& collapse) {
    const std::complex<double> im(0.0, 1.0);
    const Eigen::Index d = hamiltonian.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    Eigen::MatrixXcd sup =
        -im * (Eigen::kroneckerProduct(id, hamiltonian).eval() -
               Eigen::kroneckerProduct(hamiltonian.transpose(), id).eval());
    for (const auto& [rate, c] : collapse) {
        const Eigen::MatrixXcd cdc = c.adjoint() * c;
        sup += rate * (2.0 * Eigen::kroneckerProduct(c.conjugate(), c).eval() -
                       Eigen::kroneckerProduct(id, cdc).eval() -
                       Eigen::kroneckerProduct(cdc.transpose(), id).eval());
    }
    return sup;
}

inline Eigen::MatrixXcd build_liouvillian(const SystemParams& p, const OperatorSet& ops) {
    const Eigen::MatrixXcd h = build_hamiltonian(p, ops);
    return lindblad_superoperator(h, {{p.kappa, ops.a}, {p.gamma, ops.sigma_minus}});
}

inline Eigen::MatrixXcd build_liouvillian(const SystemParams& p) {
    return build_liouvillian(p, build_operators(p.n_fock));
}

namespace detail {

// Solve L x = 0, tr(x) = 1 for a generic Lindblad superoperator over a
// d-dimensional Hilbert space.  Returns the hermitized density matrix;
// throws SolverError if the residual exceeds tol_scale * 1e-10.
inline Eigen::MatrixXcd solve_steady(const Eigen::MatrixXcd& liouvillian, Eigen::Index d,
                                     double tol_scale) {
    const Eigen::Index n2 = liouvillian.rows();
    Eigen::MatrixXcd lhs = liouvillian;
    // Trace row: diagonal entries of rho sit at vec index i*d + i.
    lhs.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) lhs(0, i * d + i) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n2);
    rhs(0) = 1.0;

    Eigen::VectorXcd x;
    if (n2 >= 400) {
        Eigen::SparseMatrix<std::complex<double>> lhs_sp = lhs.sparseView(1.0, 1e-300);
        lhs_sp.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
        lu.compute(lhs_sp);
        if (lu.info() != Eigen::Success)
            throw SolverError("steady_state: sparse factorization failed");
        x = lu.solve(rhs);
    } else {
        x = Eigen::PartialPivLU<Eigen::MatrixXcd>(lhs).solve(rhs);
    }

    const double residual = (liouvillian * x).cwiseAbs().maxCoeff();
    const double tol = 1e-10 * tol_scale;
    if (!std::isfinite(residual) || residual > tol) {
        // One retry with a rank-revealing decomposition before giving up.
        x = Eigen::FullPivLU<Eigen::MatrixXcd>(lhs).solve(rhs);
        const double retry = (liouvillian * x).cwiseAbs().maxCoeff();
        if (!std::isfinite(retry) || retry > tol)
            throw SolverError("steady_state: residual " + std::to_string(retry) +
                              " exceeds tolerance " + std::to_string(tol));
    }

    Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(x.data(), d, d);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return rho;
}

}  // namespace detail

inline Eigen::MatrixXcd steady_state(const SystemParams& p, const OperatorSet& ops) {
    p.validate();
    const double scale = std::max({p.kappa, p.gamma, p.g, std::abs(p.delta_a),
                                   std::abs(p.delta_c)});
    return detail::solve_steady(build_liouvillian(p, ops), p.dim(), scale);
}

inline Eigen::MatrixXcd steady_state(const SystemParams& p) {
    return steady_state(p, build_operators(p.n_fock));
}

struct SteadyObservables {
    double n_photon = 0.0;         // <a'a>
    double p_excited = 0.0;        // <s+s->
    double re_adag_sigma = 0.0;    // Re <a's->  (dipole-force factor)
    double dipole_variance = 0.0;  // Var(a's- + a s+)
};

inline SteadyObservables steady_observables(const Eigen::MatrixXcd& rho,
                                            const OperatorSet& ops) {
    SteadyObservables obs;
    obs.n_photon = (rho * ops.number_op).trace().real();
    obs.p_excited = (rho * ops.excitation_op).trace().real();
    const Eigen::MatrixXcd x = ops.a_dagger * ops.sigma_minus;
    const std::complex<double> adag_sigma = (rho * x).trace();
    obs.re_adag_sigma = adag_sigma.real();
    const Eigen::MatrixXcd dip = x + x.adjoint();
    const double mean = (rho * dip).trace().real();
    obs.dipole_variance = (rho * dip * dip).trace().real() - mean * mean;
    return obs;
}

inline double transmitted_power_fw(double n_photon, const PowerCalibration& cal) {
    return cal.pw_out_per_photon * n_photon * 1000.0;
}

// Convenience: steady-state transmitted power for one parameter point.
inline double transmission(const SystemParams& p, const PowerCalibration& cal) {
    const OperatorSet ops = build_operators(p.n_fock);
    return transmitted_power_fw(steady_observables(steady_state(p, ops), ops).n_photon, cal);
}

// ----- single-excitation (linear/classical) model ---------------------------

// Weak-drive field amplitude; only the modulus is observable.
inline std::complex<double> single_excitation_alpha(const SystemParams& p) {
    const std::complex<double> im(0.0, 1.0);
    const std::complex<double> da(p.gamma, -p.delta_a);
    const std::complex<double> dc(p.kappa, -p.delta_c);
    return p.eta * da / (dc * da + p.g * p.g);
}

inline double single_excitation_photon(const SystemParams& p) {
    return std::norm(single_excitation_alpha(p));
}

inline double single_excitation_excitation(const SystemParams& p) {
    const double d2 = p.gamma * p.gamma + p.delta_a * p.delta_a;
    return p.g * p.g * single_excitation_photon(p) / d2;
}

// Re <a's-> in the linear model: g |alpha|^2 delta_a / (gamma^2 + delta_a^2).
// The sign flips at atomic resonance, which is what makes the dipole force
// attractive for red and repulsive for blue atomic detuning.
inline double single_excitation_re_adag_sigma(const SystemParams& p) {
    const double d2 = p.gamma * p.gamma + p.delta_a * p.delta_a;
    return p.g * single_excitation_photon(p) * p.delta_a / d2;
}

// ----- first-doublet truncation ----------------------------------------------

// Master-equation solve truncated after the first dressed doublet: basis
// {|g,0>, |g,1>, |e,0>}.  Its weak-drive limit reproduces the analytic
// single-excitation amplitude; at finite drive it saturates instead of
// developing multi-photon resonances, which is exactly the "classical"
// comparison model.  Returns a 3x3 density matrix.
inline Eigen::MatrixXcd steady_state_first_doublet(const SystemParams& p) {
    p.validate();
    Eigen::MatrixXcd a3 = Eigen::MatrixXcd::Zero(3, 3);
    a3(0, 1) = 1.0;  // |g0><g1|
    Eigen::MatrixXcd sm3 = Eigen::MatrixXcd::Zero(3, 3);
    sm3(0, 2) = 1.0;  // |g0><e0|
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
    h(1, 1) = -p.delta_c;
    h(2, 2) = -p.delta_a;
    h(1, 2) = p.g;  // g (a's- + a s+) restricted to the doublet
    h(2, 1) = p.g;
    h += p.eta * (a3 + a3.adjoint()).eval();
    const Eigen::MatrixXcd sup = lindblad_superoperator(h, {{p.kappa, a3}, {p.gamma, sm3}});
    const double scale = std::max({p.kappa, p.gamma, p.g, std::abs(p.delta_a),
                                   std::abs(p.delta_c)});
    return detail::solve_steady(sup, 3, scale);
}

inline SteadyObservables first_doublet_observables(const SystemParams& p) {
    const Eigen::MatrixXcd rho = steady_state_first_doublet(p);
    SteadyObservables obs;
    obs.n_photon = rho(1, 1).real();
    obs.p_excited = rho(2, 2).real();
    // a's- restricted to the doublet is |g1><e0|, so <a's-> = rho(e0, g1).
    const std::complex<double> adag_sigma = rho(2, 1);
    obs.re_adag_sigma = adag_sigma.real();
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(3, 3);
    x(1, 2) = 1.0;
    const Eigen::MatrixXcd dip = x + x.adjoint().eval();
    const double mean = (rho * dip).trace().real();
    obs.dipole_variance = (rho * dip * dip).trace().real() - mean * mean;
    return obs;
}

}  // namespace cqed
