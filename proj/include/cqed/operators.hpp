// operators.hpp — Jaynes-Cummings operators, Hamiltonian, dressed ladder.
//
// Basis: |atom> x |photon>, indexed row-major as atom*n_fock + photon with
// atom 0 = ground, 1 = excited.  For eta = 0 the Hamiltonian is block
// diagonal in the total excitation number m = photon + atom; each complete
// m >= 1 block is a 2x2 in {|g,m>, |e,m-1>} whose eigenvalues are the
// rotating-frame dressed frequencies (lab frame minus m*omega_L).

#pragma once

#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "cqed/params.hpp"

namespace cqed {

struct OperatorSet {
    int n_fock = 0;
    Eigen::MatrixXcd a;              // photon annihilation
    Eigen::MatrixXcd a_dagger;
    Eigen::MatrixXcd sigma_minus;    // |g><e|
    Eigen::MatrixXcd sigma_plus;
    Eigen::MatrixXcd number_op;      // a'a
    Eigen::MatrixXcd excitation_op;  // s+s- (excited-state projector)
};

inline OperatorSet build_operators(int n_fock) {
    if (n_fock < 2) throw std::invalid_argument("build_operators: n_fock must be >= 2");
    Eigen::MatrixXcd a_mode = Eigen::MatrixXcd::Zero(n_fock, n_fock);
    for (int n = 1; n < n_fock; ++n) a_mode(n - 1, n) = std::sqrt(double(n));
    Eigen::MatrixXcd id2 = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd idm = Eigen::MatrixXcd::Identity(n_fock, n_fock);
    Eigen::MatrixXcd sm2 = Eigen::MatrixXcd::Zero(2, 2);
    sm2(0, 1) = 1.0;  // |g><e|

    OperatorSet ops;
    ops.n_fock = n_fock;
    ops.a = Eigen::kroneckerProduct(id2, a_mode);
    ops.a_dagger = ops.a.adjoint();
    ops.sigma_minus = Eigen::kroneckerProduct(sm2, idm);
    ops.sigma_plus = ops.sigma_minus.adjoint();
    ops.number_op = ops.a_dagger * ops.a;
    ops.excitation_op = ops.sigma_plus * ops.sigma_minus;
    return ops;
}

// H = -delta_c a'a - delta_a s+s- + g (a's- + a s+) + eta (a + a').
inline Eigen::MatrixXcd build_hamiltonian(const SystemParams& p, const OperatorSet& ops) {
    p.validate();
    if (ops.n_fock != p.n_fock)
        throw std::invalid_argument("build_hamiltonian: operator set built for different n_fock");
    return -p.delta_c * ops.number_op - p.delta_a * ops.excitation_op +
           p.g * (ops.a_dagger * ops.sigma_minus + ops.a * ops.sigma_plus) +
           p.eta * (ops.a + ops.a_dagger);
}

inline Eigen::MatrixXcd build_hamiltonian(const SystemParams& p) {
    return build_hamiltonian(p, build_operators(p.n_fock));
}

// Lab-frame dressed frequencies of the (n+1)-excitation manifold:
//   omega_{n+1,-/+} = n*omega_c + (omega_a+omega_c)/2 -/+
//                     sqrt(4 g^2 (n+1) + (omega_a-omega_c)^2)/2.
// Returns (minus, plus); n = 0 gives the vacuum-Rabi normal modes.
inline std::pair<double, double> dressed_frequencies(double omega_a, double omega_c,
                                                     double g, int n) {
    if (n < 0) throw std::invalid_argument("dressed_frequencies: n must be >= 0");
    if (g < 0.0) throw std::invalid_argument("dressed_frequencies: g must be >= 0");
    const double center = n * omega_c + 0.5 * (omega_a + omega_c);
    const double delta_ac = omega_a - omega_c;
    const double half_split = 0.5 * std::sqrt(4.0 * g * g * (n + 1) + delta_ac * delta_ac);
    return {center - half_split, center + half_split};
}

// Rotating-frame eigenvalue of an m-excitation dressed state <-> lab frame.
inline double rotating_to_lab(double eig_rotating, int m_excitation, double omega_laser) {
    return eig_rotating + m_excitation * omega_laser;
}
inline double lab_to_rotating(double eig_lab, int m_excitation, double omega_laser) {
    return eig_lab - m_excitation * omega_laser;
}

// Cavity detunings at which the laser drives the (n+1)-photon transition
// |g,0> -> |n+1,-/+> for fixed atom-cavity detuning delta_ac = omega_a -
// omega_c (the resonance condition (n+1) omega_L = omega_{n+1,-/+}):
//   delta_c = [delta_ac -/+ sqrt(4 g^2 (n+1) + delta_ac^2)] / (2 (n+1)).
// n >= 1; the n = 0 case is the normal-mode pair, use dressed_frequencies.
inline std::pair<double, double> multiphoton_resonance_detunings(double g, double delta_ac,
                                                                 int n) {
    if (n < 1)
        throw std::invalid_argument(
            "multiphoton_resonance_detunings: n must be >= 1 (n = 0 is the normal-mode case, "
            "use dressed_frequencies)");
    if (g < 0.0) throw std::invalid_argument("multiphoton_resonance_detunings: g must be >= 0");
    const double root = std::sqrt(4.0 * g * g * (n + 1) + delta_ac * delta_ac);
    const double denom = 2.0 * (n + 1);
    return {(delta_ac - root) / denom, (delta_ac + root) / denom};
}

// Same resonance condition with the atom held on resonance (delta_a = 0, so
// delta_ac tracks delta_c).  The self-consistent loci close to delta_c =
// -/+ g/sqrt(n).
inline std::pair<double, double> on_atom_resonance_loci(double g, int n) {
    if (n < 1) throw std::invalid_argument("on_atom_resonance_loci: n must be >= 1");
    if (g < 0.0) throw std::invalid_argument("on_atom_resonance_loci: g must be >= 0");
    const double r = g / std::sqrt(double(n));
    return {-r, +r};
}

}  // namespace cqed
