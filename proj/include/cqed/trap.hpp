// trap.hpp — standing-wave dipole trap and probe-mode geometry.
//
// The probe mode and the trap share the cavity axis (z) but differ in
// wavelength by roughly two free spectral ranges, so trap antinodes slide
// out of register with probe antinodes away from the cavity center.  The
// trap light also Stark-shifts the atomic transition upward, so the
// effective atomic detuning is delta_a_bare - stark_local.
//
// Fields at position r = (x, y, z) in um:
//   g(r)       = g0 |cos(2 pi z / lambda_probe)| exp(-(x^2+y^2)/w_probe^2)
//   U(r)/hbar  = -trap_depth cos^2(2 pi z / lambda_trap) exp(-2(x^2+y^2)/w_trap^2)
//   stark(r)   = stark_max cos^2(2 pi z / lambda_trap) exp(-2(x^2+y^2)/w_trap^2)

#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "cqed/params.hpp"
#include "cqed/units.hpp"

namespace cqed {

struct TrapGeometry {
    double g0 = mhz_to_rad_us(16.0);          // coupling at a shared antinode (rad/us)
    double lambda_probe_um = 0.7802;
    double lambda_trap_um = 0.7853;
    double waist_probe_um = 29.0;
    double waist_trap_um = 29.0;
    double stark_max = mhz_to_rad_us(35.0);   // transition shift at trap antinode (rad/us)
    double trap_depth = mhz_to_rad_us(17.5);  // U0/hbar; ground-state shift, ~stark_max/2
    double box_z_um = 30.0;                   // simulation box half-extents
    double box_rho_um = 40.0;

    void validate() const {
        if (!(g0 >= 0.0) || !(lambda_probe_um > 0.0) || !(lambda_trap_um > 0.0) ||
            !(waist_probe_um > 0.0) || !(waist_trap_um > 0.0) || !(stark_max >= 0.0) ||
            !(trap_depth >= 0.0) || !(box_z_um > 0.0) || !(box_rho_um > 0.0))
            throw std::invalid_argument("TrapGeometry: invalid entry");
    }

    double k_probe() const { return two_pi / lambda_probe_um; }
    double k_trap() const { return two_pi / lambda_trap_um; }
};

inline double coupling_at(const Eigen::Vector3d& r, const TrapGeometry& geo) {
    const double rho2 = r.x() * r.x() + r.y() * r.y();
    return geo.g0 * std::abs(std::cos(geo.k_probe() * r.z())) *
           std::exp(-rho2 / (geo.waist_probe_um * geo.waist_probe_um));
}

inline Eigen::Vector3d coupling_gradient(const Eigen::Vector3d& r, const TrapGeometry& geo) {
    const double w2 = geo.waist_probe_um * geo.waist_probe_um;
    const double rho2 = r.x() * r.x() + r.y() * r.y();
    const double kp = geo.k_probe();
    const double c = std::cos(kp * r.z());
    const double envelope = std::exp(-rho2 / w2);
    const double g_here = geo.g0 * std::abs(c) * envelope;
    Eigen::Vector3d grad;
    grad.x() = g_here * (-2.0 * r.x() / w2);
    grad.y() = g_here * (-2.0 * r.y() / w2);
    const double sign = (c > 0.0) - (c < 0.0);
    grad.z() = -geo.g0 * envelope * kp * std::sin(kp * r.z()) * sign;
    return grad;
}

struct TrapFields {
    double potential = 0.0;  // U/hbar, rad/us (negative in the wells)
    double stark = 0.0;      // transition shift, rad/us
};

inline TrapFields trap_fields_at(const Eigen::Vector3d& r, const TrapGeometry& geo) {
    const double w2 = geo.waist_trap_um * geo.waist_trap_um;
    const double rho2 = r.x() * r.x() + r.y() * r.y();
    const double c = std::cos(geo.k_trap() * r.z());
    const double intensity = c * c * std::exp(-2.0 * rho2 / w2);
    return {-geo.trap_depth * intensity, geo.stark_max * intensity};
}

// Acceleration from the trap potential, (hbar/m) * (-grad U/hbar), um/us^2.
inline Eigen::Vector3d trap_accel(const Eigen::Vector3d& r, const TrapGeometry& geo) {
    const double w2 = geo.waist_trap_um * geo.waist_trap_um;
    const double rho2 = r.x() * r.x() + r.y() * r.y();
    const double kt = geo.k_trap();
    const double c = std::cos(kt * r.z());
    const double envelope = std::exp(-2.0 * rho2 / w2);
    // dU/dz = trap_depth * sin(2 k z) * k * envelope;  dU/dx = U * (-4x/w^2)
    Eigen::Vector3d grad_u;
    grad_u.z() = geo.trap_depth * kt * std::sin(2.0 * kt * r.z()) * envelope;
    const double u_here = -geo.trap_depth * c * c * envelope;
    grad_u.x() = u_here * (-4.0 * r.x() / w2);
    grad_u.y() = u_here * (-4.0 * r.y() / w2);
    return -hbar_over_mass * grad_u;
}

// Local system parameters for an atom at r: coupling from the probe mode,
// atomic detuning Stark-shifted by the local trap intensity.
// Small-oscillation angular frequency at a trap-well bottom along the
// cavity axis (rad/us); the fastest timescale a motion integrator must
// resolve.  U/hbar = -depth cos^2(k z) => omega = k sqrt(2 (hbar/m) depth).
inline double axial_trap_frequency(const TrapGeometry& geo) {
    return geo.k_trap() * std::sqrt(2.0 * hbar_over_mass * geo.trap_depth);
}

inline SystemParams local_system_params(const SystemParams& base_bare, const TrapGeometry& geo,
                                        const Eigen::Vector3d& r) {
    SystemParams p = base_bare;
    p.g = coupling_at(r, geo);
    p.delta_a = base_bare.delta_a - trap_fields_at(r, geo).stark;
    return p;
}

inline bool inside_box(const Eigen::Vector3d& r, const TrapGeometry& geo) {
    const double rho2 = r.x() * r.x() + r.y() * r.y();
    return std::abs(r.z()) <= geo.box_z_um && rho2 <= geo.box_rho_um * geo.box_rho_um;
}

}  // namespace cqed
