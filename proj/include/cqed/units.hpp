// units.hpp — unit conventions and physical constants.
//
// Internal convention: angular frequencies and rates in rad/us, time in us,
// length in um.  Handy identities: 1 MHz ordinary frequency = 2*pi rad/us,
// and 1 m/s = 1 um/us (velocities need no conversion factor).
// All config, CLI and file I/O use ordinary MHz (omega/2pi) and pW; the
// conversions below are applied exactly once at those boundaries.

#pragma once

#include <cmath>

namespace cqed {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

// Ordinary frequency f [MHz] -> angular frequency [rad/us].
inline constexpr double mhz_to_rad_us(double f_mhz) { return two_pi * f_mhz; }
inline constexpr double rad_us_to_mhz(double w) { return w / two_pi; }

// SI constants (2019 exact values where defined).
inline constexpr double hbar_si = 1.054571817e-34;       // J s
inline constexpr double h_planck_si = 6.62607015e-34;    // J s
inline constexpr double c_light_si = 2.99792458e8;       // m/s
inline constexpr double k_boltzmann_si = 1.380649e-23;   // J/K
inline constexpr double atomic_mass_si = 1.66053906660e-27;  // kg

// 85Rb, the atom trapped in the cavity.
inline constexpr double rb85_mass_si = 84.911789738 * atomic_mass_si;  // kg

// hbar/m for 85Rb in um^2/us (1 m^2/s = 1e6 um^2/us).  Recoil velocity is
// hbar*k/m = hbar_over_mass * (2*pi/lambda_um), about 6.0e-3 um/us at 780 nm.
inline constexpr double hbar_over_mass = hbar_si / rb85_mass_si * 1e6;

// Photon counting: detected photons per (fW * us) at wavelength lambda_um,
// i.e. 1e-15 J/s divided by the photon energy, per microsecond.
inline double counts_per_fw_us(double lambda_um) {
    const double photon_energy = h_planck_si * c_light_si / (lambda_um * 1e-6);  // J
    return 1e-15 / photon_energy * 1e-6;
}

// One-axis thermal velocity spread sqrt(kB*T/m) for T in uK.  The result of
// the SI expression is m/s, which equals um/us, so no factor is needed.
inline double thermal_velocity_sigma(double temperature_uk) {
    return std::sqrt(k_boltzmann_si * temperature_uk * 1e-6 / rb85_mass_si);
}

}  // namespace cqed
