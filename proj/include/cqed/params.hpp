// params.hpp — system parameters and detector/drive calibration.
//
// Frame and sign conventions (used everywhere downstream):
//   - laser rotating frame, H = -delta_c a'a - delta_a s+s- + g(a's- + a s+)
//     + eta (a + a'), with delta_c = omega_L - omega_c, delta_a = omega_L -
//     omega_a.
//   - kappa and gamma are HALF widths: cavity field and atomic polarization
//     decay rates.  Photon number decays at 2*kappa, excited population at
//     2*gamma.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cqed {

struct SystemParams {
    double g = 0.0;        // atom-cavity coupling (rad/us)
    double kappa = 0.0;    // cavity field decay, half width (rad/us)
    double gamma = 0.0;    // atomic polarization decay, half width (rad/us)
    double delta_a = 0.0;  // omega_L - omega_a (rad/us)
    double delta_c = 0.0;  // omega_L - omega_c (rad/us)
    double eta = 0.0;      // coherent drive amplitude (rad/us)
    int n_fock = 15;       // photon number states kept (|0> .. |n_fock-1>)

    // Hilbert space dimension: atom {g,e} x Fock.
    int dim() const { return 2 * n_fock; }

    void validate() const {
        auto bad = [](double x) { return !std::isfinite(x); };
        if (bad(g) || bad(kappa) || bad(gamma) || bad(delta_a) || bad(delta_c) || bad(eta))
            throw std::invalid_argument("SystemParams: non-finite entry");
        if (kappa <= 0.0) throw std::invalid_argument("SystemParams: kappa must be > 0");
        if (gamma <= 0.0) throw std::invalid_argument("SystemParams: gamma must be > 0");
        if (g < 0.0) throw std::invalid_argument("SystemParams: g must be >= 0");
        if (eta < 0.0) throw std::invalid_argument("SystemParams: eta must be >= 0");
        if (n_fock < 2 || n_fock > 24)
            throw std::invalid_argument("SystemParams: n_fock must be in [2, 24], got " +
                                        std::to_string(n_fock));
    }
};

// Input/output power bookkeeping.  Input: an empty resonant cavity driven
// with p_in reaches <a'a> = photons_per_pw_in * p_in.  Output: one
// intracavity photon corresponds to pw_out_per_photon transmitted pW.
// dark_offset_fw is added to every detected power before counting and
// subtracted again when aggregated counts are converted back to power.
struct PowerCalibration {
    double photons_per_pw_in = 0.9;   // <a'a> per pW of input power, on resonance
    double pw_out_per_photon = 1.0;   // transmitted pW per intracavity photon
    double dark_offset_fw = 0.5;      // detector dark-count power equivalent (fW)

    void validate() const {
        if (!(photons_per_pw_in > 0.0) || !(pw_out_per_photon > 0.0))
            throw std::invalid_argument("PowerCalibration: calibration factors must be > 0");
        if (dark_offset_fw < 0.0 || !std::isfinite(dark_offset_fw))
            throw std::invalid_argument("PowerCalibration: dark offset must be >= 0");
    }
};

}  // namespace cqed
