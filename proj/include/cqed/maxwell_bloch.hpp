// maxwell_bloch.hpp — factorized (semiclassical) steady states.
//
// Mean-field equations with <a> = alpha, <s-> = sigma, <s_z> = sigma_z:
//   0 = -(kappa - i delta_c) alpha + g sigma + eta
//   0 = -(gamma - i delta_a) sigma + g alpha sigma_z
//   0 = -2 gamma (sigma_z + 1) - 2 g (alpha sigma* + alpha* sigma)
// The coupling sign in the field equation is fixed by the weak-drive limit,
// which must reproduce the single-excitation amplitude alpha =
// eta / [(kappa - i delta_c) + g^2/(gamma - i delta_a)].
//
// Elimination gives sigma_z = -1/u with u = 1 + 2 g^2 x / (gamma^2 +
// delta_a^2), x = |alpha|^2, and a cubic state equation in u solved via the
// companion matrix.  Every real root with u >= 1 is a physical branch;
// stability is the sign of d(eta^2)/dx of the reduced map (positive-slope
// branches stable, the classic S-curve middle branch unstable).

#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cqed/params.hpp"
#include "cqed/scans_fwd.hpp"
#include "cqed/spectrum.hpp"
#include "cqed/steady_state.hpp"
#include "cqed/sweep.hpp"

namespace cqed {

struct MaxwellBlochState {
    std::complex<double> alpha;
    std::complex<double> sigma;
    double sigma_z = -1.0;
    double photon = 0.0;  // |alpha|^2
    bool stable = true;

    double p_excited() const { return 0.5 * (1.0 + sigma_z); }
};

// Residual of the three steady-state equations (max modulus).
inline double mb_residual(const SystemParams& p, const MaxwellBlochState& st) {
    const std::complex<double> im(0.0, 1.0);
    const std::complex<double> r1 =
        -(p.kappa - im * p.delta_c) * st.alpha + p.g * st.sigma + p.eta;
    const std::complex<double> r2 =
        -(p.gamma - im * p.delta_a) * st.sigma + p.g * st.alpha * st.sigma_z;
    const double r3 = -2.0 * p.gamma * (st.sigma_z + 1.0) -
                      4.0 * p.g * (st.alpha * std::conj(st.sigma)).real();
    return std::max({std::abs(r1), std::abs(r2), std::abs(r3)});
}

// All physical steady states, sorted by photon number ascending.
inline std::vector<MaxwellBlochState> mb_steady_states(const SystemParams& p) {
    p.validate();
    const std::complex<double> im(0.0, 1.0);
    const std::complex<double> dc(p.kappa, -p.delta_c);

    if (p.eta == 0.0) {
        return {MaxwellBlochState{{0.0, 0.0}, {0.0, 0.0}, -1.0, 0.0, true}};
    }
    if (p.g == 0.0) {
        const std::complex<double> alpha = p.eta / dc;
        return {MaxwellBlochState{alpha, {0.0, 0.0}, -1.0, std::norm(alpha), true}};
    }

    const double da2 = p.gamma * p.gamma + p.delta_a * p.delta_a;
    const double a_re = p.g * p.g * p.gamma / da2;   // Re of g^2/((gamma - i da) u) at u = 1
    const double b_im = p.g * p.g * p.delta_a / da2;
    const double s_fac = da2 / (2.0 * p.g * p.g);    // x = (u - 1) * s_fac
    const double c2 = p.kappa * p.kappa + p.delta_c * p.delta_c;
    const double c1 = 2.0 * (p.kappa * a_re - p.delta_c * b_im);
    const double c0 = a_re * a_re + b_im * b_im;
    const double eta2 = p.eta * p.eta;

    // s_fac (u-1)(c2 u^2 + c1 u + c0) - eta^2 u^2 = 0
    const double k3 = s_fac * c2;
    const double k2 = s_fac * (c1 - c2) - eta2;
    const double k1 = s_fac * (c0 - c1);
    const double k0 = -s_fac * c0;

    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(0, 2) = -k0 / k3;
    companion(1, 2) = -k1 / k3;
    companion(2, 2) = -k2 / k3;
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    const Eigen::Vector3cd roots = Eigen::EigenSolver<Eigen::Matrix3d>(companion, false)
                                       .eigenvalues();

    std::vector<double> us;
    for (int i = 0; i < 3; ++i) {
        const std::complex<double> r = roots(i);
        if (std::abs(r.imag()) > 1e-8 * std::max(1.0, std::abs(r.real()))) continue;
        const double u = r.real();
        if (u < 1.0 - 1e-12) continue;
        us.push_back(std::max(u, 1.0));
    }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end(),
                         [](double a, double b) { return std::abs(a - b) <= 1e-8 * (1.0 + b); }),
             us.end());

    // Reduced map eta^2(x) = x |k_eff(u(x))|^2 and its slope for stability.
    auto k_eff = [&](double u) {
        return dc + p.g * p.g / ((std::complex<double>(p.gamma, -p.delta_a)) * u);
    };
    auto deta2_dx = [&](double u) {
        const double x = (u - 1.0) * s_fac;
        const double kr = p.kappa + a_re / u;
        const double ki = -p.delta_c + b_im / u;
        const double dk2_du = (2.0 / (u * u)) * (-a_re * kr + b_im * (-ki));
        return (kr * kr + ki * ki) + x * dk2_du / s_fac;
    };

    if (us.empty())
        throw SolverError("mb_steady_states: no physical root of the state equation");

    std::vector<MaxwellBlochState> states;
    for (const double u : us) {
        MaxwellBlochState st;
        st.sigma_z = -1.0 / u;
        st.alpha = p.eta / k_eff(u);
        st.sigma = p.g * st.alpha * st.sigma_z / std::complex<double>(p.gamma, -p.delta_a);
        st.photon = std::norm(st.alpha);
        st.stable = deta2_dx(u) > 0.0;
        states.push_back(st);
    }
    std::sort(states.begin(), states.end(),
              [](const auto& a, const auto& b) { return a.photon < b.photon; });
    return states;
}

enum class MbBranch { lower, upper, follow };

// Semiclassical spectrum; `lower` tracks the branch reached adiabatically
// from below, `follow` continues the branch nearest the previous point.
inline Spectrum spectrum_mb(const SystemParams& base, const std::vector<ScanPoint>& scan,
                            double p_in_pw, const PowerCalibration& cal,
                            MbBranch branch = MbBranch::lower, int workers = 1) {
    SystemParams p0 = base;
    p0.eta = drive_from_power(p_in_pw, base.kappa, cal);
    p0.validate();

    Spectrum s;
    s.p_in_pw = p_in_pw;
    s.model = branch == MbBranch::lower   ? "maxwell-bloch-lower"
              : branch == MbBranch::upper ? "maxwell-bloch-upper"
                                          : "maxwell-bloch-follow";
    s.points.resize(scan.size());

    auto fill = [&](std::size_t i, const MaxwellBlochState& st) {
        SpectrumPoint pt;
        pt.delta_a = scan[i].delta_a;
        pt.delta_c = scan[i].delta_c;
        pt.n_photon = st.photon;
        pt.p_excited = st.p_excited();
        pt.p_out_fw = transmitted_power_fw(st.photon, cal);
        s.points[i] = pt;
    };

    if (branch == MbBranch::follow) {
        double x_prev = 0.0;
        bool have_prev = false;
        for (std::size_t i = 0; i < scan.size(); ++i) {
            SystemParams p = p0;
            p.delta_a = scan[i].delta_a;
            p.delta_c = scan[i].delta_c;
            const auto states = mb_steady_states(p);
            std::size_t pick = 0;
            if (have_prev) {
                double best = std::abs(states[0].photon - x_prev);
                for (std::size_t k = 1; k < states.size(); ++k) {
                    const double d = std::abs(states[k].photon - x_prev);
                    if (d < best) { best = d; pick = k; }
                }
            }
            fill(i, states[pick]);
            x_prev = states[pick].photon;
            have_prev = true;
        }
    } else {
        parallel_for(scan.size(), workers, [&](std::size_t i) {
            SystemParams p = p0;
            p.delta_a = scan[i].delta_a;
            p.delta_c = scan[i].delta_c;
            const auto states = mb_steady_states(p);
            fill(i, branch == MbBranch::lower ? states.front() : states.back());
        });
    }
    return s;
}

}  // namespace cqed
