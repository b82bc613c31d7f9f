// scans.hpp — scan grids and steady-state spectra.
//
// Two scan geometries from the experiment:
//   - diagonal: the probe laser is swept at fixed cavity and atom, so
//     delta_a and delta_c move together (delta_a = delta_c - delta_ac with
//     delta_ac = omega_a - omega_c); crosses normal modes and multiphoton
//     resonances.
//   - vertical: the cavity is tuned at fixed laser-atom detuning, so
//     delta_a is constant while delta_c sweeps; avoids the normal modes.

#pragma once

#include <optional>
#include <vector>

#include "cqed/params.hpp"
#include "cqed/scans_fwd.hpp"
#include "cqed/spectrum.hpp"
#include "cqed/steady_state.hpp"
#include "cqed/sweep.hpp"

namespace cqed {

inline std::vector<ScanPoint> make_diagonal_scan(double delta_ac, double lo, double hi,
                                                 double step) {
    if (!(step > 0.0) || hi < lo)
        throw std::invalid_argument("make_diagonal_scan: need step > 0 and hi >= lo");
    std::vector<ScanPoint> pts;
    for (double dc = lo; dc <= hi + 0.5 * step; dc += step)
        pts.push_back({dc - delta_ac, dc});
    return pts;
}

inline std::vector<ScanPoint> make_vertical_scan(double delta_a, double lo, double hi,
                                                 double step) {
    if (!(step > 0.0) || hi < lo)
        throw std::invalid_argument("make_vertical_scan: need step > 0 and hi >= lo");
    std::vector<ScanPoint> pts;
    for (double dc = lo; dc <= hi + 0.5 * step; dc += step) pts.push_back({delta_a, dc});
    return pts;
}

// Full master-equation spectrum.  Per-point solver failures become gaps
// (the point is dropped); the gap count is reported through n_gaps.
inline Spectrum spectrum_quantum(const SystemParams& base, const std::vector<ScanPoint>& scan,
                                 double p_in_pw, const PowerCalibration& cal, int workers = 1,
                                 int* n_gaps = nullptr) {
    SystemParams p0 = base;
    p0.eta = drive_from_power(p_in_pw, base.kappa, cal);
    p0.validate();
    const OperatorSet ops = build_operators(p0.n_fock);

    std::vector<std::optional<SpectrumPoint>> slots(scan.size());
    parallel_for(scan.size(), workers, [&](std::size_t i) {
        SystemParams p = p0;
        p.delta_a = scan[i].delta_a;
        p.delta_c = scan[i].delta_c;
        try {
            const SteadyObservables obs = steady_observables(steady_state(p, ops), ops);
            SpectrumPoint out;
            out.delta_a = p.delta_a;
            out.delta_c = p.delta_c;
            out.p_out_fw = transmitted_power_fw(obs.n_photon, cal);
            out.n_photon = obs.n_photon;
            out.p_excited = obs.p_excited;
            slots[i] = out;
        } catch (const SolverError&) {
            slots[i] = std::nullopt;
        }
    });

    Spectrum s;
    s.p_in_pw = p_in_pw;
    s.model = "quantum";
    int gaps = 0;
    for (const auto& slot : slots) {
        if (slot)
            s.points.push_back(*slot);
        else
            ++gaps;
    }
    if (n_gaps) *n_gaps = gaps;
    return s;
}

// Analytic linear-response spectrum (coupled harmonic oscillators).
inline Spectrum spectrum_single_excitation(const SystemParams& base,
                                           const std::vector<ScanPoint>& scan, double p_in_pw,
                                           const PowerCalibration& cal) {
    SystemParams p = base;
    p.eta = drive_from_power(p_in_pw, base.kappa, cal);
    p.validate();
    Spectrum s;
    s.p_in_pw = p_in_pw;
    s.model = "single-excitation";
    s.points.reserve(scan.size());
    for (const auto& pt : scan) {
        p.delta_a = pt.delta_a;
        p.delta_c = pt.delta_c;
        SpectrumPoint out;
        out.delta_a = p.delta_a;
        out.delta_c = p.delta_c;
        out.n_photon = single_excitation_photon(p);
        out.p_excited = single_excitation_excitation(p);
        out.p_out_fw = transmitted_power_fw(out.n_photon, cal);
        out.stderr_fw = 0.0;
        s.points.push_back(out);
    }
    return s;
}

}  // namespace cqed
