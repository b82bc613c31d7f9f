// protocol.hpp — measurement-protocol emulation.
//
// A trapping event alternates localization checks (drive on the bare cavity
// resonance) with spectroscopy probes at one scan coordinate:
//   check, (probe, check) x n_repetitions
// Detected photon counts are Poisson draws on the time-averaged transmitted
// power plus a dark-count-equivalent offset.  Post-selection keeps a probe
// interval only when both enclosing checks stay below a counts threshold
// derived from the minimal acceptable coupling g_min = g_min_fraction * g0.
// Accepted intervals aggregate into a spectrum: per coordinate the mean of
// the measured powers (dark offset removed) and their standard deviation
// across intervals (NaN when only one interval contributes).
//
// The check laser sits on the bare cavity resonance, so its atomic detuning
// is tied to the probe coordinate: delta_a_check = delta_a_probe -
// delta_c_probe (+ check_delta_c if the check is deliberately offset).
//
// Counts use std::poisson_distribution: sequences are reproducible for a
// given build but not pinned across standard libraries.  Everything a seed
// influences flows through one engine per event, so aggregated results are
// a pure function of (config, master seed) and the worker count never
// matters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqed/langevin.hpp"
#include "cqed/rng.hpp"
#include "cqed/scans_fwd.hpp"
#include "cqed/spectrum.hpp"
#include "cqed/steady_state.hpp"
#include "cqed/sweep.hpp"
#include "cqed/trap.hpp"

namespace cqed {

// ----- configuration ---------------------------------------------------------

struct ProtocolConfig {
    double check_duration_us = 500.0;
    double check_power_pw = 0.3;
    double check_delta_c = 0.0;  // rad/us; 0 = bare cavity resonance
    double probe_duration_us = 100.0;
    int n_repetitions = 20;
    double g_min_fraction = 0.6;      // localization cut, fraction of g0
    double detector_efficiency = 1.0;
    double detect_lambda_um = 0.7802;  // sets counts per fW*us

    void validate() const {
        if (!(check_duration_us > 0.0) || !(probe_duration_us > 0.0))
            throw std::invalid_argument("ProtocolConfig: durations must be > 0");
        if (check_power_pw < 0.0)
            throw std::invalid_argument("ProtocolConfig: check_power_pw must be >= 0");
        if (n_repetitions < 1)
            throw std::invalid_argument("ProtocolConfig: n_repetitions must be >= 1");
        if (!(g_min_fraction > 0.0) || g_min_fraction > 1.0)
            throw std::invalid_argument("ProtocolConfig: g_min_fraction must be in (0, 1]");
        if (!(detector_efficiency > 0.0) || detector_efficiency > 1.0)
            throw std::invalid_argument("ProtocolConfig: detector_efficiency must be in (0, 1]");
        if (!(detect_lambda_um > 0.0))
            throw std::invalid_argument("ProtocolConfig: detect_lambda_um must be > 0");
    }

    double count_rate_per_fw_us() const {
        return counts_per_fw_us(detect_lambda_um) * detector_efficiency;
    }
};

struct MotionConfig {
    bool enabled = false;
    FieldModel field_model = FieldModel::quantum;
    double dt_us = 0.03;
    int inject_wells = 3;            // uniform over wells -N..N along the axis
    double inject_sigma_xy_um = 3.0;
    double inject_sigma_z_um = 0.05;
    double temperature_uk = 200.0;
    Eigen::Vector3d rest_position = Eigen::Vector3d::Zero();  // used when disabled
    int g_bins = 256;    // field-solver quantization
    int stark_bins = 128;

    void validate() const {
        if (!(dt_us > 0.0)) throw std::invalid_argument("MotionConfig: dt_us must be > 0");
        if (inject_wells < 0)
            throw std::invalid_argument("MotionConfig: inject_wells must be >= 0");
        if (inject_sigma_xy_um < 0.0 || inject_sigma_z_um < 0.0)
            throw std::invalid_argument("MotionConfig: injection sigmas must be >= 0");
        if (temperature_uk < 0.0)
            throw std::invalid_argument("MotionConfig: temperature_uk must be >= 0");
        if (g_bins < 2 || stark_bins < 2)
            throw std::invalid_argument("MotionConfig: need >= 2 quantization bins per axis");
        if (!rest_position.allFinite())
            throw std::invalid_argument("MotionConfig: rest_position must be finite");
    }
};

// ----- records ----------------------------------------------------------------

struct IntervalRecord {
    enum class Kind { check, probe };
    Kind kind = Kind::check;
    double delta_c = 0.0;       // drive settings during the interval (rad/us)
    double delta_a_bare = 0.0;  // before any local Stark shift
    double power_in_pw = 0.0;
    double duration_us = 0.0;
    long counts = 0;
    double mean_power_fw = 0.0;  // ground-truth time average (no dark offset)
    double mean_coupling = 0.0;  // rad/us, ground truth
    double mean_n_photon = 0.0;
    double mean_p_excited = 0.0;
};

struct TrappingEvent {
    long event_id = -1;
    std::uint64_t seed = 0;
    int coord_index = -1;
    ScanPoint coordinate;  // bare probe detunings (rad/us)
    std::vector<IntervalRecord> intervals;
    double survival_us = 0.0;
    bool escaped = false;
    bool aborted = false;
    std::string abort_reason;
};

// ----- counting ----------------------------------------------------------------

inline double expected_counts(double power_out_fw, double duration_us,
                              const ProtocolConfig& proto, const PowerCalibration& cal) {
    return (power_out_fw + cal.dark_offset_fw) * duration_us * proto.count_rate_per_fw_us();
}

inline long detect_counts(double power_out_fw, double duration_us, const ProtocolConfig& proto,
                          const PowerCalibration& cal, std::mt19937_64& rng) {
    if (duration_us <= 0.0) return 0;
    const double mean = expected_counts(power_out_fw, duration_us, proto, cal);
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<long> dist(mean);
    return dist(rng);
}

// Inverse of the detection calibration: measured power with the dark offset
// removed (may be negative for shot-noise fluctuations below the offset).
inline double counts_to_power_fw(long counts, double duration_us, const ProtocolConfig& proto,
                                 const PowerCalibration& cal) {
    return double(counts) / (duration_us * proto.count_rate_per_fw_us()) - cal.dark_offset_fw;
}

// ----- per-coordinate drive parameters ----------------------------------------

inline SystemParams check_bare_params(const SystemParams& probe_bare, const ProtocolConfig& proto,
                                      const PowerCalibration& cal) {
    SystemParams chk = probe_bare;
    chk.delta_a = probe_bare.delta_a - probe_bare.delta_c + proto.check_delta_c;
    chk.delta_c = proto.check_delta_c;
    chk.eta = drive_from_power(proto.check_power_pw, probe_bare.kappa, cal);
    return chk;
}

// Counts threshold for "well localized": the expected check counts of a
// borderline atom at g_min = g_min_fraction * g0 (its trap light scaled by
// the same fraction), plus a 2 sqrt(mu) shot-noise allowance.  Transmission
// of the borderline atom from the one-excitation formula — at 0.3 pW and
// strong suppression the check drive stays deep in the linear regime.
inline double postselect_threshold(const SystemParams& probe_bare, const TrapGeometry& geo,
                                   const ProtocolConfig& proto, const PowerCalibration& cal) {
    SystemParams chk = check_bare_params(probe_bare, proto, cal);
    chk.g = proto.g_min_fraction * geo.g0;
    chk.delta_a -= proto.g_min_fraction * geo.stark_max;
    const double n = single_excitation_photon(chk);
    const double mu =
        expected_counts(transmitted_power_fw(n, cal), proto.check_duration_us, proto, cal);
    return mu + 2.0 * std::sqrt(mu);
}

// ----- event simulation ---------------------------------------------------------

inline AtomState inject_atom(const TrapGeometry& geo, const MotionConfig& motion,
                             std::mt19937_64& rng) {
    AtomState st;
    const int n_w = motion.inject_wells;
    const int well = std::min(2 * n_w, int(uniform01(rng) * (2 * n_w + 1))) - n_w;
    st.r.x() = motion.inject_sigma_xy_um * standard_normal(rng);
    st.r.y() = motion.inject_sigma_xy_um * standard_normal(rng);
    st.r.z() = well * geo.lambda_trap_um / 2.0 + motion.inject_sigma_z_um * standard_normal(rng);
    const double sv = thermal_velocity_sigma(motion.temperature_uk);
    st.v.x() = sv * standard_normal(rng);
    st.v.y() = sv * standard_normal(rng);
    st.v.z() = sv * standard_normal(rng);
    return st;
}

// Runs the trapping events of one scan coordinate, reusing the coordinate's
// field-solver caches across events.  Cached values are pure functions of
// the quantized atom position, so sharing them does not couple events.
class CoordinateRuntime {
  public:
    CoordinateRuntime(const SystemParams& base, ScanPoint coord_bare, const TrapGeometry& geo,
                      const ProtocolConfig& proto, const MotionConfig& motion,
                      const PowerCalibration& cal, double probe_power_pw)
        : geo_(geo), proto_(proto), motion_(motion), cal_(cal),
          probe_power_pw_(probe_power_pw) {
        proto.validate();
        motion.validate();
        geo.validate();
        cal.validate();
        if (probe_power_pw < 0.0)
            throw std::invalid_argument("CoordinateRuntime: probe power must be >= 0");
        probe_bare_ = base;
        probe_bare_.delta_a = coord_bare.delta_a;
        probe_bare_.delta_c = coord_bare.delta_c;
        probe_bare_.eta = drive_from_power(probe_power_pw, base.kappa, cal);
        check_bare_ = check_bare_params(probe_bare_, proto, cal);
        if (motion.enabled) {
            const double w_max = axial_trap_frequency(geo);
            if (w_max > 0.0 && motion.dt_us > 0.1 / w_max * (1.0 + 1e-9))
                throw std::invalid_argument(
                    "MotionConfig: dt_us too large to resolve the axial trap oscillation "
                    "(need dt <= 0.1/omega_z = " +
                    std::to_string(0.1 / w_max) + " us)");
        }
        probe_solver_.emplace(probe_bare_, geo, motion.field_model, motion.g_bins,
                              motion.stark_bins);
        check_solver_.emplace(check_bare_, geo, motion.field_model, motion.g_bins,
                              motion.stark_bins);
    }

    const SystemParams& probe_bare() const { return probe_bare_; }
    const SystemParams& check_bare() const { return check_bare_; }

    // Optional hook, called at the start of every motion step with the
    // event-local time, the atom state, and the local coupling.
    std::function<void(double t_event_us, const AtomState& state, double g_local)> step_observer;

    TrappingEvent run_event(long event_id, std::uint64_t seed, int coord_index) {
        TrappingEvent ev;
        ev.event_id = event_id;
        ev.seed = seed;
        ev.coord_index = coord_index;
        ev.coordinate = ScanPoint{probe_bare_.delta_a, probe_bare_.delta_c};

        Scratch sc;
        sc.rng.seed(seed);
        if (motion_.enabled) {
            sc.state = inject_atom(geo_, motion_, sc.rng);
        } else {
            sc.state.r = motion_.rest_position;
        }

        try {
            run_interval(IntervalRecord::Kind::check, sc, ev);
            if (sc.atom_present) {
                for (int rep = 0; rep < proto_.n_repetitions; ++rep) {
                    run_interval(IntervalRecord::Kind::probe, sc, ev);
                    // The closing check always runs, so an escape mid-probe
                    // still leaves the probe bracketed (by an empty-cavity
                    // check that post-selection will reject).
                    run_interval(IntervalRecord::Kind::check, sc, ev);
                    if (!sc.atom_present) break;
                }
            }
        } catch (const TrajectoryError& err) {
            ev.aborted = true;
            ev.abort_reason = err.what();
        }
        if (!ev.escaped && !ev.aborted) ev.survival_us = sc.t_event;
        return ev;
    }

  private:
    struct Scratch {
        AtomState state;
        std::mt19937_64 rng;
        bool atom_present = true;
        double t_event = 0.0;
    };

    void run_interval(IntervalRecord::Kind kind, Scratch& sc, TrappingEvent& ev) {
        const bool is_check = kind == IntervalRecord::Kind::check;
        const SystemParams& bare = is_check ? check_bare_ : probe_bare_;
        CachedFieldSolver& solver = is_check ? *check_solver_ : *probe_solver_;
        const double duration = is_check ? proto_.check_duration_us : proto_.probe_duration_us;

        IntervalRecord rec;
        rec.kind = kind;
        rec.delta_c = bare.delta_c;
        rec.delta_a_bare = bare.delta_a;
        rec.power_in_pw = is_check ? proto_.check_power_pw : probe_power_pw_;
        rec.duration_us = duration;

        const double n_empty =
            bare.eta * bare.eta / (bare.kappa * bare.kappa + bare.delta_c * bare.delta_c);
        const double fw_empty = transmitted_power_fw(n_empty, cal_);

        double acc_fw = 0.0, acc_g = 0.0, acc_n = 0.0, acc_pe = 0.0;  // time integrals

        if (!sc.atom_present) {
            acc_fw = fw_empty * duration;
        } else if (!motion_.enabled) {
            const auto& e = solver.at(sc.state.r);
            acc_fw = transmitted_power_fw(e.fd.field.n_photon, cal_) * duration;
            acc_g = e.g_local * duration;
            acc_n = e.fd.field.n_photon * duration;
            acc_pe = e.fd.field.p_excited * duration;
        } else {
            const int n_steps = std::max(1, int(std::ceil(duration / motion_.dt_us)));
            const double dt = duration / n_steps;
            const CachedFieldSolver::Entry* entry = &solver.at(sc.state.r);
            KineticResponse kin = solver.assemble(sc.state.r, *entry);
            ForceProvider provider = [&solver, &entry](const Eigen::Vector3d& r, double) {
                entry = &solver.at(r);
                return solver.assemble(r, *entry);
            };
            int done = 0;
            for (; done < n_steps; ++done) {
                if (!inside_box(sc.state.r, geo_)) break;
                if (step_observer) step_observer(sc.t_event + done * dt, sc.state, entry->g_local);
                acc_fw += transmitted_power_fw(entry->fd.field.n_photon, cal_) * dt;
                acc_g += entry->g_local * dt;
                acc_n += entry->fd.field.n_photon * dt;
                acc_pe += entry->fd.field.p_excited * dt;
                kin = langevin_step(sc.state, dt, provider, sc.rng, kin);
            }
            if (done < n_steps) {  // escaped: empty cavity for the remainder
                sc.atom_present = false;
                ev.escaped = true;
                ev.survival_us = sc.t_event + done * dt;
                acc_fw += fw_empty * (duration - done * dt);
            }
        }

        rec.mean_power_fw = acc_fw / duration;
        rec.mean_coupling = acc_g / duration;
        rec.mean_n_photon = acc_n / duration;
        rec.mean_p_excited = acc_pe / duration;
        rec.counts = detect_counts(rec.mean_power_fw, duration, proto_, cal_, sc.rng);
        ev.intervals.push_back(rec);
        sc.t_event += duration;
    }

    TrapGeometry geo_;
    ProtocolConfig proto_;
    MotionConfig motion_;
    PowerCalibration cal_;
    double probe_power_pw_;
    SystemParams probe_bare_;
    SystemParams check_bare_;
    std::optional<CachedFieldSolver> probe_solver_;
    std::optional<CachedFieldSolver> check_solver_;
};

// One-off event with fresh caches; convenience wrapper for tests.
inline TrappingEvent run_trapping_event(const SystemParams& base, const TrapGeometry& geo,
                                        const ProtocolConfig& proto, const MotionConfig& motion,
                                        const PowerCalibration& cal, ScanPoint coord_bare,
                                        double probe_power_pw, std::uint64_t seed,
                                        long event_id = 0, int coord_index = 0) {
    CoordinateRuntime rt(base, coord_bare, geo, proto, motion, cal, probe_power_pw);
    return rt.run_event(event_id, seed, coord_index);
}

// ----- post-selection -----------------------------------------------------------

struct AcceptedProbe {
    std::size_t event_index = 0;
    std::size_t interval_index = 0;
};

inline std::vector<AcceptedProbe> apply_postselection(const std::vector<TrappingEvent>& events,
                                                      const std::vector<double>& threshold_by_coord) {
    std::vector<AcceptedProbe> out;
    for (std::size_t e = 0; e < events.size(); ++e) {
        const TrappingEvent& ev = events[e];
        if (ev.aborted || ev.intervals.size() < 3) continue;
        if (ev.coord_index < 0 || std::size_t(ev.coord_index) >= threshold_by_coord.size())
            throw std::invalid_argument("apply_postselection: event coord_index out of range");
        const double thr = threshold_by_coord[std::size_t(ev.coord_index)];
        for (std::size_t i = 1; i + 1 < ev.intervals.size(); ++i) {
            if (ev.intervals[i].kind != IntervalRecord::Kind::probe) continue;
            const IntervalRecord& before = ev.intervals[i - 1];
            const IntervalRecord& after = ev.intervals[i + 1];
            if (before.kind != IntervalRecord::Kind::check ||
                after.kind != IntervalRecord::Kind::check)
                continue;
            if (double(before.counts) < thr && double(after.counts) < thr)
                out.push_back({e, i});
        }
    }
    return out;
}

inline std::size_t count_probe_intervals(const std::vector<TrappingEvent>& events) {
    std::size_t total = 0;
    for (const TrappingEvent& ev : events) {
        if (ev.aborted) continue;
        for (const IntervalRecord& iv : ev.intervals)
            if (iv.kind == IntervalRecord::Kind::probe) ++total;
    }
    return total;
}

inline double survival_fraction(const std::vector<TrappingEvent>& events,
                                const std::vector<AcceptedProbe>& accepted) {
    const std::size_t total = count_probe_intervals(events);
    return total == 0 ? 0.0 : double(accepted.size()) / double(total);
}

// ----- aggregation --------------------------------------------------------------

// Per coordinate: mean measured power (dark offset removed) over accepted
// probe intervals, with the standard deviation across intervals in the
// spread column (NaN when only one interval contributes).  Coordinates with
// no accepted interval are omitted.
inline Spectrum aggregate_spectrum(const std::vector<TrappingEvent>& events,
                                   const std::vector<AcceptedProbe>& accepted,
                                   const std::vector<ScanPoint>& scan_bare,
                                   const ProtocolConfig& proto, const PowerCalibration& cal,
                                   double probe_power_pw, const MotionConfig& motion) {
    const std::size_t ncoord = scan_bare.size();
    std::vector<std::vector<double>> powers(ncoord);
    std::vector<double> acc_n(ncoord, 0.0), acc_pe(ncoord, 0.0);
    for (const AcceptedProbe& ap : accepted) {
        const TrappingEvent& ev = events.at(ap.event_index);
        const IntervalRecord& iv = ev.intervals.at(ap.interval_index);
        const std::size_t j = std::size_t(ev.coord_index);
        powers.at(j).push_back(counts_to_power_fw(iv.counts, iv.duration_us, proto, cal));
        acc_n[j] += iv.mean_n_photon;
        acc_pe[j] += iv.mean_p_excited;
    }

    Spectrum sp;
    sp.p_in_pw = probe_power_pw;
    sp.model = motion.field_model == FieldModel::quantum ? "montecarlo-quantum"
                                                         : "montecarlo-single-excitation";
    for (std::size_t j = 0; j < ncoord; ++j) {
        const std::vector<double>& v = powers[j];
        if (v.empty()) continue;
        const double n = double(v.size());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n;
        double sd = std::numeric_limits<double>::quiet_NaN();
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            sd = std::sqrt(ss / (n - 1.0));
        }
        SpectrumPoint pt;
        pt.delta_c = scan_bare[j].delta_c;
        pt.delta_a = scan_bare[j].delta_a;
        pt.p_out_fw = mean;
        pt.stderr_fw = sd;
        pt.n_photon = acc_n[j] / n;
        pt.p_excited = acc_pe[j] / n;
        sp.points.push_back(pt);
    }
    return sp;
}

// ----- full Monte Carlo run -----------------------------------------------------

struct MonteCarloResult {
    std::vector<TrappingEvent> events;    // by event_id
    std::vector<AcceptedProbe> accepted;  // indices into events/intervals
    std::vector<double> thresholds;       // per scan coordinate, counts
    Spectrum spectrum;
    double survival = 0.0;
};

// Event i probes scan coordinate i % n_coords with seed derive_seed(master,
// i); coordinates run in parallel, events within a coordinate serially.
// Results are a pure function of (inputs, master_seed) for a given build.
inline MonteCarloResult run_montecarlo(const SystemParams& base, const TrapGeometry& geo,
                                       const ProtocolConfig& proto, const MotionConfig& motion,
                                       const PowerCalibration& cal,
                                       const std::vector<ScanPoint>& scan_bare,
                                       double probe_power_pw, long n_events,
                                       std::uint64_t master_seed, int workers = 1) {
    if (scan_bare.empty()) throw std::invalid_argument("run_montecarlo: empty scan");
    if (n_events <= 0) throw std::invalid_argument("run_montecarlo: n_events must be > 0");

    MonteCarloResult res;
    res.events.resize(std::size_t(n_events));
    const std::size_t ncoord = scan_bare.size();
    res.thresholds.resize(ncoord);

    parallel_for(ncoord, resolve_workers(workers), [&](std::size_t j) {
        CoordinateRuntime rt(base, scan_bare[j], geo, proto, motion, cal, probe_power_pw);
        res.thresholds[j] = postselect_threshold(rt.probe_bare(), geo, proto, cal);
        for (long i = long(j); i < n_events; i += long(ncoord))
            res.events[std::size_t(i)] = rt.run_event(i, derive_seed(master_seed, std::uint64_t(i)),
                                                      int(j));
    });

    res.accepted = apply_postselection(res.events, res.thresholds);
    res.survival = survival_fraction(res.events, res.accepted);
    res.spectrum = aggregate_spectrum(res.events, res.accepted, scan_bare, proto, cal,
                                      probe_power_pw, motion);
    return res;
}

// ----- event log ----------------------------------------------------------------

inline void write_events_jsonl(std::ostream& out, const std::vector<TrappingEvent>& events,
                               const std::vector<AcceptedProbe>& accepted) {
    std::vector<std::vector<bool>> flag(events.size());
    for (std::size_t e = 0; e < events.size(); ++e)
        flag[e].assign(events[e].intervals.size(), false);
    for (const AcceptedProbe& ap : accepted) flag.at(ap.event_index).at(ap.interval_index) = true;

    for (std::size_t e = 0; e < events.size(); ++e) {
        const TrappingEvent& ev = events[e];
        nlohmann::json j;
        j["event_id"] = ev.event_id;
        j["seed"] = ev.seed;
        j["coord_index"] = ev.coord_index;
        j["delta_c_MHz"] = rad_us_to_mhz(ev.coordinate.delta_c);
        j["delta_a_bare_MHz"] = rad_us_to_mhz(ev.coordinate.delta_a);
        j["survival_us"] = ev.survival_us;
        j["escaped"] = ev.escaped;
        j["aborted"] = ev.aborted;
        if (ev.aborted) j["abort_reason"] = ev.abort_reason;
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t i = 0; i < ev.intervals.size(); ++i) {
            const IntervalRecord& iv = ev.intervals[i];
            nlohmann::json ji;
            ji["kind"] = iv.kind == IntervalRecord::Kind::check ? "check" : "probe";
            ji["delta_c_MHz"] = rad_us_to_mhz(iv.delta_c);
            ji["power_in_pW"] = iv.power_in_pw;
            ji["duration_us"] = iv.duration_us;
            ji["counts"] = iv.counts;
            ji["mean_power_fW"] = iv.mean_power_fw;
            ji["mean_coupling_MHz"] = rad_us_to_mhz(iv.mean_coupling);
            if (iv.kind == IntervalRecord::Kind::probe) ji["accepted"] = bool(flag[e][i]);
            arr.push_back(std::move(ji));
        }
        j["intervals"] = std::move(arr);
        out << j.dump() << "\n";
    }
}

inline void write_events_jsonl(const std::string& path, const std::vector<TrappingEvent>& events,
                               const std::vector<AcceptedProbe>& accepted) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_events_jsonl: cannot open " + path);
    write_events_jsonl(out, events, accepted);
}

}  // namespace cqed
