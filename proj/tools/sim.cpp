// sim — cavity-QED spectroscopy simulator CLI.
//
//   sim dressed     dressed-ladder table and multiphoton resonance loci
//   sim spectrum    fixed-atom transmission spectrum (quantum /
//                   single-excitation / maxwell-bloch)
//   sim montecarlo  trapping events with check/probe protocol, optional
//                   Langevin atomic motion; event log + aggregated spectrum
//   sim analyze     window averages, nonlinear response slope, (g, delta_a)
//                   fit over spectrum CSV files
//
// Exit codes: 0 success, 2 configuration/usage error, 3 solver failure,
// 4 empty result.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cqed/analysis.hpp"
#include "cqed/config.hpp"
#include "cqed/operators.hpp"
#include "cqed/protocol.hpp"
#include "cqed/scans.hpp"
#include "cqed/spectrum.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitEmpty = 4;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "Config file (INI-style sections)");
    cmd->add_option("--preset", o.preset,
                    "Named preset resolved against $SIM_CONFIG_DIR, ./configs, the "
                    "executable's configs directory, and the build-time configs directory");
    cmd->add_option("--set", o.sets, "Override a config value: section.key=value (repeatable)");
    cmd->add_option("--seed", o.seed, "Master seed (overrides run.seed)");
    cmd->add_option("--workers", o.workers,
                    "Worker threads (overrides run.workers and $SIM_WORKERS; 0 = auto)");
    cmd->add_option("--out", o.out_dir, "Output directory (created if missing)");
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

fs::path executable_dir(const char* argv0) {
    std::error_code ec;
    fs::path p = fs::canonical("/proc/self/exe", ec);
    if (!ec) return p.parent_path();
    fs::path a = fs::absolute(argv0 ? argv0 : ".", ec);
    return a.parent_path();
}

std::string resolve_preset(const std::string& name, const fs::path& exe_dir) {
    if (name.find('/') != std::string::npos) {
        if (fs::exists(name)) return name;
        throw cqed::ConfigError("preset path not found: " + name);
    }
    const std::string fname = name.size() > 4 && name.substr(name.size() - 4) == ".cfg"
                                  ? name
                                  : name + ".cfg";
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("SIM_CONFIG_DIR")) roots.emplace_back(env);
    roots.emplace_back("configs");
    roots.emplace_back(exe_dir / "configs");
    roots.emplace_back(exe_dir / ".." / "configs");
#ifdef SIM_SOURCE_CONFIG_DIR
    roots.emplace_back(SIM_SOURCE_CONFIG_DIR);
#endif
    std::string tried;
    for (const fs::path& r : roots) {
        const fs::path cand = r / fname;
        std::error_code ec;
        if (fs::exists(cand, ec)) return cand.string();
        if (!tried.empty()) tried += ", ";
        tried += cand.string();
    }
    throw cqed::ConfigError("preset '" + name + "' not found; searched: " + tried);
}

cqed::Config assemble_config(const CommonOpts& o, const fs::path& exe_dir) {
    if (!o.preset.empty() && !o.config_path.empty())
        throw cqed::ConfigError("--preset and --config are mutually exclusive");
    cqed::Config cfg = cqed::Config::parse("", "<cli>");
    if (!o.preset.empty()) cfg = cqed::Config::load(resolve_preset(o.preset, exe_dir));
    if (!o.config_path.empty()) cfg = cqed::Config::load(o.config_path);
    for (const std::string& s : o.sets) {
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw cqed::ConfigError("--set expects section.key=value, got '" + s + "'");
        cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    if (o.seed) cfg.set("run.seed", std::to_string(*o.seed));
    if (o.workers) cfg.set("run.workers", std::to_string(*o.workers));
    return cfg;
}

int resolve_worker_count(const cqed::Config& cfg) {
    if (cfg.has("run.workers")) return int(cfg.get_int("run.workers"));
    if (const char* env = std::getenv("SIM_WORKERS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            throw cqed::ConfigError("SIM_WORKERS must be an integer, got '" + std::string(env) +
                                    "'");
        }
    }
    return 0;  // auto
}

fs::path prepare_out_dir(const CommonOpts& o) {
    fs::path dir(o.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::string output_prefix(const cqed::Config& cfg) {
    return cfg.get_string("run.output_prefix", "");
}

std::ofstream open_output(const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open output file: " + file.string());
    return out;
}

// ----- dressed ------------------------------------------------------------------

// Rows indexed by the ladder level n >= 1: the (n+1)-excitation manifold
// |n+1,-/+> reached by an (n+1)-photon transition.  omega_dressed is the
// manifold frequency with the bare cavity at 0; delta_c_resonance is the
// laser-cavity detuning of the multiphoton resonance at fixed atom-cavity
// detuning; delta_c_on_atom is the self-consistent locus when the laser
// stays on the (Stark-shifted) atomic resonance, -/+ g/sqrt(n).
int cmd_dressed(const cqed::Config& cfg, const fs::path& out_dir) {
    const cqed::SystemParams base = cqed::make_system_params(cfg);
    const int n_max = int(cfg.get_int("dressed.n_max", 3));
    if (n_max < 1) throw cqed::ConfigError("dressed.n_max must be >= 1");
    const double lo = cfg.get_double("dressed.delta_ac_lo_mhz", -35.0);
    const double hi = cfg.get_double("dressed.delta_ac_hi_mhz", 35.0);
    const double step = cfg.get_double("dressed.delta_ac_step_mhz", 0.5);
    if (!(step > 0.0) || !(lo <= hi)) throw cqed::ConfigError("bad [dressed] delta_ac grid");

    const fs::path file = out_dir / (output_prefix(cfg) + "dressed.csv");
    std::ofstream out = open_output(file);
    out << "n, branch, delta_ac_MHz, omega_dressed_MHz, delta_c_resonance_MHz, "
           "delta_c_on_atom_MHz\n";
    long rows = 0;
    for (double dac_mhz = lo; dac_mhz <= hi + 0.5 * step; dac_mhz += step) {
        const double dac = cqed::mhz_to_rad_us(dac_mhz);
        for (int n = 1; n <= n_max; ++n) {
            const auto [w_minus, w_plus] = cqed::dressed_frequencies(dac, 0.0, base.g, n);
            const auto [r_minus, r_plus] =
                cqed::multiphoton_resonance_detunings(base.g, dac, n);
            const auto [o_minus, o_plus] = cqed::on_atom_resonance_loci(base.g, n);
            const double vals[2][3] = {{w_minus, r_minus, o_minus}, {w_plus, r_plus, o_plus}};
            const char* branch[2] = {"minus", "plus"};
            for (int b = 0; b < 2; ++b) {
                out << n << ", " << branch[b] << ", " << cqed::detail::format_double(dac_mhz)
                    << ", " << cqed::detail::format_double(cqed::rad_us_to_mhz(vals[b][0]))
                    << ", " << cqed::detail::format_double(cqed::rad_us_to_mhz(vals[b][1]))
                    << ", " << cqed::detail::format_double(cqed::rad_us_to_mhz(vals[b][2]))
                    << "\n";
                ++rows;
            }
        }
    }
    std::cout << "wrote " << file.string() << " (" << rows << " rows)\n";
    return kExitOk;
}

// ----- spectrum -----------------------------------------------------------------

cqed::MbBranch parse_mb_branch(const std::string& s) {
    if (s == "lower") return cqed::MbBranch::lower;
    if (s == "upper") return cqed::MbBranch::upper;
    if (s == "follow") return cqed::MbBranch::follow;
    throw cqed::ConfigError("run.mb_branch must be lower/upper/follow, got '" + s + "'");
}

int cmd_spectrum(const cqed::Config& cfg, const fs::path& out_dir) {
    const cqed::SystemParams base = cqed::make_system_params(cfg);
    const cqed::PowerCalibration cal = cqed::make_calibration(cfg);
    const std::vector<cqed::ScanPoint> scan = cqed::make_scan(cfg);
    const double power_pw = cfg.get_double("drive.power_pw");
    const cqed::SpectrumModel model =
        cqed::parse_spectrum_model(cfg.get_string("run.model", "quantum"));
    const int workers = resolve_worker_count(cfg);

    cqed::Spectrum sp;
    int n_gaps = 0;
    switch (model) {
        case cqed::SpectrumModel::quantum:
            sp = cqed::spectrum_quantum(base, scan, power_pw, cal, workers, &n_gaps);
            break;
        case cqed::SpectrumModel::single_excitation:
            sp = cqed::spectrum_single_excitation(base, scan, power_pw, cal);
            break;
        case cqed::SpectrumModel::maxwell_bloch:
            sp = cqed::spectrum_mb(base, scan, power_pw, cal,
                                   parse_mb_branch(cfg.get_string("run.mb_branch", "lower")),
                                   workers);
            break;
    }
    if (sp.points.empty()) {
        std::cerr << "spectrum: no points produced (" << n_gaps << " solver gaps)\n";
        return kExitEmpty;
    }
    const fs::path file = out_dir / (output_prefix(cfg) + "spectrum.csv");
    cqed::write_spectrum_csv(file.string(), sp);
    std::cout << "wrote " << file.string() << " (" << sp.points.size() << " points, model "
              << sp.model;
    if (n_gaps > 0) std::cout << ", " << n_gaps << " solver gaps";
    std::cout << ")\n";
    return kExitOk;
}

// ----- montecarlo ---------------------------------------------------------------

int cmd_montecarlo(const cqed::Config& cfg, const fs::path& out_dir,
                   const std::string& trajectory_file) {
    const cqed::SystemParams base = cqed::make_system_params(cfg);
    const cqed::PowerCalibration cal = cqed::make_calibration(cfg);
    const cqed::TrapGeometry geo = cqed::make_geometry(cfg);
    const cqed::ProtocolConfig proto = cqed::make_protocol(cfg);
    const cqed::MotionConfig motion = cqed::make_motion(cfg);
    const std::vector<cqed::ScanPoint> scan = cqed::make_scan(cfg);
    const double power_pw = cfg.get_double("drive.power_pw");
    const long n_events = cfg.get_int("montecarlo.n_events", 200);
    const std::uint64_t seed = std::uint64_t(cfg.get_int("run.seed", 1));
    const int workers = resolve_worker_count(cfg);
    const std::string prefix = output_prefix(cfg);

    if (!trajectory_file.empty()) {
        // Single-event trajectory dump at the first scan coordinate.
        cqed::CoordinateRuntime rt(base, scan.front(), geo, proto, motion, cal, power_pw);
        std::ofstream traj = open_output(out_dir / trajectory_file);
        traj << "t_us, x_um, y_um, z_um, vx, vy, vz, g_local_MHz\n";
        rt.step_observer = [&traj](double t, const cqed::AtomState& st, double g_local) {
            traj << cqed::detail::format_double(t) << ", "
                 << cqed::detail::format_double(st.r.x()) << ", "
                 << cqed::detail::format_double(st.r.y()) << ", "
                 << cqed::detail::format_double(st.r.z()) << ", "
                 << cqed::detail::format_double(st.v.x()) << ", "
                 << cqed::detail::format_double(st.v.y()) << ", "
                 << cqed::detail::format_double(st.v.z()) << ", "
                 << cqed::detail::format_double(cqed::rad_us_to_mhz(g_local)) << "\n";
        };
        const cqed::TrappingEvent ev = rt.run_event(0, cqed::derive_seed(seed, 0), 0);
        std::cout << "trajectory event: survival " << ev.survival_us << " us, "
                  << (ev.escaped ? "escaped" : "retained") << "\n";
        return kExitOk;
    }

    const cqed::MonteCarloResult res = cqed::run_montecarlo(
        base, geo, proto, motion, cal, scan, power_pw, n_events, seed, workers);

    const fs::path events_file = out_dir / (prefix + "events.jsonl");
    cqed::write_events_jsonl(events_file.string(), res.events, res.accepted);

    long n_escaped = 0, n_aborted = 0;
    for (const cqed::TrappingEvent& ev : res.events) {
        if (ev.escaped) ++n_escaped;
        if (ev.aborted) ++n_aborted;
    }
    std::cout << "events: " << res.events.size() << " (" << n_escaped << " escaped, " << n_aborted
              << " aborted), accepted probe intervals: " << res.accepted.size()
              << ", survival fraction: " << res.survival << "\n";
    std::cout << "wrote " << events_file.string() << "\n";

    if (res.spectrum.points.empty()) {
        std::cerr << "montecarlo: no probe interval survived post-selection\n";
        return kExitEmpty;
    }
    const fs::path spec_file = out_dir / (prefix + "mc_spectrum.csv");
    cqed::write_spectrum_csv(spec_file.string(), res.spectrum);
    std::cout << "wrote " << spec_file.string() << " (" << res.spectrum.points.size()
              << " of " << scan.size() << " coordinates)\n";
    return kExitOk;
}

// ----- analyze ------------------------------------------------------------------

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        const std::string item = trim(s.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
    }
    return out;
}

int cmd_analyze(const cqed::Config& cfg, const fs::path& out_dir) {
    const std::vector<std::string> inputs = split_list(cfg.get_string("analysis.inputs"));
    if (inputs.empty()) throw cqed::ConfigError("analysis.inputs lists no spectrum files");
    std::vector<cqed::Spectrum> spectra;
    for (const std::string& path : inputs) spectra.push_back(cqed::read_spectrum_csv(path));

    const cqed::WindowSpec on = cqed::make_window(cfg, "analysis.on");
    const cqed::WindowSpec off = cqed::make_window(cfg, "analysis.off");
    const std::string prefix = output_prefix(cfg);

    nlohmann::json report;
    report["inputs"] = inputs;
    report["windows"] = {{"on_lo_MHz", on.lo_mhz},
                         {"on_hi_MHz", on.hi_mhz},
                         {"off_lo_MHz", off.lo_mhz},
                         {"off_hi_MHz", off.hi_mhz}};

    // Window differences per spectrum; log-log slope when >= 3 powers.
    cqed::NonlinearResponse resp;
    if (spectra.size() >= 3) {
        resp = cqed::nonlinear_response(spectra, on, off);
    } else {
        for (const cqed::Spectrum& sp : spectra) {
            const cqed::WindowAverage a_on = cqed::window_average(sp, on);
            const cqed::WindowAverage a_off = cqed::window_average(sp, off);
            resp.points.push_back({sp.p_in_pw, a_on.mean_fw - a_off.mean_fw,
                                   std::hypot(a_on.stderr_fw, a_off.stderr_fw)});
        }
    }
    {
        const fs::path file = out_dir / (prefix + "response.csv");
        std::ofstream out = open_output(file);
        cqed::write_response_csv(out, resp);
        std::cout << "wrote " << file.string() << "\n";
    }
    nlohmann::json jresp;
    jresp["slope"] = resp.slope;
    jresp["intercept"] = resp.intercept;
    jresp["n_used"] = resp.n_used;
    jresp["n_excluded"] = resp.n_excluded;
    if (resp.n_excluded > 0)
        std::cerr << "warning: " << resp.n_excluded
                  << " nonpositive window differences excluded from the slope fit\n";
    nlohmann::json jpoints = nlohmann::json::array();
    for (const cqed::NonlinearResponsePoint& pt : resp.points)
        jpoints.push_back({{"p_in_pW", pt.p_in_pw},
                           {"delta_fW", pt.delta_fw},
                           {"stderr_fW", pt.stderr_fw}});
    jresp["points"] = std::move(jpoints);
    report["response"] = std::move(jresp);

    if (cfg.get_bool("analysis.fit_enabled", true)) {
        cqed::SystemParams base = cqed::make_system_params(cfg);
        const cqed::PowerCalibration cal = cqed::make_calibration(cfg);
        cqed::FitConfig fit_cfg = cqed::make_fit_config(cfg);
        fit_cfg.workers = resolve_worker_count(cfg);
        const cqed::SpectrumModel model =
            cqed::parse_spectrum_model(cfg.get_string("analysis.fit_model", "quantum"));
        const cqed::FitResult fit = cqed::fit_g_delta(spectra, model, base, cal, fit_cfg);
        nlohmann::json jfit;
        jfit["g_MHz"] = cqed::rad_us_to_mhz(fit.g);
        jfit["delta_a_MHz"] = cqed::rad_us_to_mhz(fit.delta_a);
        jfit["offsets_fW"] = fit.offsets_fw;
        jfit["residual_fW2"] = fit.residual_fw2;
        jfit["converged"] = fit.converged;
        jfit["n_evaluations"] = fit.n_evaluations;
        jfit["grid"] = {{"g_MHz", cqed::rad_us_to_mhz(fit.grid_g)},
                        {"delta_a_MHz", cqed::rad_us_to_mhz(fit.grid_delta_a)},
                        {"residual_fW2", fit.grid_residual_fw2}};
        report["fit"] = std::move(jfit);
        std::cout << "fit: g = " << cqed::rad_us_to_mhz(fit.g)
                  << " MHz, delta_a = " << cqed::rad_us_to_mhz(fit.delta_a)
                  << " MHz, residual = " << fit.residual_fw2 << " fW^2"
                  << (fit.converged ? "" : " (refinement hit its budget)") << "\n";
    }
    if (std::isfinite(resp.slope)) std::cout << "log-log slope: " << resp.slope << "\n";

    const fs::path report_file = out_dir / (prefix + "fit_report.json");
    std::ofstream out = open_output(report_file);
    out << report.dump(2) << "\n";
    std::cout << "wrote " << report_file.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driven atom-cavity spectroscopy simulator"};
    app.require_subcommand(1);

    CommonOpts dressed_opts, spectrum_opts, mc_opts, analyze_opts;
    std::string trajectory_file;

    CLI::App* dressed = app.add_subcommand("dressed", "dressed-ladder table");
    add_common(dressed, dressed_opts);
    CLI::App* spectrum = app.add_subcommand("spectrum", "fixed-atom transmission spectrum");
    add_common(spectrum, spectrum_opts);
    CLI::App* mc = app.add_subcommand("montecarlo", "trapping-event protocol emulation");
    add_common(mc, mc_opts);
    mc->add_option("--trajectory", trajectory_file,
                   "Dump a single-event motion trajectory CSV (given file name, in --out) "
                   "instead of running the event ensemble");
    CLI::App* analyze = app.add_subcommand("analyze", "spectrum post-processing and fits");
    add_common(analyze, analyze_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const fs::path exe_dir = executable_dir(argv[0]);
    try {
        if (dressed->parsed()) {
            const cqed::Config cfg = assemble_config(dressed_opts, exe_dir);
            return cmd_dressed(cfg, prepare_out_dir(dressed_opts));
        }
        if (spectrum->parsed()) {
            const cqed::Config cfg = assemble_config(spectrum_opts, exe_dir);
            return cmd_spectrum(cfg, prepare_out_dir(spectrum_opts));
        }
        if (mc->parsed()) {
            const cqed::Config cfg = assemble_config(mc_opts, exe_dir);
            return cmd_montecarlo(cfg, prepare_out_dir(mc_opts), trajectory_file);
        }
        if (analyze->parsed()) {
            const cqed::Config cfg = assemble_config(analyze_opts, exe_dir);
            return cmd_analyze(cfg, prepare_out_dir(analyze_opts));
        }
        std::cerr << "no subcommand\n";
        return kExitConfig;
    } catch (const cqed::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
