// config.hpp — run configuration: an ordered INI-style text format
// ([section] headers, key = value lines, # or ; full-line comments) with
// typed accessors, plus builders that turn a parsed Config into the domain
// parameter structs.  Parse -> serialize -> parse is an identity on the
// section/key/value structure.

#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqed/analysis.hpp"
#include "cqed/params.hpp"
#include "cqed/protocol.hpp"
#include "cqed/scans.hpp"
#include "cqed/trap.hpp"
#include "cqed/units.hpp"

namespace cqed {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Config {
  public:
    struct Entry {
        std::string key;
        std::string value;
    };
    struct Section {
        std::string name;
        std::vector<Entry> entries;
    };

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        Section* current = nullptr;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = trimmed(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3)
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": malformed section header '" + s + "'");
                const std::string name = trimmed(s.substr(1, s.size() - 2));
                if (name.empty())
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": empty section name");
                current = &cfg.section(name);
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + s + "'");
            if (!current)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": key/value line before any [section]");
            const std::string key = trimmed(s.substr(0, eq));
            const std::string value = trimmed(s.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            current->entries.push_back({key, value});
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path);
    }

    std::string serialize() const {
        std::ostringstream out;
        bool first = true;
        for (const Section& sec : sections_) {
            if (!first) out << "\n";
            first = false;
            out << "[" << sec.name << "]\n";
            for (const Entry& e : sec.entries) out << e.key << " = " << e.value << "\n";
        }
        return out.str();
    }

    bool has(const std::string& dotted) const { return find(dotted) != nullptr; }

    // "section.key" -> value; later duplicates win (override semantics).
    std::string get_string(const std::string& dotted) const {
        const std::string* v = find(dotted);
        if (!v) throw ConfigError(origin_ + ": missing required config key '" + dotted + "'");
        return *v;
    }

    std::string get_string(const std::string& dotted, const std::string& fallback) const {
        const std::string* v = find(dotted);
        return v ? *v : fallback;
    }

    double get_double(const std::string& dotted) const { return to_double(dotted, get_string(dotted)); }
    double get_double(const std::string& dotted, double fallback) const {
        const std::string* v = find(dotted);
        return v ? to_double(dotted, *v) : fallback;
    }

    long get_int(const std::string& dotted) const { return to_int(dotted, get_string(dotted)); }
    long get_int(const std::string& dotted, long fallback) const {
        const std::string* v = find(dotted);
        return v ? to_int(dotted, *v) : fallback;
    }

    bool get_bool(const std::string& dotted) const { return to_bool(dotted, get_string(dotted)); }
    bool get_bool(const std::string& dotted, bool fallback) const {
        const std::string* v = find(dotted);
        return v ? to_bool(dotted, *v) : fallback;
    }

    // Sets (replacing the last occurrence) or appends section.key = value.
    void set(const std::string& dotted, const std::string& value) {
        const auto [sec, key] = split(dotted);
        Section& s = section(sec);
        for (auto it = s.entries.rbegin(); it != s.entries.rend(); ++it) {
            if (it->key == key) {
                it->value = value;
                return;
            }
        }
        s.entries.push_back({key, value});
    }

    const std::vector<Section>& sections() const { return sections_; }
    const std::string& origin() const { return origin_; }

  private:
    static std::string trimmed(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static std::pair<std::string, std::string> split(const std::string& dotted) {
        const std::size_t dot = dotted.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size())
            throw ConfigError("config key must be 'section.key', got '" + dotted + "'");
        return {dotted.substr(0, dot), dotted.substr(dot + 1)};
    }

    Section& section(const std::string& name) {
        for (Section& s : sections_)
            if (s.name == name) return s;
        sections_.push_back({name, {}});
        return sections_.back();
    }

    const std::string* find(const std::string& dotted) const {
        const auto [sec, key] = split(dotted);
        for (const Section& s : sections_) {
            if (s.name != sec) continue;
            for (auto it = s.entries.rbegin(); it != s.entries.rend(); ++it)
                if (it->key == key) return &it->value;
        }
        return nullptr;
    }

    double to_double(const std::string& dotted, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return d;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + dotted + "': cannot parse '" + v +
                              "' as a number");
        }
    }

    long to_int(const std::string& dotted, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const long n = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return n;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + dotted + "': cannot parse '" + v +
                              "' as an integer");
        }
    }

    bool to_bool(const std::string& dotted, const std::string& v) const {
        std::string low = v;
        std::transform(low.begin(), low.end(), low.begin(),
                       [](unsigned char c) { return char(std::tolower(c)); });
        if (low == "true" || low == "yes" || low == "on" || low == "1") return true;
        if (low == "false" || low == "no" || low == "off" || low == "0") return false;
        throw ConfigError(origin_ + ": key '" + dotted + "': cannot parse '" + v +
                          "' as a boolean");
    }

    std::string origin_ = "<empty>";
    std::vector<Section> sections_;
};

// ----- builders -----------------------------------------------------------------

// [physics] g_mhz, kappa_mhz, gamma_mhz are required; n_fock optional.
// The drive amplitude is set separately from [drive] power_pw by callers
// that know which interval/scan the params are for.
inline SystemParams make_system_params(const Config& c) {
    SystemParams p;
    p.g = mhz_to_rad_us(c.get_double("physics.g_mhz"));
    p.kappa = mhz_to_rad_us(c.get_double("physics.kappa_mhz"));
    p.gamma = mhz_to_rad_us(c.get_double("physics.gamma_mhz"));
    p.n_fock = int(c.get_int("physics.n_fock", 15));
    p.eta = 0.0;
    p.delta_a = 0.0;
    p.delta_c = 0.0;
    p.validate();
    return p;
}

inline PowerCalibration make_calibration(const Config& c) {
    PowerCalibration cal;
    cal.photons_per_pw_in = c.get_double("calibration.photons_per_pw", cal.photons_per_pw_in);
    cal.pw_out_per_photon = c.get_double("calibration.pw_out_per_photon", cal.pw_out_per_photon);
    cal.dark_offset_fw = c.get_double("calibration.dark_offset_fw", cal.dark_offset_fw);
    cal.validate();
    return cal;
}

// [geometry]: trap_power_nw maps linearly to the antinode Stark shift
// (2pi x 35 MHz at 170 nW); stark_max_mhz / trap_depth_mhz override the
// mapping when present.  Trap depth defaults to half the Stark shift
// (ground level shifted by half as much as the transition).
inline TrapGeometry make_geometry(const Config& c) {
    TrapGeometry geo;
    geo.g0 = mhz_to_rad_us(c.get_double("geometry.g0_mhz", 16.0));
    geo.lambda_probe_um = c.get_double("geometry.lambda_probe_nm", 780.2) * 1e-3;
    geo.lambda_trap_um = c.get_double("geometry.lambda_trap_nm", 785.3) * 1e-3;
    geo.waist_probe_um = c.get_double("geometry.waist_probe_um", 29.0);
    geo.waist_trap_um = c.get_double("geometry.waist_trap_um", 29.0);
    const double trap_power_nw = c.get_double("geometry.trap_power_nw", 170.0);
    const double stark_mhz =
        c.get_double("geometry.stark_max_mhz", 35.0 * trap_power_nw / 170.0);
    geo.stark_max = mhz_to_rad_us(stark_mhz);
    geo.trap_depth = mhz_to_rad_us(c.get_double("geometry.trap_depth_mhz", stark_mhz / 2.0));
    geo.box_z_um = c.get_double("geometry.box_z_um", 30.0);
    geo.box_rho_um = c.get_double("geometry.box_rho_um", 40.0);
    geo.validate();
    return geo;
}

inline ProtocolConfig make_protocol(const Config& c) {
    ProtocolConfig proto;
    proto.check_duration_us = c.get_double("protocol.check_duration_us", proto.check_duration_us);
    proto.check_power_pw = c.get_double("protocol.check_power_pw", proto.check_power_pw);
    proto.check_delta_c = mhz_to_rad_us(c.get_double("protocol.check_delta_c_mhz", 0.0));
    proto.probe_duration_us = c.get_double("protocol.probe_duration_us", proto.probe_duration_us);
    proto.n_repetitions = int(c.get_int("protocol.n_repetitions", proto.n_repetitions));
    proto.g_min_fraction = c.get_double("protocol.g_min_fraction", proto.g_min_fraction);
    proto.detector_efficiency =
        c.get_double("protocol.detector_efficiency", proto.detector_efficiency);
    proto.detect_lambda_um = c.get_double("protocol.detect_lambda_um", proto.detect_lambda_um);
    proto.validate();
    return proto;
}

inline FieldModel parse_field_model(const std::string& s) {
    if (s == "quantum") return FieldModel::quantum;
    if (s == "single-excitation") return FieldModel::single_excitation;
    throw ConfigError("unknown field model '" + s +
                      "' (expected 'quantum' or 'single-excitation')");
}

inline MotionConfig make_motion(const Config& c) {
    MotionConfig m;
    m.enabled = c.get_bool("motion.enabled", false);
    m.field_model = parse_field_model(c.get_string("motion.field_model", "quantum"));
    m.dt_us = c.get_double("motion.dt_us", m.dt_us);
    m.inject_wells = int(c.get_int("motion.inject_wells", m.inject_wells));
    m.inject_sigma_xy_um = c.get_double("motion.inject_sigma_xy_um", m.inject_sigma_xy_um);
    m.inject_sigma_z_um = c.get_double("motion.inject_sigma_z_um", m.inject_sigma_z_um);
    m.temperature_uk = c.get_double("motion.temperature_uk", m.temperature_uk);
    m.rest_position = Eigen::Vector3d(c.get_double("motion.rest_x_um", 0.0),
                                      c.get_double("motion.rest_y_um", 0.0),
                                      c.get_double("motion.rest_z_um", 0.0));
    m.g_bins = int(c.get_int("motion.g_bins", m.g_bins));
    m.stark_bins = int(c.get_int("motion.stark_bins", m.stark_bins));
    m.validate();
    return m;
}

// [scan]: axis = diagonal (fixed atom-cavity detuning, delta_a rides
// delta_c) or vertical (fixed delta_a).  For fixed-atom spectra the
// detunings are the effective ones; for Monte Carlo runs they are bare
// values to which the local Stark shift is applied.
inline std::vector<ScanPoint> make_scan(const Config& c) {
    const std::string axis = c.get_string("scan.axis");
    const double lo = mhz_to_rad_us(c.get_double("scan.lo_mhz"));
    const double hi = mhz_to_rad_us(c.get_double("scan.hi_mhz"));
    const double step = mhz_to_rad_us(c.get_double("scan.step_mhz"));
    if (axis == "diagonal") {
        const double dac = mhz_to_rad_us(c.get_double("scan.atom_cavity_mhz"));
        return make_diagonal_scan(dac, lo, hi, step);
    }
    if (axis == "vertical") {
        const double da = mhz_to_rad_us(c.get_double("scan.delta_a_mhz"));
        return make_vertical_scan(da, lo, hi, step);
    }
    throw ConfigError("scan.axis must be 'diagonal' or 'vertical', got '" + axis + "'");
}

inline SpectrumModel parse_spectrum_model(const std::string& s) {
    if (s == "quantum") return SpectrumModel::quantum;
    if (s == "single-excitation") return SpectrumModel::single_excitation;
    if (s == "maxwell-bloch") return SpectrumModel::maxwell_bloch;
    throw ConfigError("unknown model '" + s +
                      "' (expected 'quantum', 'single-excitation' or 'maxwell-bloch')");
}

inline FitConfig make_fit_config(const Config& c) {
    FitConfig f;
    f.g_lo_mhz = c.get_double("analysis.fit_g_lo_mhz", f.g_lo_mhz);
    f.g_hi_mhz = c.get_double("analysis.fit_g_hi_mhz", f.g_hi_mhz);
    f.g_step_mhz = c.get_double("analysis.fit_g_step_mhz", f.g_step_mhz);
    f.delta_a_lo_mhz = c.get_double("analysis.fit_delta_a_lo_mhz", f.delta_a_lo_mhz);
    f.delta_a_hi_mhz = c.get_double("analysis.fit_delta_a_hi_mhz", f.delta_a_hi_mhz);
    f.delta_a_step_mhz = c.get_double("analysis.fit_delta_a_step_mhz", f.delta_a_step_mhz);
    if (c.has("analysis.fit_fixed_delta_a_mhz")) {
        f.fix_delta_a = true;
        f.fixed_delta_a_mhz = c.get_double("analysis.fit_fixed_delta_a_mhz");
    }
    f.max_refine_evals = int(c.get_int("analysis.fit_max_refine_evals", f.max_refine_evals));
    f.validate();
    return f;
}

inline WindowSpec make_window(const Config& c, const std::string& prefix) {
    WindowSpec w;
    w.lo_mhz = c.get_double(prefix + "_lo_mhz");
    w.hi_mhz = c.get_double(prefix + "_hi_mhz");
    w.validate();
    return w;
}

}  // namespace cqed
