// spectrum.hpp — spectrum container and CSV schema.
//
// One CSV row per scan point:
//   delta_c_MHz, delta_a_MHz, p_in_pW, p_out_fW, stderr_fW, n_photon, p_excited, model
// Detunings are stored internally in rad/us and converted to ordinary MHz
// at the file boundary.  stderr_fW is the standard error of the mean for
// aggregated data, 0 for theory curves, and nan when a point has a single
// sample.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqed/units.hpp"

namespace cqed {

struct SpectrumPoint {
    double delta_c = 0.0;      // rad/us
    double delta_a = 0.0;      // rad/us
    double p_out_fw = 0.0;
    double stderr_fw = 0.0;
    double n_photon = 0.0;
    double p_excited = 0.0;
};

struct Spectrum {
    std::vector<SpectrumPoint> points;
    double p_in_pw = 0.0;
    std::string model;  // "quantum" | "single-excitation" | "maxwell-bloch" | "montecarlo-*"
};

inline const char* spectrum_csv_header() {
    return "delta_c_MHz, delta_a_MHz, p_in_pW, p_out_fW, stderr_fW, n_photon, p_excited, model";
}

namespace detail {
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
}  // namespace detail

inline void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
    out << spectrum_csv_header() << "\n";
    for (const auto& pt : s.points) {
        out << detail::format_double(rad_us_to_mhz(pt.delta_c)) << ", "
            << detail::format_double(rad_us_to_mhz(pt.delta_a)) << ", "
            << detail::format_double(s.p_in_pw) << ", "
            << detail::format_double(pt.p_out_fw) << ", "
            << detail::format_double(pt.stderr_fw) << ", "
            << detail::format_double(pt.n_photon) << ", "
            << detail::format_double(pt.p_excited) << ", "
            << s.model << "\n";
    }
}

inline void write_spectrum_csv(const std::string& path, const Spectrum& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_spectrum_csv: cannot open " + path);
    write_spectrum_csv(out, s);
}

namespace detail {
inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    return fields;
}
}  // namespace detail

inline Spectrum read_spectrum_csv(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_spectrum_csv: " + origin + ": empty file");
    const auto header = detail::split_csv_row(line);
    const auto expected = detail::split_csv_row(spectrum_csv_header());
    if (header != expected) {
        std::string msg = "read_spectrum_csv: " + origin + ": header mismatch";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i >= header.size() || header[i] != expected[i]) {
                msg += "; column " + std::to_string(i + 1) + " should be '" + expected[i] +
                       "', got '" + (i < header.size() ? header[i] : "<missing>") + "'";
                break;
            }
        }
        throw std::runtime_error(msg);
    }

    Spectrum s;
    bool first = true;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv_row(line);
        if (f.size() != expected.size())
            throw std::runtime_error("read_spectrum_csv: " + origin + ": row " +
                                     std::to_string(row) + " has " + std::to_string(f.size()) +
                                     " fields, want " + std::to_string(expected.size()));
        SpectrumPoint pt;
        try {
            pt.delta_c = mhz_to_rad_us(std::stod(f[0]));
            pt.delta_a = mhz_to_rad_us(std::stod(f[1]));
            const double p_in = std::stod(f[2]);
            pt.p_out_fw = std::stod(f[3]);
            pt.stderr_fw = std::stod(f[4]);
            pt.n_photon = std::stod(f[5]);
            pt.p_excited = std::stod(f[6]);
            if (first) {
                s.p_in_pw = p_in;
                s.model = f[7];
                first = false;
            } else if (s.model != f[7]) {
                throw std::runtime_error("mixed model tags ('" + s.model + "' vs '" + f[7] + "')");
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("read_spectrum_csv: " + origin + ": row " +
                                     std::to_string(row) + ": " + e.what());
        }
        s.points.push_back(pt);
    }
    return s;
}

inline Spectrum read_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_spectrum_csv: cannot open " + path);
    return read_spectrum_csv(in, path);
}

}  // namespace cqed
