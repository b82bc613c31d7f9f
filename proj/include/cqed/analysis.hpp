// analysis.hpp — spectrum post-processing: window averages, nonlinear
// intensity-response extraction, peak finding, and least-squares fitting of
// (g, delta_a) with one nonnegative additive offset per spectrum.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqed/maxwell_bloch.hpp"
#include "cqed/scans.hpp"
#include "cqed/spectrum.hpp"
#include "cqed/steady_state.hpp"
#include "cqed/sweep.hpp"

namespace cqed {

// ----- window averaging -------------------------------------------------------

struct WindowSpec {
    double lo_mhz = 0.0;  // delta_c / 2pi bounds
    double hi_mhz = 0.0;

    void validate() const {
        if (!(lo_mhz < hi_mhz)) throw std::invalid_argument("WindowSpec: need lo < hi");
    }
    bool contains(double delta_c_rad_us) const {
        // Closed interval with a sub-Hz guard: scan grids are accumulated in
        // rad/us, so a nominal edge point can land a few 1e-14 MHz outside.
        constexpr double edge_eps_mhz = 1e-9;
        const double mhz = rad_us_to_mhz(delta_c_rad_us);
        return mhz >= lo_mhz - edge_eps_mhz && mhz <= hi_mhz + edge_eps_mhz;
    }
};

struct WindowAverage {
    double mean_fw = 0.0;
    double stderr_fw = 0.0;  // propagated from per-point spread, sqrt(sum s_i^2)/N
    int n_points = 0;
};

inline WindowAverage window_average(const Spectrum& sp, const WindowSpec& w) {
    w.validate();
    WindowAverage out;
    double var_sum = 0.0;
    for (const SpectrumPoint& pt : sp.points) {
        if (!w.contains(pt.delta_c)) continue;
        out.mean_fw += pt.p_out_fw;
        if (std::isfinite(pt.stderr_fw)) var_sum += pt.stderr_fw * pt.stderr_fw;
        ++out.n_points;
    }
    if (out.n_points == 0)
        throw std::invalid_argument("window_average: no points with delta_c in [" +
                                    std::to_string(w.lo_mhz) + ", " + std::to_string(w.hi_mhz) +
                                    "] MHz");
    out.mean_fw /= out.n_points;
    out.stderr_fw = std::sqrt(var_sum) / out.n_points;
    return out;
}

// ----- nonlinear intensity response --------------------------------------------

struct NonlinearResponsePoint {
    double p_in_pw = 0.0;
    double delta_fw = 0.0;   // on-window mean minus off-window mean
    double stderr_fw = 0.0;  // quadrature sum of the window errors
};

struct NonlinearResponse {
    std::vector<NonlinearResponsePoint> points;
    double slope = std::numeric_limits<double>::quiet_NaN();      // d log(delta) / d log(p)
    double intercept = std::numeric_limits<double>::quiet_NaN();  // log-log intercept
    int n_used = 0;      // points entering the log-log fit (delta > 0)
    int n_excluded = 0;  // nonpositive deltas excluded from the fit
};

inline NonlinearResponse nonlinear_response(const std::vector<Spectrum>& spectra,
                                            const WindowSpec& on, const WindowSpec& off) {
    if (spectra.size() < 3)
        throw std::invalid_argument("nonlinear_response: need at least 3 input powers");
    NonlinearResponse out;
    for (const Spectrum& sp : spectra) {
        const WindowAverage a_on = window_average(sp, on);
        const WindowAverage a_off = window_average(sp, off);
        NonlinearResponsePoint pt;
        pt.p_in_pw = sp.p_in_pw;
        pt.delta_fw = a_on.mean_fw - a_off.mean_fw;
        pt.stderr_fw = std::hypot(a_on.stderr_fw, a_off.stderr_fw);
        out.points.push_back(pt);
    }

    // Least squares of log(delta) on log(p_in) over usable points.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const NonlinearResponsePoint& pt : out.points) {
        if (!(pt.delta_fw > 0.0) || !(pt.p_in_pw > 0.0)) {
            ++out.n_excluded;
            continue;
        }
        const double x = std::log(pt.p_in_pw);
        const double y = std::log(pt.delta_fw);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++out.n_used;
    }
    if (out.n_used >= 2) {
        const double n = out.n_used;
        const double denom = n * sxx - sx * sx;
        if (std::abs(denom) > 1e-12 * (std::abs(n * sxx) + sx * sx + 1e-300)) {
            out.slope = (n * sxy - sx * sy) / denom;
            out.intercept = (sy - out.slope * sx) / n;
        }
    }
    return out;
}

inline void write_response_csv(std::ostream& os, const NonlinearResponse& resp) {
    os << "p_in_pW, delta_fW, stderr_fW\n";
    for (const NonlinearResponsePoint& pt : resp.points)
        os << detail::format_double(pt.p_in_pw) << ", " << detail::format_double(pt.delta_fw)
           << ", " << detail::format_double(pt.stderr_fw) << "\n";
}

// ----- peak finding -------------------------------------------------------------

struct Peak {
    double delta_c = 0.0;  // rad/us, parabola-refined
    double height_fw = 0.0;
    double prominence_fw = 0.0;
};

// Strict local maxima with at least the requested prominence.  Prominence of
// a maximum: on each side walk to the nearest point higher than the maximum
// (or the spectrum edge), take the minimum along the walk; the prominence is
// the height above the larger of the two side minima.
inline std::vector<Peak> find_peaks(const Spectrum& sp, double min_prominence_fw) {
    if (sp.points.size() < 5)
        throw std::invalid_argument("find_peaks: need at least 5 spectrum points");
    std::vector<SpectrumPoint> pts = sp.points;
    std::sort(pts.begin(), pts.end(),
              [](const SpectrumPoint& a, const SpectrumPoint& b) { return a.delta_c < b.delta_c; });
    const std::size_t n = pts.size();
    std::vector<Peak> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double y = pts[i].p_out_fw;
        if (!(y > pts[i - 1].p_out_fw) || !(y > pts[i + 1].p_out_fw)) continue;

        double left_min = y;
        for (std::size_t k = i; k-- > 0;) {
            if (pts[k].p_out_fw > y) break;
            left_min = std::min(left_min, pts[k].p_out_fw);
        }
        double right_min = y;
        for (std::size_t k = i + 1; k < n; ++k) {
            if (pts[k].p_out_fw > y) break;
            right_min = std::min(right_min, pts[k].p_out_fw);
        }
        const double prominence = y - std::max(left_min, right_min);
        if (prominence < min_prominence_fw) continue;

        // Vertex of the parabola through the three samples around i.
        const double x0 = pts[i - 1].delta_c, x1 = pts[i].delta_c, x2 = pts[i + 1].delta_c;
        const double y0 = pts[i - 1].p_out_fw, y1 = y, y2 = pts[i + 1].p_out_fw;
        double xv = x1, yv = y1;
        const double d01 = (y1 - y0) / (x1 - x0);
        const double d12 = (y2 - y1) / (x2 - x1);
        const double curv = (d12 - d01) / (x2 - x0);  // second divided difference
        if (curv < 0.0) {
            xv = 0.5 * (x0 + x1 + (d01 / -curv));
            const double a = curv;
            const double b = d01 - a * (x0 + x1);
            const double c = y0 - (a * x0 + b) * x0;
            yv = (a * xv + b) * xv + c;
        }
        Peak pk;
        pk.delta_c = xv;
        pk.height_fw = yv;
        pk.prominence_fw = prominence;
        peaks.push_back(pk);
    }
    return peaks;
}

// ----- (g, delta_a) fitting ------------------------------------------------------

enum class SpectrumModel { quantum, single_excitation, maxwell_bloch };

inline double model_power_at(SpectrumModel model, const SystemParams& base_template, double g,
                             double delta_a, double delta_c, double p_in_pw,
                             const PowerCalibration& cal) {
    SystemParams p = base_template;
    p.g = g;
    p.delta_a = delta_a;
    p.delta_c = delta_c;
    p.eta = drive_from_power(p_in_pw, p.kappa, cal);
    switch (model) {
        case SpectrumModel::quantum:
            return transmission(p, cal);
        case SpectrumModel::single_excitation:
            return transmitted_power_fw(single_excitation_photon(p), cal);
        case SpectrumModel::maxwell_bloch: {
            const auto states = mb_steady_states(p);
            return transmitted_power_fw(states.front().photon, cal);
        }
    }
    throw std::logic_error("model_power_at: unknown model");
}

struct FitConfig {
    double g_lo_mhz = 8.0, g_hi_mhz = 16.0, g_step_mhz = 0.5;
    double delta_a_lo_mhz = -3.0, delta_a_hi_mhz = 3.0, delta_a_step_mhz = 0.5;
    bool fix_delta_a = false;
    double fixed_delta_a_mhz = 0.0;
    int max_refine_evals = 200;
    double simplex_tol_mhz = 1e-3;  // terminate when the simplex shrinks below this
    int workers = 1;

    void validate() const {
        if (!(g_lo_mhz < g_hi_mhz) || !(g_step_mhz > 0.0))
            throw std::invalid_argument("FitConfig: bad g grid");
        if (!fix_delta_a && (!(delta_a_lo_mhz < delta_a_hi_mhz) || !(delta_a_step_mhz > 0.0)))
            throw std::invalid_argument("FitConfig: bad delta_a grid");
        if (max_refine_evals < 0) throw std::invalid_argument("FitConfig: bad refine budget");
    }
};

struct FitResult {
    double g = 0.0;        // rad/us
    double delta_a = 0.0;  // rad/us
    std::vector<double> offsets_fw;  // one nonnegative constant per spectrum
    double residual_fw2 = std::numeric_limits<double>::infinity();
    bool converged = false;
    double grid_g = 0.0;  // best grid point before refinement (diagnostics)
    double grid_delta_a = 0.0;
    double grid_residual_fw2 = std::numeric_limits<double>::infinity();
    long n_evaluations = 0;
};

namespace detail {

// Residual at (g, delta_a) with the per-spectrum offsets minimized out
// analytically: for model m and data d the best constant is mean(d - m),
// clamped to >= 0.
struct FitObjective {
    SpectrumModel model;
    const SystemParams* base;
    const PowerCalibration* cal;
    const std::vector<Spectrum>* spectra;

    double operator()(double g, double delta_a, std::vector<double>* offsets_out = nullptr) const {
        double total = 0.0;
        if (offsets_out) offsets_out->clear();
        for (const Spectrum& sp : *spectra) {
            std::vector<double> m(sp.points.size());
            double shift = 0.0;
            for (std::size_t i = 0; i < sp.points.size(); ++i) {
                m[i] = model_power_at(model, *base, g, delta_a, sp.points[i].delta_c, sp.p_in_pw,
                                      *cal);
                shift += sp.points[i].p_out_fw - m[i];
            }
            const double offset = std::max(0.0, shift / double(sp.points.size()));
            if (offsets_out) offsets_out->push_back(offset);
            for (std::size_t i = 0; i < sp.points.size(); ++i) {
                const double r = sp.points[i].p_out_fw - m[i] - offset;
                total += r * r;
            }
        }
        return total;
    }
};

}  // namespace detail

// Deterministic multi-start fit: coarse grid over (g, delta_a), then a
// Nelder-Mead refinement around the best grid point.  delta_a can be frozen
// (single-spectrum degenerate fits).  The objective of the reported point
// never exceeds the best grid value.
inline FitResult fit_g_delta(const std::vector<Spectrum>& spectra, SpectrumModel model,
                             const SystemParams& base_template, const PowerCalibration& cal,
                             const FitConfig& cfg = {}) {
    cfg.validate();
    if (spectra.empty()) throw std::invalid_argument("fit_g_delta: no spectra");
    for (const Spectrum& sp : spectra)
        if (sp.points.empty()) throw std::invalid_argument("fit_g_delta: empty spectrum");

    detail::FitObjective objective{model, &base_template, &cal, &spectra};

    std::vector<double> g_grid, da_grid;
    for (double g = cfg.g_lo_mhz; g <= cfg.g_hi_mhz + 1e-9; g += cfg.g_step_mhz)
        g_grid.push_back(mhz_to_rad_us(g));
    if (cfg.fix_delta_a) {
        da_grid.push_back(mhz_to_rad_us(cfg.fixed_delta_a_mhz));
    } else {
        for (double d = cfg.delta_a_lo_mhz; d <= cfg.delta_a_hi_mhz + 1e-9;
             d += cfg.delta_a_step_mhz)
            da_grid.push_back(mhz_to_rad_us(d));
    }

    const std::size_t n_candidates = g_grid.size() * da_grid.size();
    std::vector<double> residuals(n_candidates,
                                  std::numeric_limits<double>::infinity());
    parallel_for(n_candidates, cfg.workers, [&](std::size_t i) {
        const double g = g_grid[i / da_grid.size()];
        const double da = da_grid[i % da_grid.size()];
        try {
            residuals[i] = objective(g, da);
        } catch (const SolverError&) {
            // leave infinite: candidate unusable
        }
    });

    FitResult res;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n_candidates; ++i)
        if (residuals[i] < residuals[best]) best = i;
    if (!std::isfinite(residuals[best]))
        throw SolverError("fit_g_delta: every grid candidate failed to evaluate");
    res.grid_g = g_grid[best / da_grid.size()];
    res.grid_delta_a = da_grid[best % da_grid.size()];
    res.grid_residual_fw2 = residuals[best];
    res.n_evaluations = long(n_candidates);

    // Nelder-Mead refinement (1D when delta_a is frozen).  Out-of-box
    // candidates are rejected with an infinite objective; the box is the
    // grid padded by one step so a boundary optimum can still be polished.
    const double g_lo = mhz_to_rad_us(cfg.g_lo_mhz - cfg.g_step_mhz);
    const double g_hi = mhz_to_rad_us(cfg.g_hi_mhz + cfg.g_step_mhz);
    const double da_lo = mhz_to_rad_us(cfg.delta_a_lo_mhz - cfg.delta_a_step_mhz);
    const double da_hi = mhz_to_rad_us(cfg.delta_a_hi_mhz + cfg.delta_a_step_mhz);
    const int dims = cfg.fix_delta_a ? 1 : 2;

    auto eval = [&](const std::vector<double>& x) -> double {
        const double g = x[0];
        const double da = dims == 2 ? x[1] : mhz_to_rad_us(cfg.fixed_delta_a_mhz);
        if (g < g_lo || g > g_hi) return std::numeric_limits<double>::infinity();
        if (dims == 2 && (da < da_lo || da > da_hi))
            return std::numeric_limits<double>::infinity();
        ++res.n_evaluations;
        try {
            return objective(g, da);
        } catch (const SolverError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<std::vector<double>> simplex;
    std::vector<double> fvals;
    {
        std::vector<double> x0{res.grid_g};
        if (dims == 2) x0.push_back(res.grid_delta_a);
        simplex.push_back(x0);
        fvals.push_back(res.grid_residual_fw2);
        const double dg = 0.5 * mhz_to_rad_us(cfg.g_step_mhz);
        const double dd = 0.5 * mhz_to_rad_us(cfg.delta_a_step_mhz);
        for (int k = 0; k < dims; ++k) {
            std::vector<double> x = x0;
            x[k] += (k == 0 ? dg : dd);
            simplex.push_back(x);
            fvals.push_back(eval(x));
        }
    }

    const double tol = mhz_to_rad_us(cfg.simplex_tol_mhz);
    int evals = 0;
    while (evals < cfg.max_refine_evals) {
        // order vertices by objective
        std::vector<std::size_t> idx(simplex.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (std::size_t i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fvals[i]);
        }
        simplex.swap(s2);
        fvals.swap(f2);

        double extent = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            for (int k = 0; k < dims; ++k)
                extent = std::max(extent, std::abs(simplex[i][k] - simplex[0][k]));
        if (extent < tol) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(std::size_t(dims), 0.0);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
            for (int k = 0; k < dims; ++k) centroid[std::size_t(k)] += simplex[i][std::size_t(k)];
        for (int k = 0; k < dims; ++k) centroid[std::size_t(k)] /= double(simplex.size() - 1);

        const std::vector<double>& worst = simplex.back();
        auto blend = [&](double coeff) {
            std::vector<double> x(static_cast<std::size_t>(dims));
            for (int k = 0; k < dims; ++k)
                x[std::size_t(k)] =
                    centroid[std::size_t(k)] + coeff * (centroid[std::size_t(k)] - worst[std::size_t(k)]);
            return x;
        };

        std::vector<double> xr = blend(1.0);  // reflection
        double fr = eval(xr);
        ++evals;
        if (fr < fvals.front()) {
            std::vector<double> xe = blend(2.0);  // expansion
            double fe = eval(xe);
            ++evals;
            if (fe < fr) {
                simplex.back() = xe;
                fvals.back() = fe;
            } else {
                simplex.back() = xr;
                fvals.back() = fr;
            }
        } else if (fr < fvals[fvals.size() - 2]) {
            simplex.back() = xr;
            fvals.back() = fr;
        } else {
            std::vector<double> xc = blend(-0.5);  // contraction
            double fc = eval(xc);
            ++evals;
            if (fc < fvals.back()) {
                simplex.back() = xc;
                fvals.back() = fc;
            } else {  // shrink toward the best vertex
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    for (int k = 0; k < dims; ++k)
                        simplex[i][std::size_t(k)] =
                            simplex[0][std::size_t(k)] +
                            0.5 * (simplex[i][std::size_t(k)] - simplex[0][std::size_t(k)]);
                    fvals[i] = eval(simplex[i]);
                    ++evals;
                }
            }
        }
    }

    std::size_t best_vertex = 0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
        if (fvals[i] < fvals[best_vertex]) best_vertex = i;

    res.g = simplex[best_vertex][0];
    res.delta_a =
        dims == 2 ? simplex[best_vertex][1] : mhz_to_rad_us(cfg.fixed_delta_a_mhz);
    res.residual_fw2 = objective(res.g, res.delta_a, &res.offsets_fw);
    if (res.residual_fw2 > res.grid_residual_fw2) {
        // Refinement never worsens the reported point.
        res.g = res.grid_g;
        res.delta_a = res.grid_delta_a;
        res.residual_fw2 = objective(res.g, res.delta_a, &res.offsets_fw);
    }
    return res;
}

}  // namespace cqed
