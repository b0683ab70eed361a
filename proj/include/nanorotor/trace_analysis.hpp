/**
 * @file trace_analysis.hpp
 * @brief Kinematics recovered from normalised scattering traces.
 *
 * Translation along the cavity modulates the signal at nu_trans = 2 v_z / lambda,
 * rotation at nu_rot = 2 f_rot, and the vertical transit imposes the Gaussian
 * envelope exp(-2 v_x^2 (t - t_c)^2 / w0^2). Averaging over half a rotation period
 * leaves cos^2(kz) times the envelope, from which z(t) is unfolded.
 */

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nanorotor/constants.hpp"
#include "nanorotor/errors.hpp"
#include "nanorotor/field_optics.hpp"
#include "nanorotor/signal_trace.hpp"
#include "nanorotor/spectrum.hpp"

namespace nanorotor {

enum class ExtremumKind { maximum, minimum };

struct Extremum {
    std::size_t index;
    ExtremumKind kind;
};

namespace detail {

/// Alternating extrema whose swing to the next opposite extremum exceeds `swing`.
inline std::vector<Extremum> zigzag_extrema(const std::vector<double>& x, double swing) {
    std::vector<Extremum> out;
    if (x.size() < 2) return out;
    int mode = 0;  // +1 rising, -1 falling
    std::size_t hi = 0, lo = 0, cand = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (mode == 0) {
            if (x[i] > x[hi]) hi = i;
            if (x[i] < x[lo]) lo = i;
            if (x[i] - x[lo] > swing) {
                mode = 1;
                cand = i;
            } else if (x[hi] - x[i] > swing) {
                mode = -1;
                cand = i;
            }
        } else if (mode == 1) {
            if (x[i] > x[cand]) {
                cand = i;
            } else if (x[cand] - x[i] > swing) {
                out.push_back({cand, ExtremumKind::maximum});
                mode = -1;
                cand = i;
            }
        } else {
            if (x[i] < x[cand]) {
                cand = i;
            } else if (x[i] - x[cand] > swing) {
                out.push_back({cand, ExtremumKind::minimum});
                mode = 1;
                cand = i;
            }
        }
    }
    return out;
}

/// Centred 5-sample moving average; the two samples at each end are left as is.
inline std::vector<double> smooth5(const std::vector<double>& x) {
    std::vector<double> y = x;
    for (std::size_t i = 2; i + 2 < x.size(); ++i) {
        y[i] = (x[i - 2] + x[i - 1] + x[i] + x[i + 1] + x[i + 2]) / 5.0;
    }
    return y;
}

inline double parabolic_offset(double a, double b, double c) {
    const double denom = a - 2.0 * b + c;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

}  // namespace detail

// --- rotation average -------------------------------------------------------

namespace detail {

/// Centred mean over `width` samples (non-integer allowed) using the piecewise-linear
/// interpolant; near the ends the window is shifted to stay inside the data.
inline std::vector<double> sliding_mean(const std::vector<double>& x, double width) {
    const std::size_t n = x.size();
    std::vector<double> cum(n, 0.0);  // integral in sample units up to sample i
    for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (x[i - 1] + x[i]);
    auto integral = [&](double u) {
        const auto j = std::min(static_cast<std::size_t>(u), n - 2);
        const double f = u - static_cast<double>(j);
        return cum[j] + x[j] * f + 0.5 * (x[j + 1] - x[j]) * f * f;
    };
    std::vector<double> out(n);
    const double last = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::clamp(static_cast<double>(i) - 0.5 * width, 0.0, last - width);
        out[i] = (integral(a + width) - integral(a)) / width;
    }
    return out;
}

}  // namespace detail

/**
 * Sliding mean over a window of exactly 1 / (2 f_rot_hint) seconds, centred on
 * each sample. The window integral uses the piecewise-linear interpolant, so
 * non-integer window lengths are handled without bias. Near the ends the window
 * is shifted to stay inside the trace.
 */
[[nodiscard]] inline SignalTrace rotation_average(const SignalTrace& trace, double f_rot_hint) {
    trace.validate();
    if (!(f_rot_hint > 0.0) || !std::isfinite(f_rot_hint)) throw ValidityError("rotation hint must be positive");
    const double width = trace.sample_rate / (2.0 * f_rot_hint);  // in samples
    if (width < 4.0) {
        throw ResolutionError("averaging window spans " + std::to_string(width) + " samples, need at least 4");
    }
    const std::size_t n = trace.size();
    if (n < 2 || width > static_cast<double>(n - 1)) throw ResolutionError("trace shorter than the averaging window");
    SignalTrace out = trace;
    out.samples = detail::sliding_mean(trace.samples, width);
    return out;
}

// --- envelope fit -----------------------------------------------------------

struct EnvelopeFit {
    double v_x = 0.0;        // m/s
    double v_x_sigma = 0.0;  // m/s, from the fit covariance
    double t_center = 0.0;   // s
    double amplitude = 0.0;  // in trace units
    double residual = 0.0;   // rms residual relative to the amplitude
    std::size_t n_points = 0;
    bool upper_envelope = false;  // fitted to the local maxima rather than all samples

    /// exp(-2 v_x^2 (t - t_c)^2 / w0^2) for the given waist.
    [[nodiscard]] double envelope(double t, double waist) const {
        const double x = v_x * (t - t_center);
        return std::exp(-2.0 * x * x / (waist * waist));
    }
};

struct EnvelopeFitOptions {
    std::optional<double> f_rot_hint;     // average over the rotation before fitting
    std::optional<double> nu_trans_hint;  // Hz; fit the translational modulation explicitly
    std::size_t averaging_passes = 1;  // rotation averages before the plain fit
    std::size_t model_passes = 2;      // rotation and translation averages with the modulated model
    double extremum_swing = 0.05;  // relative to the maximum
    std::size_t min_extrema = 5;   // fewer maxima than this: fit every sample
    double max_residual = 0.3;     // relative rms residual beyond which the fit is rejected
};

namespace detail {

// A exp(-q^2 (s - c)^2) in scaled time s = (t - t_mid) / D.
struct GaussianResidual {
    const std::vector<double>* s;
    const std::vector<double>* y;

    [[nodiscard]] int inputs() const { return 3; }
    [[nodiscard]] int values() const { return static_cast<int>(s->size()); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        for (std::size_t i = 0; i < s->size(); ++i) {
            const double d = (*s)[i] - p[2];
            f[static_cast<Eigen::Index>(i)] = p[0] * std::exp(-p[1] * p[1] * d * d) - (*y)[i];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
        for (std::size_t i = 0; i < s->size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double d = (*s)[i] - p[2];
            const double e = std::exp(-p[1] * p[1] * d * d);
            j(r, 0) = e;
            j(r, 1) = -2.0 * p[0] * e * p[1] * d * d;
            j(r, 2) = 2.0 * p[0] * e * p[1] * p[1] * d;
        }
        return 0;
    }
};

// A exp(-q^2 (s - c)^2) (1 + a cos(w s) + b sin(w s)) pushed through the same
// sliding means as the data, so the residual leak of the modulation is modelled
// rather than mistaken for envelope curvature.
struct SmoothedEnvelopeResidual {
    const std::vector<double>* s;
    const std::vector<double>* y;
    std::vector<double> widths;  // sliding-mean widths in samples, applied in order
    double omega = 0.0;          // modulation in scaled time

    [[nodiscard]] int inputs() const { return 5; }
    [[nodiscard]] int values() const { return static_cast<int>(s->size()); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        std::vector<double> m(s->size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double u = (*s)[i];
            const double d = u - p[2];
            m[i] = p[0] * std::exp(-p[1] * p[1] * d * d) *
                   (1.0 + p[3] * std::cos(omega * u) + p[4] * std::sin(omega * u));
        }
        for (double w : widths) m = sliding_mean(m, w);
        for (std::size_t i = 0; i < m.size(); ++i) f[static_cast<Eigen::Index>(i)] = m[i] - (*y)[i];
        return 0;
    }

    // the averages are linear, so each Jacobian column is the averaged partial derivative
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
        const std::size_t n = s->size();
        std::vector<std::vector<double>> cols(5, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (*s)[i];
            const double d = u - p[2];
            const double e = std::exp(-p[1] * p[1] * d * d);
            const double c = std::cos(omega * u), sn = std::sin(omega * u);
            const double mod = 1.0 + p[3] * c + p[4] * sn;
            cols[0][i] = e * mod;
            cols[1][i] = -2.0 * p[0] * p[1] * d * d * e * mod;
            cols[2][i] = 2.0 * p[0] * p[1] * p[1] * d * e * mod;
            cols[3][i] = p[0] * e * c;
            cols[4][i] = p[0] * e * sn;
        }
        for (std::size_t k = 0; k < 5; ++k) {
            for (double w : widths) cols[k] = sliding_mean(cols[k], w);
            for (std::size_t i = 0; i < n; ++i) j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cols[k][i];
        }
        return 0;
    }
};

}  // namespace detail

/**
 * Least-squares fit of A exp(-2 v_x^2 (t - t_c)^2 / w0^2). With a rotation hint the
 * trace is first rotation-averaged. With a translation hint the cos^2(kz)
 * modulation is also averaged out and the fitted model carries the same
 * averaging plus a sinusoid at nu_trans. Without it, a strongly modulated signal
 * (enough zigzag maxima) is fitted on its maxima only: they sample the envelope at
 * the antinode crossings where cos^2(kz) = 1.
 */
[[nodiscard]] inline EnvelopeFit fit_envelope(const SignalTrace& trace, const CavityParams& cav,
                                              const EnvelopeFitOptions& opt = {}) {
    trace.validate();
    cav.validate();
    if (trace.size() < 8) throw InsufficientDataError("envelope fit needs at least 8 samples");

    const bool modulated = opt.nu_trans_hint && *opt.nu_trans_hint > 0.0 && std::isfinite(*opt.nu_trans_hint);
    const std::size_t passes = modulated ? opt.model_passes : opt.averaging_passes;
    SignalTrace data = trace;
    std::vector<double> widths;
    if (opt.f_rot_hint) {
        for (std::size_t p = 0; p < passes; ++p) {
            data = rotation_average(data, *opt.f_rot_hint);
            widths.push_back(trace.sample_rate / (2.0 * *opt.f_rot_hint));
        }
    }
    if (modulated) {
        const double w = trace.sample_rate / *opt.nu_trans_hint;
        if (w >= 2.0 && w <= 0.5 * static_cast<double>(trace.size() - 1)) {
            for (std::size_t p = 0; p < passes; ++p) {
                data.samples = detail::sliding_mean(data.samples, w);
                widths.push_back(w);
            }
        }
    }
    const double peak = data.max();
    if (!(peak > 0.0) || !std::isfinite(peak)) throw FitError("trace has no positive samples", 0.0);

    std::vector<double> y(data.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = data.samples[i] / peak;

    const double duration = trace.duration();
    const double t_mid = trace.t0 + 0.5 * duration;
    std::vector<double> s_pts;
    std::vector<double> y_pts;
    EnvelopeFit fit;
    std::vector<std::size_t> maxima;
    if (!modulated) {
        for (const auto& e : detail::zigzag_extrema(y, opt.extremum_swing)) {
            if (e.kind == ExtremumKind::maximum) maxima.push_back(e.index);
        }
    }
    if (maxima.size() >= opt.min_extrema) {
        fit.upper_envelope = true;
        for (auto i : maxima) {
            s_pts.push_back((data.time(i) - t_mid) / duration);
            y_pts.push_back(y[i]);
        }
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) {
            s_pts.push_back((data.time(i) - t_mid) / duration);
            y_pts.push_back(y[i]);
        }
    }

    // moment estimates for the starting point
    double w = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < s_pts.size(); ++i) {
        const double wi = std::max(y_pts[i], 0.0);
        w += wi;
        m1 += wi * s_pts[i];
    }
    if (!(w > 0.0)) throw FitError("no positive weight for the envelope fit", 0.0);
    const double c0 = m1 / w;
    double m2 = 0.0;
    for (std::size_t i = 0; i < s_pts.size(); ++i) {
        const double d = s_pts[i] - c0;
        m2 += std::max(y_pts[i], 0.0) * d * d;
    }
    const double sd = std::sqrt(std::max(m2 / w, 1e-12));
    const double a0 = *std::max_element(y_pts.begin(), y_pts.end());
    const double q0 = 1.0 / (std::sqrt(2.0) * sd);

    using LmStatus = Eigen::LevenbergMarquardtSpace::Status;
    auto converged = [](LmStatus status) {
        return status == LmStatus::RelativeReductionTooSmall || status == LmStatus::RelativeErrorTooSmall ||
               status == LmStatus::RelativeErrorAndReductionTooSmall || status == LmStatus::CosinusTooSmall;
    };
    Eigen::VectorXd p;
    Eigen::VectorXd f(static_cast<Eigen::Index>(s_pts.size()));
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(s_pts.size()), modulated ? 5 : 3);
    LmStatus status;
    if (modulated) {
        p.resize(5);
        p << a0, q0, c0, 0.0, 0.0;
        detail::SmoothedEnvelopeResidual functor{&s_pts, &y_pts, widths,
                                                 2.0 * constants::pi * *opt.nu_trans_hint * duration};
        Eigen::LevenbergMarquardt<detail::SmoothedEnvelopeResidual> lm(functor);
        lm.parameters.xtol = lm.parameters.ftol = 1e-14;
        status = lm.minimize(p);
        functor(p, f);
        functor.df(p, jac);
    } else {
        p.resize(3);
        p << a0, q0, c0;
        detail::GaussianResidual functor{&s_pts, &y_pts};
        Eigen::LevenbergMarquardt<detail::GaussianResidual> lm(functor);
        lm.parameters.xtol = lm.parameters.ftol = 1e-14;
        status = lm.minimize(p);
        functor(p, f);
        functor.df(p, jac);
    }
    const double rms = std::sqrt(f.squaredNorm() / static_cast<double>(s_pts.size()));
    if (!converged(status)) throw FitError("envelope fit did not converge", rms);

    const double q = std::abs(p[1]);
    fit.v_x = q * cav.waist / (std::sqrt(2.0) * duration);
    fit.t_center = t_mid + p[2] * duration;
    fit.amplitude = p[0] * peak;
    fit.residual = p[0] > 0.0 ? rms / p[0] : rms;
    fit.n_points = s_pts.size();
    if (!(p[0] > 0.0) || !(fit.v_x > 0.0) || !std::isfinite(fit.v_x)) {
        throw FitError("envelope fit collapsed to a non-positive amplitude or velocity", rms);
    }
    if (cav.waist / fit.v_x > duration) throw FitError("fitted envelope is wider than the trace", rms);
    if (fit.t_center < trace.t0 || fit.t_center > trace.t0 + duration) {
        throw FitError("fitted envelope centre lies outside the trace", rms);
    }
    if (fit.residual > opt.max_residual) throw FitError("envelope fit residual too large", rms);

    const auto m = static_cast<double>(s_pts.size());
    const auto k = static_cast<double>(p.size());
    if (m > k) {
        const Eigen::MatrixXd info = jac.transpose() * jac;
        const Eigen::MatrixXd cov = info.inverse() * (f.squaredNorm() / (m - k));
        if (std::isfinite(cov(1, 1)) && cov(1, 1) >= 0.0) {
            fit.v_x_sigma = std::sqrt(cov(1, 1)) * cav.waist / (std::sqrt(2.0) * duration);
        }
    }
    return fit;
}

// --- axial reconstruction ---------------------------------------------------

struct ReconstructionOptions {
    double region_threshold = 0.1;  // analyse where the fitted envelope exceeds this
    double core_threshold = 0.5;    // normalisation and channelling window
    double branch_swing = 0.1;      // zigzag swing on the smoothed ratio
    double node_level = 0.25;       // a minimum below this is a node crossing
    double mismatch_margin = 0.05;  // tolerated excursion of r outside [0, 1]
    double mismatch_fraction = 0.1; // warn when more samples than this are outside
    bool stretch_contrast = true;   // on lattice crossings, map the core minimum to a node
};

struct AxialReconstruction {
    std::vector<double> t;  // s
    std::vector<double> z;  // m, up to global sign and offset
    std::vector<double> r;  // clipped cos^2(kz) estimate
    std::vector<double> envelope;
    std::size_t antinode_crossings = 0;
    std::size_t node_crossings = 0;
    std::size_t core_node_crossings = 0;  // node crossings inside the core window
    std::vector<std::string> warnings;
};

namespace detail {

inline AxialReconstruction reconstruct_axial(const SignalTrace& averaged, const EnvelopeFit& fit, const CavityParams& cav,
                                             const ReconstructionOptions& opt) {
    AxialReconstruction rec;
    std::vector<double> raw;
    for (std::size_t i = 0; i < averaged.size(); ++i) {
        const double t = averaged.time(i);
        const double g = fit.envelope(t, cav.waist);
        if (g > opt.region_threshold) {
            rec.t.push_back(t);
            rec.envelope.push_back(g);
            raw.push_back(averaged.samples[i] / g);
        }
    }
    if (raw.size() < 8) throw InsufficientDataError("too few samples above the envelope threshold");

    double scale = 0.0;
    double floor = INFINITY;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (rec.envelope[i] > opt.core_threshold) {
            scale = std::max(scale, raw[i]);
            floor = std::min(floor, raw[i]);
        }
    }
    if (!(scale > 0.0)) scale = *std::max_element(raw.begin(), raw.end());
    if (!(scale > 0.0)) throw NormalizationError("averaged signal vanishes inside the envelope");
    if (!opt.stretch_contrast || !(floor < scale)) floor = 0.0;
    std::size_t outside = 0;
    for (double& v : raw) {
        v = (v - floor) / (scale - floor);
        if (v < -opt.mismatch_margin || v > 1.0 + opt.mismatch_margin) ++outside;
    }
    if (static_cast<double>(outside) > opt.mismatch_fraction * static_cast<double>(raw.size())) {
        rec.warnings.push_back("model mismatch: " + std::to_string(outside) + " of " + std::to_string(raw.size()) +
                               " samples outside [-0.05, 1.05] before clipping");
    }

    const auto smoothed = detail::smooth5(raw);
    rec.r.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) rec.r[i] = std::clamp(raw[i], 0.0, 1.0);

    std::vector<Extremum> events;
    for (const auto& e : detail::zigzag_extrema(smoothed, opt.branch_swing)) {
        if (e.kind == ExtremumKind::maximum || smoothed[e.index] < opt.node_level) events.push_back(e);
    }

    const double k = cav.wave_number();
    rec.z.resize(raw.size());
    long m = 0;
    int sign = 1;
    std::size_t next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        while (next < events.size() && events[next].index < i) {
            if (events[next].kind == ExtremumKind::maximum) {
                ++rec.antinode_crossings;
            } else {
                m += sign;
                ++rec.node_crossings;
                if (rec.envelope[events[next].index] > opt.core_threshold) ++rec.core_node_crossings;
            }
            sign = -sign;
            ++next;
        }
        const double theta = static_cast<double>(m) * constants::pi + sign * std::acos(std::sqrt(rec.r[i]));
        rec.z[i] = theta / k;
    }
    return rec;
}

}  // namespace detail

/**
 * r = averaged / envelope, scaled so its maximum in the core window is 1, then
 * kz = m pi + s arccos(sqrt(r)). Branch tracking walks the alternating extrema of
 * the smoothed r: every maximum is an antinode crossing (s flips), a minimum
 * below `node_level` is a node crossing (m += s, then s flips), and any other
 * minimum is a turning point inside one well. When the core window shows node
 * crossings, its minimum is also mapped to 0, undoing the contrast the rotation
 * average takes from the lattice modulation.
 */
[[nodiscard]] inline AxialReconstruction reconstruct_axial_trajectory(const SignalTrace& averaged,
                                                                      const EnvelopeFit& fit,
                                                                      const CavityParams& cav,
                                                                      const ReconstructionOptions& opt = {}) {
    averaged.validate();
    cav.validate();
    if (opt.stretch_contrast) {
        auto plain = opt;
        plain.stretch_contrast = false;
        auto rec = reconstruct_axial_trajectory(averaged, fit, cav, plain);
        if (rec.core_node_crossings == 0) return rec;
        return detail::reconstruct_axial(averaged, fit, cav, opt);
    }
    return detail::reconstruct_axial(averaged, fit, cav, opt);
}

// --- rotation rate ----------------------------------------------------------

struct RotationRateSeries {
    std::vector<double> t;     // s, midpoints between adjacent maxima
    std::vector<double> rate;  // Hz
};

/**
 * Adjacent scattering maxima are half a rotation apart. Maxima are local maxima of
 * the max-normalised trace whose topographic prominence reaches `min_prominence`,
 * refined to sub-sample times by a parabola through the three top samples.
 */
[[nodiscard]] inline RotationRateSeries instantaneous_rotation_rate(const SignalTrace& trace,
                                                                    double min_prominence = 0.05) {
    trace.validate();
    const double peak = trace.max();
    if (!(peak > 0.0)) throw InsufficientDataError("trace has no positive samples");
    std::vector<double> x(trace.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = trace.samples[i] / peak;

    std::vector<double> times;
    const std::size_t n = x.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(x[i] > x[i - 1] && x[i] >= x[i + 1])) continue;
        double left_min = x[i];
        std::size_t j = i;
        while (j > 0 && x[j - 1] <= x[i]) left_min = std::min(left_min, x[--j]);
        double right_min = x[i];
        j = i;
        // plateaus to the right belong to this peak; a strictly higher sample ends the search
        while (j + 1 < n && x[j + 1] <= x[i]) right_min = std::min(right_min, x[++j]);
        const double prominence = x[i] - std::max(left_min, right_min);
        if (prominence < min_prominence) continue;
        const double delta = detail::parabolic_offset(x[i - 1], x[i], x[i + 1]);
        times.push_back(trace.time(i) + delta / trace.sample_rate);
    }
    if (times.size() < 3) {
        throw InsufficientDataError("found " + std::to_string(times.size()) + " maxima, need at least 3");
    }
    RotationRateSeries out;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double dt = times[i + 1] - times[i];
        if (!(dt > 0.0)) continue;
        out.t.push_back(0.5 * (times[i] + times[i + 1]));
        out.rate.push_back(1.0 / (2.0 * dt));
    }
    return out;
}

// --- kinematics ---------------------------------------------------------------

struct Estimate {
    double value = 0.0;
    double sigma = 0.0;
};

/// A quantity that may be absent; `reason` says why when it is.
struct OptionalEstimate {
    std::optional<Estimate> estimate;
    std::string reason;

    [[nodiscard]] bool has_value() const { return estimate.has_value(); }
    [[nodiscard]] double value() const { return estimate.value().value; }
    [[nodiscard]] double sigma() const { return estimate.value().sigma; }
};

struct KinematicsEstimate {
    OptionalEstimate v_x;    // m/s
    OptionalEstimate v_z;    // m/s
    OptionalEstimate f_rot;  // Hz
    std::optional<double> t_center;
    std::optional<double> nu_trans;  // Hz
    std::optional<double> nu_rot;    // Hz
    std::optional<EnvelopeFit> envelope;
    std::vector<std::string> warnings;
};

struct AnalysisOptions {
    Window window = Window::hann;
    std::size_t pad_factor = 4;
    PeakOptions peaks;
    double harmonic_tolerance = 0.01;  // relative, with a floor of two bins
    EnvelopeFitOptions envelope;
    ReconstructionOptions reconstruction;
    // a second pass cancels the first-order leak of the rotation modulation into the slope of cos^2(kz)
    std::size_t reconstruction_passes = 2;
    double min_prominence = 0.05;
};

struct ModulationPeaks {
    std::optional<SpectralPeak> translation;
    std::optional<SpectralPeak> rotation;
};

/**
 * Assigns the translational and rotational modulation peaks. The lowest prominent
 * peak is nu_trans; its harmonics (weaker than it) are discarded; the strongest remaining peak
 * (ties to the lower frequency) is nu_rot, replaced by a prominent subharmonic
 * nu_rot / j (j = 2..4) when one exists.
 */
[[nodiscard]] inline ModulationPeaks identify_modulation_peaks(const Spectrum& spectrum,
                                                               const AnalysisOptions& opt = {}) {
    ModulationPeaks out;
    const auto peaks = find_spectral_peaks(spectrum, opt.peaks);
    if (peaks.empty()) return out;
    out.translation = peaks.front();
    const double base = peaks.front().frequency;
    auto tolerance = [&](double f) { return std::max(2.0 * spectrum.bin_width, opt.harmonic_tolerance * f); };
    auto near = [&](double f, double target) { return std::abs(f - target) <= tolerance(target); };

    std::vector<SpectralPeak> rest;
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        const double ratio = peaks[i].frequency / base;
        const double m = std::round(ratio);
        if (m >= 1.0 && near(peaks[i].frequency, m * base) && peaks[i].power <= peaks.front().power) continue;
        rest.push_back(peaks[i]);
    }
    if (rest.empty()) return out;
    auto best = std::max_element(rest.begin(), rest.end(), [](const SpectralPeak& a, const SpectralPeak& b) {
        return a.power < b.power || (a.power == b.power && a.frequency > b.frequency);
    });
    SpectralPeak rot = *best;
    for (int j = 4; j >= 2; --j) {
        const double target = best->frequency / j;
        const auto sub = std::find_if(rest.begin(), rest.end(),
                                      [&](const SpectralPeak& p) { return near(p.frequency, target); });
        if (sub != rest.end()) {
            rot = *sub;
            break;
        }
    }
    out.rotation = rot;
    return out;
}

namespace detail {

inline double hwhm_to_sigma(double hwhm) { return hwhm / std::sqrt(2.0 * std::log(2.0)); }

inline SignalTrace rotation_averaged(const SignalTrace& trace, const OptionalEstimate& f_rot, std::size_t passes) {
    SignalTrace out = trace;
    if (f_rot.has_value()) {
        for (std::size_t p = 0; p < passes; ++p) out = rotation_average(out, f_rot.value());
    }
    return out;
}

}  // namespace detail

/**
 * v_z = nu_trans lambda / 2, f_rot = nu_rot / 2, v_x from the envelope fit. The
 * envelope fit gates the estimate: if it fails every field is reported absent.
 */
[[nodiscard]] inline KinematicsEstimate extract_kinematics(const SignalTrace& trace, const CavityParams& cav,
                                                           const AnalysisOptions& opt = {}) {
    trace.validate();
    cav.validate();
    KinematicsEstimate est;
    const auto spectrum = power_spectrum(trace, opt.window, opt.pad_factor);
    const auto mod = identify_modulation_peaks(spectrum, opt);

    if (mod.translation) {
        est.nu_trans = mod.translation->frequency;
        est.v_z.estimate = Estimate{mod.translation->frequency * cav.wavelength / 2.0,
                                    detail::hwhm_to_sigma(mod.translation->half_width) * cav.wavelength / 2.0};
    } else {
        est.v_z.reason = "no prominent spectral peak";
    }
    if (mod.rotation) {
        est.nu_rot = mod.rotation->frequency;
        est.f_rot.estimate =
            Estimate{mod.rotation->frequency / 2.0, detail::hwhm_to_sigma(mod.rotation->half_width) / 2.0};
    } else {
        est.f_rot.reason = mod.translation ? "no prominent peak beyond the translational harmonics"
                                           : "no prominent spectral peak";
    }

    // The plain fit is kept for channelled traces, whose slow spectral line is the
    // in-well oscillation rather than a steady lattice crossing; otherwise the
    // modulated model at nu_trans removes the bias of the sparse maxima.
    auto env_opt = opt.envelope;
    if (est.f_rot.has_value()) env_opt.f_rot_hint = est.f_rot.value();
    env_opt.nu_trans_hint.reset();
    std::string why;
    try {
        est.envelope = fit_envelope(trace, cav, env_opt);
    } catch (const Error& e) {
        why = e.what();
    }
    bool channelled = false;
    if (est.envelope) {
        try {
            const auto averaged = detail::rotation_averaged(trace, est.f_rot, opt.reconstruction_passes);
            channelled =
                reconstruct_axial_trajectory(averaged, *est.envelope, cav, opt.reconstruction).core_node_crossings == 0;
        } catch (const Error&) {
            channelled = false;
        }
    }
    if (est.nu_trans && !channelled) {
        env_opt.nu_trans_hint = est.nu_trans;
        try {
            est.envelope = fit_envelope(trace, cav, env_opt);
        } catch (const Error& e) {
            if (!est.envelope) why = e.what();
        }
    }

    if (est.envelope) {
        est.v_x.estimate = Estimate{est.envelope->v_x, est.envelope->v_x_sigma};
        est.t_center = est.envelope->t_center;
    } else {
        why = "envelope fit failed: " + why;
        est.warnings.push_back(why);
        est.v_x = {std::nullopt, why};
        est.v_z = {std::nullopt, why};
        est.f_rot = {std::nullopt, why};
        est.nu_trans.reset();
        est.nu_rot.reset();
    }
    return est;
}

/// Everything recoverable from one trace.
struct TraceAnalysis {
    KinematicsEstimate kinematics;
    std::optional<EnvelopeFit> envelope;
    std::optional<AxialReconstruction> reconstruction;
    std::optional<bool> channelled;  // no node crossing inside the core window
    OptionalEstimate trap_frequency;  // Hz
    std::optional<RotationRateSeries> rotation_rate;
    std::vector<std::string> warnings;
};

[[nodiscard]] inline TraceAnalysis analyze_trace(const SignalTrace& trace, const CavityParams& cav,
                                                 const AnalysisOptions& opt = {}) {
    TraceAnalysis out;
    out.kinematics = extract_kinematics(trace, cav, opt);
    out.warnings = out.kinematics.warnings;
    const auto& kin = out.kinematics;
    if (!kin.v_x.has_value()) {
        out.trap_frequency.reason = "no envelope fit";
        return out;
    }

    out.envelope = kin.envelope;
    const auto averaged = detail::rotation_averaged(trace, kin.f_rot, opt.reconstruction_passes);
    try {
        out.reconstruction = reconstruct_axial_trajectory(averaged, *out.envelope, cav, opt.reconstruction);
        for (const auto& w : out.reconstruction->warnings) out.warnings.push_back(w);
    } catch (const Error& e) {
        out.warnings.push_back(std::string("reconstruction failed: ") + e.what());
    }

    if (out.reconstruction) {
        const auto& rec = *out.reconstruction;
        out.channelled = rec.core_node_crossings == 0;
        if (!*out.channelled) {
            out.trap_frequency.reason = "not channelled";
        } else {
            SignalTrace core;
            core.sample_rate = trace.sample_rate;
            for (std::size_t i = 0; i < rec.t.size(); ++i) {
                if (rec.envelope[i] > opt.reconstruction.core_threshold) {
                    if (core.samples.empty()) core.t0 = rec.t[i];
                    core.samples.push_back(rec.z[i]);
                }
            }
            if (core.size() < min_spectrum_samples) {
                out.trap_frequency.reason = "channelled window too short";
            } else {
                const double mean =
                    std::accumulate(core.samples.begin(), core.samples.end(), 0.0) / static_cast<double>(core.size());
                for (double& v : core.samples) v -= mean;
                const auto spec = power_spectrum(core, Window::hann, 16);
                const auto peak = dominant_peak(spec);
                if (!peak || peak->frequency * core.duration() < 2.0) {
                    out.trap_frequency.reason = "channelled window shorter than two oscillation periods";
                } else {
                    out.trap_frequency.estimate = Estimate{peak->frequency, detail::hwhm_to_sigma(peak->half_width)};
                }
            }
        }
    } else {
        out.trap_frequency.reason = "no reconstruction";
    }

    if (kin.f_rot.has_value()) {
        try {
            out.rotation_rate = instantaneous_rotation_rate(trace, opt.min_prominence);
        } catch (const Error& e) {
            out.warnings.push_back(std::string("rotation-rate tracking failed: ") + e.what());
        }
    }
    return out;
}

}  // namespace nanorotor
