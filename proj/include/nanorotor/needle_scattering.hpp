/**
 * @file needle_scattering.hpp
 * @brief Light scattered by a needle out of the cavity mode, and detector-signal synthesis.
 *
 * Detector along +e_y, polarisation along e_x, cavity axis e_z. The scattered
 * intensity relative to the intra-cavity intensity is
 *
 *   (kD)^4 (kL)^2 ((eps-1)/(eps+1))^2 |e_y x u|^2 [S+^2 + 2 cos(2kz) S+ S- + S-^2] exp(-2(x^2+y^2)/w0^2)
 *
 * with u = 2 e_x + (eps-1)(n.e_x) n and S+- = sinc(n.(e_z +- e_y) kL/2). The
 * absolute calibration is unknown, so the prefactor is kept dimensionless and
 * only normalised signals are meaningful downstream.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "nanorotor/constants.hpp"
#include "nanorotor/errors.hpp"
#include "nanorotor/field_optics.hpp"
#include "nanorotor/rotor_dynamics.hpp"
#include "nanorotor/signal_trace.hpp"

namespace nanorotor {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    [[nodiscard]] double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    [[nodiscard]] double norm2() const { return dot(*this); }
    [[nodiscard]] double norm() const { return std::sqrt(norm2()); }

    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
};

inline constexpr Vec3 e_x{1.0, 0.0, 0.0};
inline constexpr Vec3 e_y{0.0, 1.0, 0.0};
inline constexpr Vec3 e_z{0.0, 0.0, 1.0};

/// Rod axis direction; must be a unit vector to 1e-12.
class Orientation {
public:
    explicit Orientation(const Vec3& n) : n_(n) {
        if (!(std::abs(n.norm() - 1.0) <= 1e-12)) throw ValidityError("orientation must be a unit vector");
    }

    /// Axis in the polarisation plane at angle phi from e_x.
    [[nodiscard]] static Orientation planar(double phi) { return Orientation({std::cos(phi), std::sin(phi), 0.0}); }

    [[nodiscard]] const Vec3& n() const { return n_; }

private:
    Vec3 n_;
};

struct ScatterScene {
    Vec3 position;  // m, rod centre
    Orientation orientation = Orientation::planar(0.0);
    CavityParams cavity;
    RodGeometry geometry;
    Material material;

    void validate() const {
        cavity.validate();
        geometry.validate();
        material.validate();
    }
};

/// Unnormalised sinc, sin(u)/u.
[[nodiscard]] inline double sinc(double u) {
    if (std::abs(u) < 1e-4) return 1.0 - u * u / 6.0;
    return std::sin(u) / u;
}

[[nodiscard]] inline double scattering_intensity(const ScatterScene& scene) {
    scene.validate();
    const double k = scene.cavity.wave_number();
    const double eps = scene.material.epsilon_r;
    const double kd = k * scene.geometry.diameter;
    const double kl = k * scene.geometry.length;
    const Vec3& n = scene.orientation.n();
    const double contrast = (eps - 1.0) / (eps + 1.0);

    const Vec3 u = 2.0 * e_x + ((eps - 1.0) * n.dot(e_x)) * n;
    const double dipole = e_y.cross(u).norm2();
    const double s_plus = sinc(n.dot(e_z + e_y) * 0.5 * kl);
    const double s_minus = sinc(n.dot(e_z - e_y) * 0.5 * kl);
    const double interference =
        s_plus * s_plus + 2.0 * std::cos(2.0 * k * scene.position.z) * s_plus * s_minus + s_minus * s_minus;
    const double w0 = scene.cavity.waist;
    const double r2 = scene.position.x * scene.position.x + scene.position.y * scene.position.y;
    const double value = kd * kd * kd * kd * kl * kl * contrast * contrast * dipole * interference *
                         std::exp(-2.0 * r2 / (w0 * w0));
    // the bracket is a perfect square when S+ == S-; guard against -0 and rounding
    return std::max(value, 0.0);
}

/// Sampling must exceed this multiple of the highest expected modulation frequency.
inline constexpr double nyquist_guard_factor = 20.0;

/// Highest modulation frequency a trajectory can produce: max(2 |f_rot|, 2 |v_z| / lambda).
[[nodiscard]] inline double max_modulation_frequency(const Trajectory& traj) {
    double f = 0.0;
    for (const auto& s : traj.samples) {
        f = std::max(f, std::abs(s.phi_dot) / constants::pi);
        f = std::max(f, 2.0 * std::abs(s.z_dot) / traj.config.cavity.wavelength);
    }
    return f;
}

/// Constant or per-sample intra-cavity intensity used for normalisation.
using CavityIntensity = std::variant<double, std::vector<double>>;

/**
 * S_N = (I_S / I_C) / max(I_S / I_C). Negative raw values (additive noise) are
 * clamped to zero so the result lies in [0, 1] with max exactly 1.
 */
[[nodiscard]] inline SignalTrace normalize_signal(const std::vector<double>& raw, const CavityIntensity& cavity,
                                                  double sample_rate, double t0 = 0.0) {
    SignalTrace out;
    out.sample_rate = sample_rate;
    out.t0 = t0;
    out.validate();
    out.samples.resize(raw.size());
    if (const auto* series = std::get_if<std::vector<double>>(&cavity)) {
        if (series->size() != raw.size()) throw NormalizationError("cavity intensity length mismatch");
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (!((*series)[i] > 0.0)) throw NormalizationError("cavity intensity must be positive");
            out.samples[i] = std::max(raw[i], 0.0) / (*series)[i];
        }
    } else {
        const double ic = std::get<double>(cavity);
        if (!(ic > 0.0)) throw NormalizationError("cavity intensity must be positive");
        for (std::size_t i = 0; i < raw.size(); ++i) out.samples[i] = std::max(raw[i], 0.0) / ic;
    }
    const double peak = out.max();
    if (!(peak > 0.0) || !std::isfinite(peak)) throw NormalizationError("signal has no positive samples");
    for (double& v : out.samples) v /= peak;
    return out;
}

[[nodiscard]] inline SignalTrace normalize_signal(const SignalTrace& trace) {
    return normalize_signal(trace.samples, 1.0, trace.sample_rate, trace.t0);
}

/**
 * Evaluates the scattered intensity along a trajectory resampled at `sample_rate`
 * (cubic Hermite in z and phi), with x = v_x t and rod axis (cos phi, sin phi, 0).
 */
[[nodiscard]] inline SignalTrace synthesize_signal(const Trajectory& traj, double sample_rate, double y_offset = 0.0) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw ValidityError("sample rate must be positive");
    if (traj.size() < 2) throw InsufficientDataError("trajectory has fewer than two samples");
    const double f_mod = max_modulation_frequency(traj);
    if (sample_rate < nyquist_guard_factor * f_mod) {
        throw AliasingError("sample rate " + std::to_string(sample_rate) + " Hz is below 20x the modulation frequency " +
                            std::to_string(f_mod) + " Hz");
    }
    const double t0 = traj.front().t;
    const double span = traj.back().t - t0;
    const auto n = static_cast<std::size_t>(std::floor(span * sample_rate * (1.0 + 1e-12))) + 1;

    ScatterScene scene;
    scene.cavity = traj.config.cavity;
    scene.geometry = traj.config.geometry;
    scene.material = traj.config.material;
    std::vector<double> raw(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = t0 + static_cast<double>(j) / sample_rate;
        const RodState s = traj.interpolate(std::min(t, traj.back().t));
        scene.position = {traj.config.v_x * t, y_offset, s.z};
        scene.orientation = Orientation::planar(s.phi);
        raw[j] = scattering_intensity(scene);
    }
    return normalize_signal(raw, 1.0, sample_rate, t0);
}

/// Deterministic additive Gaussian noise for analysis tests; not a detector model.
[[nodiscard]] inline SignalTrace add_noise(SignalTrace trace, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for (double& v : trace.samples) v += dist(rng);
    return trace;
}

}  // namespace nanorotor
