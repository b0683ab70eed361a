/**
 * @file rotor_dynamics.hpp
 * @brief Planar centre-of-mass and rotational dynamics of a rod transiting the cavity mode.
 *
 * The rod falls through the Gaussian mode with constant vertical velocity v_x and
 * crosses the beam centre at t = 0, so the field envelope seen by the rod is
 * exp(-2 (v_x t)^2 / w0^2). Off-axis transits are modelled by lowering E0.
 * Integration is fixed-step classical RK4 so that replays are bit-reproducible.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "nanorotor/constants.hpp"
#include "nanorotor/errors.hpp"
#include "nanorotor/field_optics.hpp"
#include "nanorotor/signal_trace.hpp"
#include "nanorotor/spectrum.hpp"

namespace nanorotor {

/// Planar rod state. phi is not wrapped, so its winding carries the rotation count.
struct RodState {
    double t = 0.0;        // s
    double z = 0.0;        // m, along the cavity axis
    double z_dot = 0.0;    // m/s
    double phi = 0.0;      // rad, from the polarisation axis
    double phi_dot = 0.0;  // rad/s

    [[nodiscard]] bool finite() const {
        return std::isfinite(t) && std::isfinite(z) && std::isfinite(z_dot) && std::isfinite(phi) &&
               std::isfinite(phi_dot);
    }

    friend bool operator==(const RodState&, const RodState&) = default;
};

enum class ParticleKind { rod, sphere };

struct SimulationConfig {
    CavityParams cavity;
    RodGeometry geometry;
    Material material;
    double v_x = 0.0;  // m/s, vertical transit velocity
    RodState initial;  // state at t_start
    double dt = 0.0;   // s
    double t_start = 0.0;
    double t_end = 0.0;
    ParticleKind particle_kind = ParticleKind::rod;

    [[nodiscard]] double envelope(double t) const {
        const double x = v_x * t;
        return std::exp(-2.0 * x * x / (cavity.waist * cavity.waist));
    }

    void validate() const {
        cavity.validate();
        geometry.validate();
        material.validate();
        if (!(v_x > 0.0) || !std::isfinite(v_x)) throw ValidityError("v_x must be positive");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidityError("dt must be positive");
        if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
            throw ValidityError("t_end must exceed t_start");
        }
        if (!initial.finite()) throw ValidityError("initial state must be finite");
        if (initial.t != t_start) throw ValidityError("initial state must be given at t_start");
        if (!(geometry.diameter < 0.5 * cavity.wavelength)) {
            throw ValidityError("rod diameter must be below half a wavelength");
        }
    }
};

/// Polarizability driving the dynamics: needle limit for rods, Clausius-Mossotti for spheres.
[[nodiscard]] inline Polarizability particle_polarizability(const SimulationConfig& cfg) {
    if (cfg.particle_kind == ParticleKind::sphere) {
        return isotropic(sphere_polarizability(cfg.geometry.volume(), cfg.material));
    }
    return needle_polarizability(cfg.geometry, cfg.material);
}

[[nodiscard]] inline double default_half_span(double waist, double v_x) { return 10.0 * waist / v_x; }

/**
 * 1 / (200 f_max), where f_max is the largest of the initial rotation rate, the
 * initial lattice-crossing rate 2|z_dot|/lambda, and the analytic trap and
 * libration frequencies at full field.
 */
[[nodiscard]] inline double default_time_step(const SimulationConfig& cfg) {
    const auto pol = particle_polarizability(cfg);
    const auto body = BodyProperties::of(cfg.geometry, cfg.material);
    double f_max = std::abs(cfg.initial.phi_dot) / (2.0 * constants::pi);
    f_max = std::max(f_max, 2.0 * std::abs(cfg.initial.z_dot) / cfg.cavity.wavelength);
    f_max = std::max(f_max, trap_frequency(cfg.cavity, pol.alpha_par, body));
    if (pol.anisotropy() > 0.0) f_max = std::max(f_max, libration_frequency(cfg.cavity, pol, body));
    if (!(f_max > 0.0)) return (cfg.t_end - cfg.t_start) / 1000.0;
    return 1.0 / (200.0 * f_max);
}

/// Config spanning +-10 w0 / v_x with the default step; `initial.t` is replaced by t_start.
[[nodiscard]] inline SimulationConfig make_config(const CavityParams& cavity, const RodGeometry& geometry,
                                                  const Material& material, double v_x, RodState initial,
                                                  ParticleKind kind = ParticleKind::rod) {
    SimulationConfig cfg;
    cfg.cavity = cavity;
    cfg.geometry = geometry;
    cfg.material = material;
    cfg.v_x = v_x;
    cfg.particle_kind = kind;
    const double half = default_half_span(cavity.waist, v_x);
    cfg.t_start = -half;
    cfg.t_end = half;
    initial.t = cfg.t_start;
    cfg.initial = initial;
    cfg.dt = default_time_step(cfg);
    return cfg;
}

/// Right-hand side of the equations of motion with precomputed particle properties.
class TransitModel {
public:
    explicit TransitModel(const SimulationConfig& cfg, std::optional<double> frozen_envelope = std::nullopt)
        : cfg_(cfg),
          pol_(particle_polarizability(cfg)),
          body_(BodyProperties::of(cfg.geometry, cfg.material)),
          frozen_(frozen_envelope) {
        if (frozen_ && !(*frozen_ >= 0.0 && *frozen_ <= 1.0)) {
            throw ValidityError("frozen envelope must lie in [0, 1]");
        }
    }

    [[nodiscard]] double envelope(double t) const { return frozen_ ? *frozen_ : cfg_.envelope(t); }
    [[nodiscard]] const Polarizability& polarizability() const { return pol_; }
    [[nodiscard]] const BodyProperties& body() const { return body_; }
    [[nodiscard]] const SimulationConfig& config() const { return cfg_; }

    struct Rates {
        double z_dot, z_ddot, phi_dot, phi_ddot;
    };

    [[nodiscard]] Rates rates(double t, double z, double z_dot, double phi, double phi_dot) const {
        const double env = envelope(t);
        return {z_dot, axial_acceleration(z, phi, env, cfg_.cavity, pol_, body_), phi_dot,
                angular_acceleration(z, phi, env, cfg_.cavity, pol_, body_)};
    }

    /// One classical RK4 step of size h; the envelope is evaluated at each stage time.
    [[nodiscard]] RodState rk4_step(const RodState& s, double h) const {
        const auto k1 = rates(s.t, s.z, s.z_dot, s.phi, s.phi_dot);
        const double th = s.t + 0.5 * h;
        const auto k2 = rates(th, s.z + 0.5 * h * k1.z_dot, s.z_dot + 0.5 * h * k1.z_ddot,
                              s.phi + 0.5 * h * k1.phi_dot, s.phi_dot + 0.5 * h * k1.phi_ddot);
        const auto k3 = rates(th, s.z + 0.5 * h * k2.z_dot, s.z_dot + 0.5 * h * k2.z_ddot,
                              s.phi + 0.5 * h * k2.phi_dot, s.phi_dot + 0.5 * h * k2.phi_ddot);
        const auto k4 = rates(s.t + h, s.z + h * k3.z_dot, s.z_dot + h * k3.z_ddot, s.phi + h * k3.phi_dot,
                              s.phi_dot + h * k3.phi_ddot);
        RodState out;
        out.t = s.t + h;
        out.z = s.z + h / 6.0 * (k1.z_dot + 2.0 * k2.z_dot + 2.0 * k3.z_dot + k4.z_dot);
        out.z_dot = s.z_dot + h / 6.0 * (k1.z_ddot + 2.0 * k2.z_ddot + 2.0 * k3.z_ddot + k4.z_ddot);
        out.phi = s.phi + h / 6.0 * (k1.phi_dot + 2.0 * k2.phi_dot + 2.0 * k3.phi_dot + k4.phi_dot);
        out.phi_dot = s.phi_dot + h / 6.0 * (k1.phi_ddot + 2.0 * k2.phi_ddot + 2.0 * k3.phi_ddot + k4.phi_ddot);
        if (!out.finite()) throw IntegrationBlowup(out.t);
        return out;
    }

    /// M z_dot^2 / 2 + Theta phi_dot^2 / 2 + U at the given envelope value.
    [[nodiscard]] double energy(const RodState& s, double env) const {
        return 0.5 * body_.mass() * s.z_dot * s.z_dot + 0.5 * body_.inertia() * s.phi_dot * s.phi_dot +
               optical_potential(s.z, s.phi, env, cfg_.cavity, pol_);
    }

private:
    SimulationConfig cfg_;
    Polarizability pol_;
    BodyProperties body_;
    std::optional<double> frozen_;
};

/// Advances `state` by config.dt.
[[nodiscard]] inline RodState step(const RodState& state, const SimulationConfig& config) {
    return TransitModel(config).rk4_step(state, config.dt);
}

[[nodiscard]] inline double total_energy(const RodState& state, const SimulationConfig& config,
                                         double frozen_envelope) {
    return TransitModel(config, frozen_envelope).energy(state, frozen_envelope);
}

struct Trajectory {
    SimulationConfig config;  // dt is the effective, span-dividing step
    std::vector<RodState> samples;
    std::optional<double> frozen_envelope;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] const RodState& front() const { return samples.front(); }
    [[nodiscard]] const RodState& back() const { return samples.back(); }

    [[nodiscard]] double envelope(std::size_t i) const {
        return frozen_envelope ? *frozen_envelope : config.envelope(samples[i].t);
    }

    /// Cubic Hermite interpolation of (z, phi) using the stored velocities.
    [[nodiscard]] RodState interpolate(double t) const {
        if (samples.size() < 2) throw InsufficientDataError("trajectory has fewer than two samples");
        const double h = config.dt;
        double pos = (t - samples.front().t) / h;
        const auto last = static_cast<double>(samples.size() - 2);
        std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, last));
        const RodState& a = samples[i];
        const RodState& b = samples[i + 1];
        const double hi = b.t - a.t;
        const double s = (t - a.t) / hi;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        const double d00 = (6.0 * s2 - 6.0 * s) / hi;
        const double d10 = 3.0 * s2 - 4.0 * s + 1.0;
        const double d01 = (-6.0 * s2 + 6.0 * s) / hi;
        const double d11 = 3.0 * s2 - 2.0 * s;
        RodState out;
        out.t = t;
        out.z = h00 * a.z + h10 * hi * a.z_dot + h01 * b.z + h11 * hi * b.z_dot;
        out.z_dot = d00 * a.z + d10 * a.z_dot + d01 * b.z + d11 * b.z_dot;
        out.phi = h00 * a.phi + h10 * hi * a.phi_dot + h01 * b.phi + h11 * hi * b.phi_dot;
        out.phi_dot = d00 * a.phi + d10 * a.phi_dot + d01 * b.phi + d11 * b.phi_dot;
        return out;
    }
};

struct SimulationOptions {
    std::optional<double> frozen_envelope;  // hold the envelope fixed (energy diagnostics)
};

/**
 * Integrates from t_start to t_end. The configured dt is shrunk so that an
 * integer number of steps spans the interval exactly; the trajectory's config
 * snapshot records the step actually used.
 */
[[nodiscard]] inline Trajectory simulate(const SimulationConfig& config, const SimulationOptions& options = {}) {
    config.validate();
    const double span = config.t_end - config.t_start;
    const auto n_steps = static_cast<std::size_t>(std::ceil(span / config.dt * (1.0 - 1e-12)));

    Trajectory traj;
    traj.config = config;
    traj.config.dt = span / static_cast<double>(n_steps);
    traj.frozen_envelope = options.frozen_envelope;
    const TransitModel model(traj.config, options.frozen_envelope);

    traj.samples.reserve(n_steps + 1);
    RodState s = config.initial;
    traj.samples.push_back(s);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        s = model.rk4_step(s, traj.config.dt);
        s.t = (i == n_steps) ? config.t_end : config.t_start + static_cast<double>(i) * traj.config.dt;
        traj.samples.push_back(s);
    }
    return traj;
}

struct ChannellingOptions {
    double envelope_threshold = 0.5;
    double half_width = 0.25;  // wavelengths; 1/4 is the node-to-antinode distance
};

struct ChannellingResult {
    bool channelled = false;
    int n_antinode_hops = 0;
    long antinode_index = 0;     // m of the antinode z = m pi / k occupied at window start
    double max_excursion = 0.0;  // m, max |z - z_antinode| inside the window
    double window_start = 0.0;
    double window_end = 0.0;
    std::optional<double> trap_frequency;  // Hz
    std::string note;                      // why trap_frequency is absent
};

/**
 * Channelling inside the window where the envelope exceeds the threshold: the rod
 * must stay within `half_width` of the antinode it occupies at window start.
 * The trap frequency is the dominant spectral peak of z - z_antinode in that window.
 */
[[nodiscard]] inline ChannellingResult classify_channelling(const Trajectory& traj,
                                                            const ChannellingOptions& opt = {}) {
    ChannellingResult res;
    const double k = traj.config.cavity.wave_number();
    const double lambda = traj.config.cavity.wavelength;

    std::size_t first = traj.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.envelope(i) > opt.envelope_threshold) {
            first = std::min(first, i);
            last = i;
        }
    }
    if (first >= traj.size()) {
        res.note = "envelope never exceeds the threshold";
        return res;
    }
    res.window_start = traj.samples[first].t;
    res.window_end = traj.samples[last].t;

    auto antinode_of = [&](double z) { return std::lround(k * z / constants::pi); };
    res.antinode_index = antinode_of(traj.samples[first].z);
    const double z_antinode = static_cast<double>(res.antinode_index) * constants::pi / k;
    long current = res.antinode_index;
    for (std::size_t i = first; i <= last; ++i) {
        const double z = traj.samples[i].z;
        const long m = antinode_of(z);
        if (m != current) {
            ++res.n_antinode_hops;
            current = m;
        }
        res.max_excursion = std::max(res.max_excursion, std::abs(z - z_antinode));
    }
    res.channelled = res.n_antinode_hops == 0 && res.max_excursion <= opt.half_width * lambda;
    if (!res.channelled) {
        res.note = "not channelled";
        return res;
    }

    SignalTrace offset;
    offset.sample_rate = 1.0 / traj.config.dt;
    offset.t0 = res.window_start;
    double mean = 0.0;
    for (std::size_t i = first; i <= last; ++i) mean += traj.samples[i].z - z_antinode;
    mean /= static_cast<double>(last - first + 1);
    for (std::size_t i = first; i <= last; ++i) offset.samples.push_back(traj.samples[i].z - z_antinode - mean);
    if (offset.size() < min_spectrum_samples) {
        res.note = "channelled window too short for a spectral estimate";
        return res;
    }
    const auto peak = dominant_peak(power_spectrum(offset, Window::hann, 16));
    if (!peak || peak->frequency * offset.duration() < 2.0) {
        res.note = "channelled window shorter than two oscillation periods";
        return res;
    }
    res.trap_frequency = peak->frequency;
    return res;
}

struct TransitSummary {
    double v_z_in = 0.0, v_z_out = 0.0;    // m/s
    double f_rot_in = 0.0, f_rot_out = 0.0;  // Hz, signed
    bool channelled = false;
    int n_antinode_hops = 0;
    std::optional<double> trap_frequency;  // Hz

    [[nodiscard]] double velocity_ratio() const { return v_z_out / v_z_in; }
    [[nodiscard]] double rotation_ratio() const { return f_rot_out / f_rot_in; }
};

/// Envelope value below which a trajectory end counts as outside the mode.
inline constexpr double negligible_envelope = 1e-3;

[[nodiscard]] inline TransitSummary transit_summary(const Trajectory& traj,
                                                    const ChannellingOptions& opt = {}) {
    if (traj.size() < 2) throw InsufficientDataError("trajectory has fewer than two samples");
    if (!(traj.envelope(0) < negligible_envelope) || !(traj.envelope(traj.size() - 1) < negligible_envelope)) {
        throw SpanError("field envelope is not negligible at the trajectory ends");
    }
    const auto channel = classify_channelling(traj, opt);
    TransitSummary s;
    s.v_z_in = traj.front().z_dot;
    s.v_z_out = traj.back().z_dot;
    s.f_rot_in = traj.front().phi_dot / (2.0 * constants::pi);
    s.f_rot_out = traj.back().phi_dot / (2.0 * constants::pi);
    s.channelled = channel.channelled;
    s.n_antinode_hops = channel.n_antinode_hops;
    s.trap_frequency = channel.trap_frequency;
    return s;
}

}  // namespace nanorotor
