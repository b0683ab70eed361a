/**
 * @file field_optics.hpp
 * @brief Static physics of a dielectric nanorod in a standing-wave cavity field.
 *
 * Particle description (geometry, material, derived mass and moment of inertia),
 * needle-limit and Clausius-Mossotti polarizabilities, the cavity field, and the
 * instantaneous optical force, torque and potential for planar rotation.
 *
 * Coordinates: cavity axis e_z, field polarisation e_x. The rod axis is
 * n = (cos phi, sin phi, 0). The standing wave has antinodes at z = m pi / k.
 * All quantities are SI.
 */

#pragma once

#include <cmath>
#include <string>

#include "nanorotor/constants.hpp"
#include "nanorotor/errors.hpp"

namespace nanorotor {

/// Cylinder of length L and diameter D. The etched conical tip is ignored.
struct RodGeometry {
    double length = 800e-9;    // m
    double diameter = 100e-9;  // m

    [[nodiscard]] double aspect_ratio() const { return length / diameter; }
    [[nodiscard]] double volume() const {
        return constants::pi * 0.25 * diameter * diameter * length;
    }

    void validate() const {
        if (!(length > 0.0) || !(diameter > 0.0) || !std::isfinite(length) || !std::isfinite(diameter)) {
            throw ValidityError("rod length and diameter must be positive and finite");
        }
    }
};

/// Bulk dielectric. Defaults are crystalline silicon at 1560 nm.
struct Material {
    double epsilon_r = 12.1;
    double density = 2329.0;  // kg/m^3

    // epsilon_r == 1 is accepted as the degenerate "no contrast" case.
    void validate() const {
        if (!(epsilon_r >= 1.0) || !std::isfinite(epsilon_r)) {
            throw ValidityError("relative permittivity must be >= 1");
        }
        if (!(density > 0.0) || !std::isfinite(density)) {
            throw ValidityError("density must be positive");
        }
    }
};

inline constexpr Material silicon{};

/// Mass and transverse moment of inertia, always derived from geometry and material.
class BodyProperties {
public:
    [[nodiscard]] static BodyProperties of(const RodGeometry& geom, const Material& mat) {
        geom.validate();
        mat.validate();
        const double mass = mat.density * geom.volume();
        return BodyProperties(mass, mass * geom.length * geom.length / 12.0);
    }

    [[nodiscard]] double mass() const { return mass_; }
    [[nodiscard]] double inertia() const { return inertia_; }

private:
    BodyProperties(double mass, double inertia) : mass_(mass), inertia_(inertia) {}

    double mass_;
    double inertia_;
};

/// Principal polarizabilities along and across the rod axis, in C m^2 / V.
struct Polarizability {
    double alpha_par = 0.0;
    double alpha_perp = 0.0;

    [[nodiscard]] double anisotropy() const { return alpha_par - alpha_perp; }

    /// Effective polarizability for a field along e_x when the axis makes angle phi with it.
    [[nodiscard]] double along_field(double phi) const {
        const double c = std::cos(phi);
        return alpha_perp + anisotropy() * c * c;
    }
};

/// Isotropic tensor; a sphere is modelled as a rod with no anisotropy.
[[nodiscard]] inline Polarizability isotropic(double alpha) { return {alpha, alpha}; }

struct CavityParams {
    double wavelength = 1560e-9;   // m
    double waist = 65e-6;          // m, 1/e^2 intensity radius
    double field_amplitude = 0.0;  // V/m, E0

    [[nodiscard]] double wave_number() const { return 2.0 * constants::pi / wavelength; }

    void validate() const {
        if (!(wavelength > 0.0) || !(waist > 0.0) || !std::isfinite(wavelength) || !std::isfinite(waist)) {
            throw ValidityError("cavity wavelength and waist must be positive");
        }
        if (!(field_amplitude >= 0.0) || !std::isfinite(field_amplitude)) {
            throw ValidityError("cavity field amplitude must be non-negative");
        }
    }
};

/// Needle-limit aspect ratio below which the closed forms are rejected.
inline constexpr double min_needle_aspect_ratio = 4.0;

/**
 * Needle limit of the ellipsoid polarizability (depolarization factors 0 and 1/2):
 *   alpha_par  = eps0 V (eps_r - 1)
 *   alpha_perp = eps0 V 2 (eps_r - 1) / (eps_r + 1)
 */
[[nodiscard]] inline Polarizability needle_polarizability(const RodGeometry& geom, const Material& mat) {
    geom.validate();
    mat.validate();
    if (geom.aspect_ratio() < min_needle_aspect_ratio) {
        throw ValidityError("aspect ratio " + std::to_string(geom.aspect_ratio()) +
                            " is below the needle-limit minimum of 4");
    }
    const double scale = constants::vacuum_permittivity * geom.volume() * (mat.epsilon_r - 1.0);
    return {scale, scale * 2.0 / (mat.epsilon_r + 1.0)};
}

/// Clausius-Mossotti polarizability of a sub-wavelength sphere of the given volume.
[[nodiscard]] inline double sphere_polarizability(double volume, const Material& mat) {
    mat.validate();
    if (!(volume > 0.0)) throw ValidityError("sphere volume must be positive");
    return 3.0 * constants::vacuum_permittivity * volume * (mat.epsilon_r - 1.0) / (mat.epsilon_r + 2.0);
}

enum class AveragingMode {
    isotropic3d,  // uniform over all rotation axes: alpha_par/3 + 2 alpha_perp/3
    planar,       // rotation in the plane containing the polarisation: (alpha_par + alpha_perp)/2
};

[[nodiscard]] inline double orientation_averaged_polarizability(const Polarizability& pol, AveragingMode mode) {
    switch (mode) {
        case AveragingMode::isotropic3d:
            return pol.alpha_par / 3.0 + 2.0 * pol.alpha_perp / 3.0;
        case AveragingMode::planar:
            return 0.5 * (pol.alpha_par + pol.alpha_perp);
    }
    return 0.0;
}

/// Peak intensity 2P / (pi w0^2) of a Gaussian mode carrying power P.
[[nodiscard]] inline double peak_intensity(double power, double waist) {
    return 2.0 * power / (constants::pi * waist * waist);
}

/// Standing-wave amplitude E0 = sqrt(4 I_C / (c eps0)) for peak intra-cavity intensity I_C.
[[nodiscard]] inline double cavity_field_amplitude(double intensity) {
    if (!(intensity >= 0.0)) throw ValidityError("intensity must be non-negative");
    return std::sqrt(4.0 * intensity / (constants::speed_of_light * constants::vacuum_permittivity));
}

namespace detail {
inline void check_envelope(double envelope) {
    if (!(envelope >= 0.0 && envelope <= 1.0)) throw ValidityError("envelope must lie in [0, 1]");
}
}  // namespace detail

/**
 * Axial acceleration
 *   z'' = -(E0^2 k / 4M) [alpha_perp + (alpha_par - alpha_perp) cos^2 phi] sin(2kz) * envelope.
 * Points toward the nearest antinode for eps_r > 1.
 */
[[nodiscard]] inline double axial_acceleration(double z, double phi, double envelope, const CavityParams& cav,
                                               const Polarizability& pol, const BodyProperties& body) {
    detail::check_envelope(envelope);
    const double k = cav.wave_number();
    const double e2 = cav.field_amplitude * cav.field_amplitude;
    return -(e2 * k / (4.0 * body.mass())) * pol.along_field(phi) * std::sin(2.0 * k * z) * envelope;
}

/**
 * Angular acceleration
 *   phi'' = -(E0^2 / 4 Theta) (alpha_par - alpha_perp) sin(2 phi) cos^2(kz) * envelope.
 * Restores the axis toward the polarisation (phi = 0 mod pi).
 */
[[nodiscard]] inline double angular_acceleration(double z, double phi, double envelope, const CavityParams& cav,
                                                 const Polarizability& pol, const BodyProperties& body) {
    detail::check_envelope(envelope);
    const double ckz = std::cos(cav.wave_number() * z);
    const double e2 = cav.field_amplitude * cav.field_amplitude;
    return -(e2 / (4.0 * body.inertia())) * pol.anisotropy() * std::sin(2.0 * phi) * ckz * ckz * envelope;
}

/// U = -(E0^2/4) [alpha_perp + (alpha_par - alpha_perp) cos^2 phi] cos^2(kz) * envelope.
[[nodiscard]] inline double optical_potential(double z, double phi, double envelope, const CavityParams& cav,
                                              const Polarizability& pol) {
    detail::check_envelope(envelope);
    const double ckz = std::cos(cav.wave_number() * z);
    const double e2 = cav.field_amplitude * cav.field_amplitude;
    return -0.25 * e2 * pol.along_field(phi) * ckz * ckz * envelope;
}

/// Small-amplitude axial oscillation frequency [Hz] at an antinode for effective polarizability alpha.
[[nodiscard]] inline double trap_frequency(const CavityParams& cav, double alpha, const BodyProperties& body) {
    const double k = cav.wave_number();
    return k * cav.field_amplitude * std::sqrt(alpha / (2.0 * body.mass())) / (2.0 * constants::pi);
}

/// Small-angle libration frequency [Hz] about the polarisation axis at an antinode.
[[nodiscard]] inline double libration_frequency(const CavityParams& cav, const Polarizability& pol,
                                                const BodyProperties& body) {
    return cav.field_amplitude * std::sqrt(pol.anisotropy() / (2.0 * body.inertia())) / (2.0 * constants::pi);
}

}  // namespace nanorotor
