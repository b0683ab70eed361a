#pragma once

#include <numbers>

namespace nanorotor::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double speed_of_light = 299792458.0;            // m/s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg
inline constexpr double cubic_angstrom = 1e-30;                  // m^3

}  // namespace nanorotor::constants

namespace nanorotor {

/// Polarizability volume alpha / (4 pi eps0) in cubic angstroms. Reporting only.
[[nodiscard]] inline double to_cubic_angstrom(double alpha) {
    return alpha / (4.0 * constants::pi * constants::vacuum_permittivity) / constants::cubic_angstrom;
}

}  // namespace nanorotor
