#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nanorotor/field_optics.hpp"
#include "nanorotor/rotor_dynamics.hpp"

namespace fixtures {

using namespace nanorotor;

struct Transit {
    double field_amplitude;
    double v_x;
    double kz0;
    double z_dot0;
    double phi0;
    double f_rot0;
};

inline constexpr Transit s1{4.15e6, 11.5, -89.85, 0.74, 0.1, 2.14e6};
inline constexpr Transit s2{8.2e6, 11.3, -91.0, 0.28, -0.4, 1.685e6};
inline constexpr Transit s3{8.0e6, 7.94, -99.0, 0.28, -0.10098, 810e3};

inline CavityParams cavity(double field_amplitude) {
    CavityParams c;
    c.field_amplitude = field_amplitude;
    return c;
}

inline SimulationConfig config(const Transit& tr, ParticleKind kind = ParticleKind::rod) {
    const auto cav = cavity(tr.field_amplitude);
    RodState s;
    s.z = tr.kz0 / cav.wave_number();
    s.z_dot = tr.z_dot0;
    s.phi = tr.phi0;
    s.phi_dot = 2.0 * constants::pi * tr.f_rot0;
    return make_config(cav, RodGeometry{}, silicon, tr.v_x, s, kind);
}

/// Least-squares alignment over sign and offset; returns the rms residual.
inline double aligned_rms(const std::vector<double>& estimate, const std::vector<double>& truth) {
    double best = INFINITY;
    for (double sign : {1.0, -1.0}) {
        double offset = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) offset += truth[i] - sign * estimate[i];
        offset /= static_cast<double>(truth.size());
        double ss = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double d = truth[i] - sign * estimate[i] - offset;
            ss += d * d;
        }
        best = std::min(best, std::sqrt(ss / static_cast<double>(truth.size())));
    }
    return best;
}

}  // namespace fixtures
