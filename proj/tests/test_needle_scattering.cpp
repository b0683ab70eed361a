#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "nanorotor/needle_scattering.hpp"
#include "nanorotor/spectrum.hpp"

using namespace nanorotor;

namespace {

ScatterScene scene_at(double kz, const Orientation& n) {
    ScatterScene s;
    s.orientation = n;
    s.position = {0.0, 0.0, kz / s.cavity.wave_number()};
    return s;
}

Orientation random_orientation(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec3 v{g(rng), g(rng), g(rng)};
    const double n = v.norm();
    return Orientation(Vec3{v.x / n, v.y / n, v.z / n});
}

}  // namespace

TEST(Orientation, RequiresUnitVector) {
    EXPECT_THROW(Orientation(Vec3{1.0, 1e-5, 0.0}), ValidityError);
    EXPECT_NO_THROW(Orientation(Vec3{1.0 + 5e-13, 0.0, 0.0}));
    EXPECT_NO_THROW(Orientation(Vec3{0.0, 0.0, 1.0}));
    EXPECT_NEAR(Orientation::planar(0.7).n().norm(), 1.0, 1e-15);
}

TEST(Sinc, UnnormalisedWithUnitLimit) {
    EXPECT_EQ(sinc(0.0), 1.0);
    EXPECT_DOUBLE_EQ(sinc(1.3), std::sin(1.3) / 1.3);
    EXPECT_NEAR(sinc(1e-5), std::sin(1e-5) / 1e-5, 2e-16);
}

TEST(Scattering, PlanarRodAtNodeIsDark) {
    for (double phi : {0.0, 0.4, 1.5, 2.8}) {
        EXPECT_EQ(scattering_intensity(scene_at(constants::pi / 2.0, Orientation::planar(phi))), 0.0);
    }
}

TEST(Scattering, PlanarBracketIsFourSPlusSquaredCosSquared) {
    const auto probe = scene_at(0.0, Orientation::planar(0.6));
    const double at_antinode = scattering_intensity(probe);
    for (double kz : {0.2, 0.9, 2.0}) {
        const double c = std::cos(kz);
        EXPECT_NEAR(scattering_intensity(scene_at(kz, Orientation::planar(0.6))), at_antinode * c * c,
                    1e-12 * at_antinode);
    }
}

TEST(Scattering, RodAlongCavityAxisFactorByFactor) {
    const auto s = scene_at(0.0, Orientation(Vec3{0.0, 0.0, 1.0}));
    const double k = s.cavity.wave_number();
    const double kl = k * s.geometry.length;
    const double kd = k * s.geometry.diameter;
    const double half = 0.5 * kl;
    const double splus = std::sin(half) / half;
    EXPECT_NEAR(splus, 0.620200885753972, 1e-12);
    const double contrast = (12.1 - 1.0) / (12.1 + 1.0);
    // |e_y x 2e_x|^2 = 4, bracket = (S+ + S-)^2 = 4 S^2 at an antinode
    const double expected = std::pow(kd, 4) * kl * kl * contrast * contrast * 4.0 * 4.0 * splus * splus;
    EXPECT_NEAR(scattering_intensity(s), expected, 1e-12 * expected);
    EXPECT_NEAR(scattering_intensity(s) / (k * k), 7.44199145829060e-14, 1e-12 * 7.44199145829060e-14);
}

TEST(Scattering, TwoMaximaPerTurnAtPolarisationAlignment) {
    std::vector<double> v;
    const int n = 3600;
    for (int i = 0; i < n; ++i) {
        v.push_back(scattering_intensity(scene_at(0.0, Orientation::planar(2.0 * constants::pi * i / n))));
    }
    int maxima = 0;
    for (int i = 0; i < n; ++i) {
        const double prev = v[(i + n - 1) % n], next = v[(i + 1) % n];
        if (v[i] > prev && v[i] >= next) {
            ++maxima;
            const double phi = 2.0 * constants::pi * i / n;
            EXPECT_TRUE(std::abs(phi) < 1e-9 || std::abs(phi - constants::pi) < 1e-9) << phi;
        }
    }
    EXPECT_EQ(maxima, 2);
    const double quarter = v[n / 4];
    EXPECT_LT(quarter, 0.05 * v[0]);
}

TEST(ScatteringProperty, NonNegativeAndEvenInOrientation) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int i = 0; i < 500; ++i) {
        auto n = random_orientation(rng);
        ScatterScene s = scene_at(u(rng), n);
        s.position.x = u(rng) * 1e-5;
        s.position.y = u(rng) * 1e-5;
        const double a = scattering_intensity(s);
        EXPECT_GE(a, 0.0);
        s.orientation = Orientation(-n.n());
        EXPECT_NEAR(scattering_intensity(s), a, 1e-12 * a + 1e-300);
    }
}

TEST(ScatteringProperty, PlanarNodeNullAndPiPeriodicity) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> phi(-10.0, 10.0);
    std::uniform_int_distribution<int> m(-20, 20);
    for (int i = 0; i < 200; ++i) {
        const double p = phi(rng);
        const double node = constants::pi / 2.0 + m(rng) * constants::pi;
        EXPECT_LE(scattering_intensity(scene_at(node, Orientation::planar(p))),
                  1e-28 * scattering_intensity(scene_at(0.0, Orientation::planar(0.0))));
        const double a = scattering_intensity(scene_at(0.3, Orientation::planar(p)));
        EXPECT_NEAR(scattering_intensity(scene_at(0.3, Orientation::planar(p + constants::pi))), a, 1e-12 * a);
    }
}

TEST(Normalize, ConstantCavityIntensityRescalesByMax) {
    const std::vector<double> raw{1.0, 2.0, 4.0, 3.0};
    const auto t = normalize_signal(raw, 7.0, 1e6);
    EXPECT_EQ(t.samples, (std::vector<double>{0.25, 0.5, 1.0, 0.75}));
}

TEST(Normalize, DoublingCavityIntensityChangesNothing) {
    const std::vector<double> raw{0.3, 1.2, 0.9, 0.1};
    const std::vector<double> ic{1.0, 1.5, 0.8, 1.1};
    std::vector<double> ic2;
    for (double v : ic) ic2.push_back(2.0 * v);
    const auto a = normalize_signal(raw, ic, 1e6);
    const auto b = normalize_signal(raw, ic2, 1e6);
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_DOUBLE_EQ(a.samples[i], b.samples[i]);
}

TEST(Normalize, SingleSpike) {
    std::vector<double> raw(100, 1.0);
    raw[37] = 10.0;
    const auto t = normalize_signal(raw, 1.0, 1e6);
    EXPECT_EQ(t.samples[37], 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i != 37) {
            EXPECT_DOUBLE_EQ(t.samples[i], 0.1);
        }
    }
}

TEST(Normalize, Idempotent) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.1, 3.0);
    std::vector<double> raw(256);
    for (double& v : raw) v = u(rng);
    const auto once = normalize_signal(raw, 2.0, 1e6);
    const auto twice = normalize_signal(once);
    EXPECT_EQ(once.samples, twice.samples);
    for (double v : once.samples) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Normalize, BadCavityIntensityOrEmptySignalRejected) {
    EXPECT_THROW((void)normalize_signal({1.0, 2.0}, 0.0, 1e6), NormalizationError);
    EXPECT_THROW((void)normalize_signal({1.0, 2.0}, std::vector<double>{1.0, -1.0}, 1e6), NormalizationError);
    EXPECT_THROW((void)normalize_signal({1.0, 2.0}, std::vector<double>{1.0}, 1e6), NormalizationError);
    EXPECT_THROW((void)normalize_signal({0.0, 0.0}, 1.0, 1e6), NormalizationError);
}

TEST(Synthesize, AlignedFreeRodIsSingleTone) {
    auto cfg = fixtures::config(fixtures::s1);
    cfg.cavity.field_amplitude = 0.0;
    cfg.initial.phi = 0.0;
    cfg.initial.phi_dot = 0.0;
    cfg.initial.z_dot = 0.5;
    cfg.dt = 5e-9;
    const auto traj = simulate(cfg);
    const double fs = 50e6;
    const auto trace = synthesize_signal(traj, fs);
    // exact closed form: cos^2(kz(t)) under the Gaussian envelope
    const double k = cfg.cavity.wave_number();
    double peak = 0.0;
    std::vector<double> model(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double t = trace.time(i);
        const double c = std::cos(k * (cfg.initial.z + 0.5 * (t - cfg.t_start)));
        model[i] = c * c * cfg.envelope(t);
        peak = std::max(peak, model[i]);
    }
    for (std::size_t i = 0; i < trace.size(); ++i) ASSERT_NEAR(trace.samples[i], model[i] / peak, 1e-6);
    const auto peaks = find_spectral_peaks(power_spectrum(trace));
    ASSERT_FALSE(peaks.empty());
    const double nu = 2.0 * 0.5 / cfg.cavity.wavelength;
    EXPECT_NEAR(peaks.front().frequency, nu, 0.005 * nu);
    for (const auto& p : peaks) {
        const double m = p.frequency / nu;
        EXPECT_NEAR(m, std::round(m), 0.02) << "non-harmonic peak at " << p.frequency;
    }
}

TEST(Synthesize, NormalisedWithUnitMaximum) {
    const auto trace = synthesize_signal(simulate(fixtures::config(fixtures::s1)), 100e6);
    EXPECT_EQ(trace.max(), 1.0);
    for (double v : trace.samples) ASSERT_GE(v, 0.0);
    EXPECT_DOUBLE_EQ(trace.sample_rate, 100e6);
}

TEST(Synthesize, FirstFixtureSpectrumHasTranslationAndRotationPeaks) {
    const auto trace = synthesize_signal(simulate(fixtures::config(fixtures::s1)), 100e6);
    const auto spec = power_spectrum(trace);
    const auto peaks = find_spectral_peaks(spec);
    auto has_peak_near = [&](double f) {
        for (const auto& p : peaks) {
            if (std::abs(p.frequency - f) < 0.02 * f) return true;
        }
        return false;
    };
    EXPECT_TRUE(has_peak_near(2.0 * 0.74 / 1560e-9));
    EXPECT_TRUE(has_peak_near(2.0 * 2.14e6));
}

TEST(Synthesize, ParsevalAgainstTimeDomain) {
    const auto trace = synthesize_signal(simulate(fixtures::config(fixtures::s1)), 100e6);
    double ms = 0.0;
    for (double v : trace.samples) ms += v * v;
    ms /= static_cast<double>(trace.size());
    for (std::size_t pad : {1u, 4u}) {
        EXPECT_NEAR(power_spectrum(trace, Window::rectangular, pad).total_power(), ms,
                    1e-10 * ms);
    }
}

TEST(Synthesize, UndersampledRejected) {
    const auto traj = simulate(fixtures::config(fixtures::s1));
    EXPECT_THROW((void)synthesize_signal(traj, 1e3), AliasingError);
    EXPECT_THROW((void)synthesize_signal(traj, 80e6), AliasingError);
}

TEST(Synthesize, OffsetOnlyAttenuates) {
    const auto traj = simulate(fixtures::config(fixtures::s2));
    const auto a = synthesize_signal(traj, 100e6);
    const auto b = synthesize_signal(traj, 100e6, 20e-6);
    ASSERT_EQ(a.size(), b.size());
    // a constant factor exp(-2 y^2 / w0^2) cancels in the normalisation
    for (std::size_t i = 0; i < a.size(); i += 101) EXPECT_NEAR(a.samples[i], b.samples[i], 1e-12);
}

TEST(Synthesize, NoiseHookIsDeterministic) {
    SignalTrace t{1e6, 0.0, std::vector<double>(64, 0.5)};
    EXPECT_EQ(add_noise(t, 0.1, 42).samples, add_noise(t, 0.1, 42).samples);
    EXPECT_NE(add_noise(t, 0.1, 42).samples, add_noise(t, 0.1, 43).samples);
}
