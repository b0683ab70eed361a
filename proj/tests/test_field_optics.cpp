#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nanorotor/field_optics.hpp"

using namespace nanorotor;

namespace {

// reference values computed independently at 30 significant digits
constexpr double rod_volume = 6.28318530717958648e-21;
constexpr double rod_alpha_par = 6.17520780773568060e-31;
constexpr double rod_alpha_perp = 9.42779817974913069e-32;
constexpr double rod_alpha_sphere = 1.31387400164588949e-31;
constexpr double rod_mass = 1.46335385804212569e-17;
constexpr double rod_inertia = 7.80455390955800368e-31;

const RodGeometry measured_rod{795e-9, 108e-9};

void expect_rel(double actual, double expected, double tol) {
    EXPECT_NEAR(actual, expected, tol * std::abs(expected)) << "expected " << expected;
}

}  // namespace

TEST(Polarizability, NeedleClosedFormFor800x100Rod) {
    const RodGeometry g;
    expect_rel(g.volume(), rod_volume, 1e-14);
    const auto pol = needle_polarizability(g, silicon);
    expect_rel(pol.alpha_par, rod_alpha_par, 1e-13);
    expect_rel(pol.alpha_perp, rod_alpha_perp, 1e-13);
}

TEST(Polarizability, SphereClosedFormFor800x100Volume) {
    expect_rel(sphere_polarizability(RodGeometry{}.volume(), silicon), rod_alpha_sphere, 1e-13);
}

TEST(Polarizability, MeasuredRodInCubicAngstrom) {
    const auto pol = needle_polarizability(measured_rod, silicon);
    expect_rel(to_cubic_angstrom(pol.alpha_par), 6.4330605e9, 1e-7);
    expect_rel(to_cubic_angstrom(pol.alpha_perp), 9.82146641e8, 1e-7);
    expect_rel(to_cubic_angstrom(orientation_averaged_polarizability(pol, AveragingMode::isotropic3d)), 2.79911793e9,
               1e-7);
    expect_rel(to_cubic_angstrom(sphere_polarizability(measured_rod.volume(), silicon)), 1.36873628e9, 1e-7);
}

TEST(Polarizability, MeasuredRodMatchesQuotedValuesWithinThreePercent) {
    const auto pol = needle_polarizability(measured_rod, silicon);
    expect_rel(to_cubic_angstrom(pol.alpha_par), 6.4e9, 0.03);
    expect_rel(to_cubic_angstrom(pol.alpha_perp), 9.8e8, 0.03);
    expect_rel(to_cubic_angstrom(orientation_averaged_polarizability(pol, AveragingMode::isotropic3d)), 2.8e9, 0.03);
    expect_rel(to_cubic_angstrom(sphere_polarizability(measured_rod.volume(), silicon)), 1.4e9, 0.03);
}

TEST(Polarizability, PlanarEnhancementOverSphere) {
    const auto pol = needle_polarizability(measured_rod, silicon);
    const double ratio = orientation_averaged_polarizability(pol, AveragingMode::planar) /
                         sphere_polarizability(measured_rod.volume(), silicon);
    expect_rel(ratio, 2.70877862595, 1e-9);
    expect_rel(ratio, 2.7, 0.03);
}

TEST(Polarizability, MeasuredRodMass) {
    const auto body = BodyProperties::of(measured_rod, silicon);
    expect_rel(body.mass() / constants::atomic_mass_unit, 1.0215e10, 1e-3);
}

TEST(Polarizability, BodyPropertiesFor800x100Rod) {
    const auto body = BodyProperties::of(RodGeometry{}, silicon);
    expect_rel(body.mass(), rod_mass, 1e-13);
    expect_rel(body.inertia(), rod_inertia, 1e-13);
}

TEST(Polarizability, VacuumRodHasNone) {
    const Material vacuum{1.0, 2329.0};
    const auto pol = needle_polarizability(RodGeometry{}, vacuum);
    EXPECT_EQ(pol.alpha_par, 0.0);
    EXPECT_EQ(pol.alpha_perp, 0.0);
    EXPECT_EQ(sphere_polarizability(RodGeometry{}.volume(), vacuum), 0.0);
}

TEST(Polarizability, AspectRatioBelowFourRejected) {
    EXPECT_THROW((void)needle_polarizability(RodGeometry{390e-9, 100e-9}, silicon), ValidityError);
    EXPECT_NO_THROW((void)needle_polarizability(RodGeometry{400e-9, 100e-9}, silicon));
}

TEST(Polarizability, InvalidInputsRejected) {
    EXPECT_THROW((void)needle_polarizability(RodGeometry{-1e-9, 100e-9}, silicon), ValidityError);
    EXPECT_THROW((void)needle_polarizability(RodGeometry{}, Material{0.5, 2329.0}), ValidityError);
    EXPECT_THROW((void)BodyProperties::of(RodGeometry{}, Material{12.1, 0.0}), ValidityError);
    EXPECT_THROW((void)sphere_polarizability(0.0, silicon), ValidityError);
}

TEST(Polarizability, IsotropicTensorAveragesToItself) {
    const auto pol = isotropic(3.25e-31);
    EXPECT_DOUBLE_EQ(orientation_averaged_polarizability(pol, AveragingMode::isotropic3d), 3.25e-31);
    EXPECT_DOUBLE_EQ(orientation_averaged_polarizability(pol, AveragingMode::planar), 3.25e-31);
}

TEST(PolarizabilityProperty, RatioIsHalfEpsilonPlusOne) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> eps(1.01, 40.0), len(200e-9, 5e-6), ar(4.0, 60.0);
    for (int i = 0; i < 200; ++i) {
        const double l = len(rng);
        const RodGeometry g{l, l / ar(rng)};
        const Material m{eps(rng), 2329.0};
        const auto pol = needle_polarizability(g, m);
        expect_rel(pol.alpha_par / pol.alpha_perp, (m.epsilon_r + 1.0) / 2.0, 1e-14);
    }
}

TEST(PolarizabilityProperty, PlanarAverageExceedsSameMassSphere) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> eps(1.0001, 40.0), ar(4.0, 60.0);
    for (int i = 0; i < 200; ++i) {
        const RodGeometry g{1e-6, 1e-6 / ar(rng)};
        const Material m{eps(rng), 2329.0};
        const auto pol = needle_polarizability(g, m);
        EXPECT_GT(orientation_averaged_polarizability(pol, AveragingMode::planar),
                  sphere_polarizability(g.volume(), m));
    }
}

TEST(CavityField, ZeroIntensityGivesZeroField) { EXPECT_EQ(cavity_field_amplitude(0.0), 0.0); }

TEST(CavityField, FourHundredWattsInSixtyFiveMicronWaist) {
    const double ic = peak_intensity(400.0, 65e-6);
    expect_rel(ic, 6.02716944253e10, 1e-11);
    const double e0 = cavity_field_amplitude(ic);
    expect_rel(e0, 9.53019923109e6, 1e-11);
    EXPECT_GT(e0, 8.2e6);
}

TEST(CavityField, DoublingIntensityScalesFieldBySqrtTwo) {
    for (double ic : {1.0, 3.7e9, 6.0e10}) {
        expect_rel(cavity_field_amplitude(2.0 * ic), std::sqrt(2.0) * cavity_field_amplitude(ic), 1e-15);
    }
}

TEST(CavityField, NegativeIntensityRejected) { EXPECT_THROW((void)cavity_field_amplitude(-1.0), ValidityError); }

class ForceTest : public ::testing::Test {
protected:
    CavityParams cav = [] {
        CavityParams c;
        c.field_amplitude = 8.2e6;
        return c;
    }();
    Polarizability pol = needle_polarizability(RodGeometry{}, silicon);
    BodyProperties body = BodyProperties::of(RodGeometry{}, silicon);
    double k = cav.wave_number();
};

TEST_F(ForceTest, ClosedFormAtSecondFixtureStart) {
    expect_rel(axial_acceleration(-91.0 / k, -0.4, 1.0, cav, pol, body), -524840.015093269632, 1e-10);
    expect_rel(angular_acceleration(-91.0 / k, -0.4, 1.0, cav, pol, body), 7.99376703793039895e12, 1e-10);
}

TEST_F(ForceTest, NoAxialForceAtAntinode) {
    for (double phi : {0.0, 0.3, 1.2, 2.9}) EXPECT_EQ(axial_acceleration(0.0, phi, 1.0, cav, pol, body), 0.0);
}

TEST_F(ForceTest, PerpendicularRodFeelsOnlyPerpendicularPolarizability) {
    const double z = 0.13 / k;
    const double expected = -(cav.field_amplitude * cav.field_amplitude * k / (4.0 * body.mass())) *
                            pol.alpha_perp * std::sin(2.0 * k * z);
    expect_rel(axial_acceleration(z, constants::pi / 2.0, 1.0, cav, pol, body), expected, 1e-12);
}

TEST_F(ForceTest, NoTorqueWhenAlignedOrAtNode) {
    EXPECT_EQ(angular_acceleration(0.37 / k, 0.0, 1.0, cav, pol, body), 0.0);
    EXPECT_NEAR(angular_acceleration(constants::pi / 2.0 / k, 0.7, 1.0, cav, pol, body), 0.0,
                1e-20 * std::abs(angular_acceleration(0.0, 0.7, 1.0, cav, pol, body)));
}

TEST_F(ForceTest, ForceAndTorqueRestoring) {
    EXPECT_LT(axial_acceleration(0.2 / k, 0.3, 1.0, cav, pol, body), 0.0);
    EXPECT_GT(axial_acceleration(-0.2 / k, 0.3, 1.0, cav, pol, body), 0.0);
    EXPECT_LT(angular_acceleration(0.1 / k, 0.2, 1.0, cav, pol, body), 0.0);
    EXPECT_GT(angular_acceleration(0.1 / k, -0.2, 1.0, cav, pol, body), 0.0);
}

TEST_F(ForceTest, PotentialVanishesWithoutEnvelopeOrAtNode) {
    EXPECT_EQ(optical_potential(0.3 / k, 0.4, 0.0, cav, pol), 0.0);
    EXPECT_NEAR(optical_potential(constants::pi / 2.0 / k, 0.4, 1.0, cav, pol), 0.0,
                1e-20 * std::abs(optical_potential(0.0, 0.4, 1.0, cav, pol)));
}

TEST_F(ForceTest, EnvelopeOutsideUnitIntervalRejected) {
    EXPECT_THROW((void)axial_acceleration(0.0, 0.0, 1.5, cav, pol, body), ValidityError);
    EXPECT_THROW((void)angular_acceleration(0.0, 0.0, -0.1, cav, pol, body), ValidityError);
    EXPECT_THROW((void)optical_potential(0.0, 0.0, 2.0, cav, pol), ValidityError);
}

TEST_F(ForceTest, PotentialGradientMatchesForceAndTorque) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> kz(-10.0, 10.0), phi(-4.0, 4.0), env(0.05, 1.0);
    const double hz = 1e-6 * cav.wavelength;
    const double hphi = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const double z = kz(rng) / k;
        const double p = phi(rng);
        const double g = env(rng);
        const double fz = -(optical_potential(z + hz, p, g, cav, pol) - optical_potential(z - hz, p, g, cav, pol)) /
                          (2.0 * hz);
        const double tq =
            -(optical_potential(z, p + hphi, g, cav, pol) - optical_potential(z, p - hphi, g, cav, pol)) / (2.0 * hphi);
        expect_rel(fz, body.mass() * axial_acceleration(z, p, g, cav, pol, body), 1e-6);
        expect_rel(tq, body.inertia() * angular_acceleration(z, p, g, cav, pol, body), 1e-6);
    }
}

TEST_F(ForceTest, AccelerationsOddAboutNodesAntinodesAndAxes) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 1.5), phi(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const double d = u(rng) / k;
        const double p = phi(rng);
        for (double centre : {0.0, constants::pi / 2.0 / k, constants::pi / k}) {
            const double a = axial_acceleration(centre + d, p, 1.0, cav, pol, body);
            const double b = axial_acceleration(centre - d, p, 1.0, cav, pol, body);
            EXPECT_NEAR(a, -b, 1e-9 * std::abs(a) + 1e-6);
        }
        const double z = u(rng) / k;
        const double dp = u(rng);
        for (double centre : {0.0, constants::pi / 2.0}) {
            const double a = angular_acceleration(z, centre + dp, 1.0, cav, pol, body);
            const double b = angular_acceleration(z, centre - dp, 1.0, cav, pol, body);
            EXPECT_NEAR(a, -b, 1e-9 * std::abs(a) + 1e-3);
        }
    }
}

TEST_F(ForceTest, AnalyticFrequencies) {
    const double f_trap = trap_frequency(cav, pol.alpha_par, body);
    expect_rel(f_trap, k * cav.field_amplitude * std::sqrt(pol.alpha_par / (2.0 * body.mass())) / (2.0 * constants::pi),
               1e-15);
    expect_rel(libration_frequency(cav, pol, body), 755608.046, 1e-8);
}
