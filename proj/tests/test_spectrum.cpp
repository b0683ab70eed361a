#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "nanorotor/spectrum.hpp"

using namespace nanorotor;

namespace {

SignalTrace tone(double f, double fs, std::size_t n, double amplitude = 1.0) {
    SignalTrace t{fs, 0.0, {}};
    for (std::size_t i = 0; i < n; ++i) t.samples.push_back(amplitude * std::cos(2.0 * constants::pi * f * t.time(i)));
    return t;
}

// one-sided periodogram by direct summation in long double
std::vector<double> direct_spectrum(const SignalTrace& t, Window w) {
    const std::size_t n = t.size();
    long double w2 = 0.0L;
    for (std::size_t j = 0; j < n; ++j) w2 += std::pow(static_cast<long double>(detail::window_value(w, j, n)), 2);
    std::vector<double> p(n / 2 + 1);
    const long double two_pi = 6.283185307179586476925286766559L;
    for (std::size_t k = 0; k < p.size(); ++k) {
        long double re = 0.0L, im = 0.0L;
        for (std::size_t j = 0; j < n; ++j) {
            const long double x = t.samples[j] * static_cast<long double>(detail::window_value(w, j, n));
            const long double a = two_pi * static_cast<long double>((k * j) % n) / static_cast<long double>(n);
            re += x * std::cos(a);
            im -= x * std::sin(a);
        }
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        p[k] = static_cast<double>((edge ? 1.0L : 2.0L) * (re * re + im * im) / (static_cast<long double>(n) * w2));
    }
    return p;
}

}  // namespace

TEST(PowerSpectrum, ConstantTraceHasOnlyDc) {
    SignalTrace t{1e6, 0.0, std::vector<double>(256, 0.7)};
    const auto s = power_spectrum(t, Window::rectangular, 1);
    EXPECT_NEAR(s.power[0], 0.49, 1e-15);
    for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LT(s.power[k], 1e-28);
}

TEST(PowerSpectrum, PaddedConstantTraceKeepsOriginalGridEmpty) {
    SignalTrace t{1e6, 0.0, std::vector<double>(256, 0.7)};
    const auto s = power_spectrum(t, Window::rectangular, 4);
    for (std::size_t k = 1; k < s.size(); ++k) {
        EXPECT_LT(s.power[k], 2.0 * s.power[0]);  // one-sided: non-DC bins carry both halves
        if (k % 4 == 0) {
            EXPECT_LT(s.power[k], 1e-28);
        }
    }
}

TEST(PowerSpectrum, BinsSpanZeroToNyquist) {
    const auto s = power_spectrum(tone(1e6, 100e6, 1000), Window::hann, 4);
    EXPECT_EQ(s.size(), 2001u);
    EXPECT_DOUBLE_EQ(s.frequency(s.size() - 1), 50e6);
    for (double p : s.power) EXPECT_GE(p, 0.0);
}

TEST(PowerSpectrum, ToneLocatedWithinOneInterpolatedBin) {
    const auto t = tone(1e6, 100e6, 5000);
    const auto s = power_spectrum(t);
    const auto peak = dominant_peak(s);
    ASSERT_TRUE(peak.has_value());
    EXPECT_NEAR(peak->frequency, 1e6, s.bin_width);
    EXPECT_NEAR(peak->frequency, 1e6, 1e-3 * 1e6);
    const auto peaks = find_spectral_peaks(s);
    ASSERT_EQ(peaks.size(), 1u);
}

TEST(PowerSpectrum, MatchesDirectDft) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    SignalTrace t{1e6, 0.0, std::vector<double>(1024)};
    for (std::size_t i = 0; i < t.size(); ++i) t.samples[i] = std::sin(0.05 * i) + 0.3 * g(rng);
    for (auto w : {Window::rectangular, Window::hann}) {
        const auto fft = power_spectrum(t, w, 1);
        const auto ref = direct_spectrum(t, w);
        ASSERT_EQ(fft.size(), ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(fft.power[k], ref[k], 1e-10 * ref[k]) << k;
    }
}

TEST(PowerSpectrum, ParsevalWithRectangularWindow) {
    std::mt19937_64 rng(78);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SignalTrace t{3e6, 0.0, std::vector<double>(777)};
    double ms = 0.0;
    for (double& v : t.samples) {
        v = u(rng);
        ms += v * v;
    }
    ms /= static_cast<double>(t.size());
    for (std::size_t pad : {1u, 4u, 16u}) {
        EXPECT_NEAR(power_spectrum(t, Window::rectangular, pad).total_power(), ms, 1e-10 * ms);
    }
}

TEST(PowerSpectrum, TooShortTraceRejected) {
    EXPECT_THROW((void)power_spectrum(SignalTrace{1e6, 0.0, std::vector<double>(63, 1.0)}), InsufficientDataError);
    EXPECT_THROW((void)power_spectrum(SignalTrace{0.0, 0.0, std::vector<double>(128, 1.0)}), ValidityError);
}

TEST(SpectralPeaks, ProminenceAndHalfWidth) {
    auto t = tone(1e6, 100e6, 4000);
    const auto second = tone(3.3e6, 100e6, 4000, 0.2);
    for (std::size_t i = 0; i < t.size(); ++i) t.samples[i] += second.samples[i];
    const auto peaks = find_spectral_peaks(power_spectrum(t));
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_NEAR(peaks[0].frequency, 1e6, 2e3);
    EXPECT_NEAR(peaks[1].frequency, 3.3e6, 2e3);
    EXPECT_GT(peaks[0].power, peaks[1].power);
    // Hann main lobe: half width at half maximum is about 0.72 fs / N
    EXPECT_NEAR(peaks[0].half_width, 0.72 * 100e6 / 4000, 0.1 * 100e6 / 4000);
}

TEST(SpectralPeaks, FlatSpectrumHasNoProminentPeak) {
    SignalTrace t{1e6, 0.0, std::vector<double>(512, 1.0)};
    EXPECT_TRUE(find_spectral_peaks(power_spectrum(t, Window::rectangular, 1)).empty());
}
