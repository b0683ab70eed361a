/**
 * @file spectrum.hpp
 * @brief One-sided power spectra and spectral peak extraction.
 *
 * Normalisation: for a trace x_j with window w_j, zero-padded to N_fft,
 *   P_k = c_k |X_k|^2 / (N_fft * sum_j w_j^2),  c_0 = c_{N/2} = 1, else 2.
 * With a rectangular window the bins sum exactly to the mean-square of the trace.
 */

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <type_traits>
#include <vector>

#include "nanorotor/constants.hpp"
#include "nanorotor/errors.hpp"
#include "nanorotor/signal_trace.hpp"

namespace nanorotor {

enum class Window { rectangular, hann };

struct Spectrum {
    double bin_width = 0.0;  // Hz
    std::vector<double> power;

    [[nodiscard]] std::size_t size() const { return power.size(); }
    [[nodiscard]] double frequency(std::size_t i) const { return bin_width * static_cast<double>(i); }
    [[nodiscard]] double frequency(double fractional_bin) const { return bin_width * fractional_bin; }
    [[nodiscard]] double total_power() const {
        double s = 0.0;
        for (double p : power) s += p;
        return s;
    }
};

inline constexpr std::size_t min_spectrum_samples = 64;

namespace detail {

// The FFTW planner is not re-entrant; execution of a finished plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

struct FftwPlanDestroy {
    void operator()(fftw_plan p) const {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

/// |X_k|^2 for k = 0..n/2 of the real sequence `input` (length n).
inline std::vector<double> real_dft_magnitude2(const std::vector<double>& input) {
    const std::size_t n = input.size();
    const std::size_t n_out = n / 2 + 1;
    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwFree> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out)));
    std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy> plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    }
    std::copy(input.begin(), input.end(), in.get());
    fftw_execute(plan.get());
    std::vector<double> mag2(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        mag2[k] = out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
    }
    return mag2;
}

inline double window_value(Window window, std::size_t j, std::size_t n) {
    if (window == Window::rectangular || n < 2) return 1.0;
    return 0.5 * (1.0 - std::cos(2.0 * constants::pi * static_cast<double>(j) / static_cast<double>(n - 1)));
}

}  // namespace detail

/// One-sided, windowed power spectrum zero-padded to `pad_factor` times the trace length.
[[nodiscard]] inline Spectrum power_spectrum(const SignalTrace& trace, Window window = Window::hann,
                                             std::size_t pad_factor = 4) {
    trace.validate();
    if (trace.size() < min_spectrum_samples) {
        throw InsufficientDataError("power spectrum needs at least 64 samples, got " +
                                    std::to_string(trace.size()));
    }
    if (pad_factor < 1) pad_factor = 1;
    const std::size_t n = trace.size();
    const std::size_t n_fft = n * pad_factor;

    std::vector<double> buffer(n_fft, 0.0);
    double w2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = detail::window_value(window, j, n);
        buffer[j] = trace.samples[j] * w;
        w2 += w * w;
    }
    auto mag2 = detail::real_dft_magnitude2(buffer);

    Spectrum s;
    s.bin_width = trace.sample_rate / static_cast<double>(n_fft);
    s.power.resize(mag2.size());
    const double norm = 1.0 / (static_cast<double>(n_fft) * w2);
    for (std::size_t k = 0; k < mag2.size(); ++k) {
        const bool edge = (k == 0) || (n_fft % 2 == 0 && k == n_fft / 2);
        s.power[k] = (edge ? 1.0 : 2.0) * mag2[k] * norm;
    }
    return s;
}

struct SpectralPeak {
    double frequency = 0.0;   // Hz, parabolic-interpolated
    double power = 0.0;       // interpolated peak power
    std::size_t bin = 0;      // index of the local maximum
    double half_width = 0.0;  // Hz, half width at half maximum
};

struct PeakOptions {
    double prominence_factor = 10.0;  // peak power >= factor * median bin power
    double dynamic_range = 1e-3;      // and >= dynamic_range * strongest candidate
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

/// Index of the first local minimum after DC: the end of the zero-frequency lobe.
inline std::size_t dc_lobe_end(const std::vector<double>& p) {
    std::size_t i = 1;
    while (i + 1 < p.size() && p[i + 1] < p[i]) ++i;
    return i;
}

inline SpectralPeak refine_peak(const Spectrum& s, std::size_t i) {
    const auto& p = s.power;
    constexpr double tiny = 1e-300;
    SpectralPeak peak;
    peak.bin = i;
    peak.frequency = s.frequency(i);
    peak.power = p[i];
    if (i > 0 && i + 1 < p.size()) {
        const double a = std::log(std::max(p[i - 1], tiny));
        const double b = std::log(std::max(p[i], tiny));
        const double c = std::log(std::max(p[i + 1], tiny));
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) {
            const double delta = 0.5 * (a - c) / denom;
            peak.frequency = s.frequency(static_cast<double>(i) + delta);
            peak.power = std::exp(b - 0.25 * (a - c) * delta);
        }
    }
    // half width at half maximum, linear interpolation between bins
    const double half = 0.5 * p[i];
    double left = static_cast<double>(i);
    for (std::size_t j = i; j > 0; --j) {
        if (p[j - 1] < half) {
            left = static_cast<double>(j - 1) + (half - p[j - 1]) / (p[j] - p[j - 1]);
            break;
        }
        left = static_cast<double>(j - 1);
    }
    double right = static_cast<double>(i);
    for (std::size_t j = i; j + 1 < p.size(); ++j) {
        if (p[j + 1] < half) {
            right = static_cast<double>(j) + (p[j] - half) / (p[j] - p[j + 1]);
            break;
        }
        right = static_cast<double>(j + 1);
    }
    peak.half_width = 0.5 * (right - left) * s.bin_width;
    return peak;
}

}  // namespace detail

/**
 * Prominent local maxima beyond the zero-frequency lobe, sorted by frequency.
 * A peak is prominent when it is at least `prominence_factor` times the median
 * bin power and within `dynamic_range` of the strongest such peak.
 */
[[nodiscard]] inline std::vector<SpectralPeak> find_spectral_peaks(const Spectrum& s, const PeakOptions& opt = {}) {
    std::vector<SpectralPeak> peaks;
    const auto& p = s.power;
    if (p.size() < 3) return peaks;
    const double floor = opt.prominence_factor * detail::median_of(p);
    std::vector<std::size_t> idx;
    for (std::size_t i = detail::dc_lobe_end(p) + 1; i + 1 < p.size(); ++i) {
        if (p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] >= floor && p[i] > 0.0) idx.push_back(i);
    }
    double strongest = 0.0;
    for (auto i : idx) strongest = std::max(strongest, p[i]);
    for (auto i : idx) {
        if (p[i] >= opt.dynamic_range * strongest) peaks.push_back(detail::refine_peak(s, i));
    }
    return peaks;
}

/// Strongest local maximum beyond the zero-frequency lobe, if any.
[[nodiscard]] inline std::optional<SpectralPeak> dominant_peak(const Spectrum& s) {
    const auto& p = s.power;
    if (p.size() < 3) return std::nullopt;
    std::optional<std::size_t> best;
    for (std::size_t i = detail::dc_lobe_end(p) + 1; i + 1 < p.size(); ++i) {
        if (p[i] > p[i - 1] && p[i] >= p[i + 1] && (!best || p[i] > p[*best])) best = i;
    }
    if (!best) return std::nullopt;
    return detail::refine_peak(s, *best);
}

}  // namespace nanorotor
