/**
 * @file config.hpp
 * @brief Flat `key = value` run configuration with dotted parameter paths.
 *
 * Lines are `key = value`; `#` starts a comment. Unknown and duplicate keys are
 * errors reported with their line number. Convenience aliases:
 *   initial.kz    -> initial.z = kz / k
 *   initial.f_rot -> initial.phi_dot = 2 pi f_rot
 * Omitted time keys default to the +-10 w0 / v_x span and the default step.
 * serialize() writes every canonical key with 17 significant digits, so
 * parse(serialize(c)) == c.
 */

#pragma once

#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nanorotor/constants.hpp"
#include "nanorotor/errors.hpp"
#include "nanorotor/field_optics.hpp"
#include "nanorotor/rotor_dynamics.hpp"

namespace nanorotor::simctl {

struct RunConfig {
    SimulationConfig simulation;
    double sample_rate = 100e6;  // Hz, synthesis
    double y_offset = 0.0;       // m
    double noise = 0.0;          // additive noise sigma on the normalised signal
    double min_prominence = 0.05;
    std::uint64_t seed = 0;

    friend bool operator==(const RunConfig& a, const RunConfig& b) {
        const auto& x = a.simulation;
        const auto& y = b.simulation;
        return x.cavity.wavelength == y.cavity.wavelength && x.cavity.waist == y.cavity.waist &&
               x.cavity.field_amplitude == y.cavity.field_amplitude && x.geometry.length == y.geometry.length &&
               x.geometry.diameter == y.geometry.diameter && x.material.epsilon_r == y.material.epsilon_r &&
               x.material.density == y.material.density && x.v_x == y.v_x && x.initial == y.initial &&
               x.dt == y.dt && x.t_start == y.t_start && x.t_end == y.t_end &&
               x.particle_kind == y.particle_kind && a.sample_rate == b.sample_rate && a.y_offset == b.y_offset &&
               a.noise == b.noise && a.min_prominence == b.min_prominence && a.seed == b.seed;
    }
};

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const ConfigEntry& e) {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError("'" + e.value + "' is not a finite number", e.line, e.key);
    }
    return v;
}

inline std::uint64_t parse_unsigned(const ConfigEntry& e) {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    errno = 0;
    const auto v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE || e.value.front() == '-') {
        throw ConfigError("'" + e.value + "' is not a non-negative integer", e.line, e.key);
    }
    return v;
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "cavity.wavelength", "cavity.waist",     "cavity.field_amplitude", "rod.length",
        "rod.diameter",      "material.epsilon_r", "material.density",     "particle.kind",
        "transit.v_x",       "time.t_start",     "time.t_end",             "time.dt",
        "initial.z",         "initial.kz",       "initial.z_dot",          "initial.phi",
        "initial.phi_dot",   "initial.f_rot",    "synth.sample_rate",      "synth.y_offset",
        "synth.noise",       "analysis.min_prominence", "run.seed",
    };
    return keys;
}

}  // namespace detail

/// Splits text into entries; syntax errors carry the offending line.
[[nodiscard]] inline std::vector<ConfigEntry> parse_entries(std::string_view text) {
    std::vector<ConfigEntry> entries;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const auto content = detail::trim(raw);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        ConfigEntry e{detail::trim(content.substr(0, eq)), detail::trim(content.substr(eq + 1)), line};
        if (e.key.empty()) throw ConfigError("missing key", line);
        if (e.value.empty()) throw ConfigError("missing value", line, e.key);
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Builds a validated RunConfig from entries (unknown or duplicate keys are errors).
[[nodiscard]] inline RunConfig resolve(const std::vector<ConfigEntry>& entries) {
    if (entries.empty()) throw ConfigError("configuration is empty");
    std::map<std::string, ConfigEntry> by_key;
    for (const auto& e : entries) {
        if (!detail::known_keys().contains(e.key)) throw ConfigError("unknown key", e.line, e.key);
        if (auto it = by_key.find(e.key); it != by_key.end()) {
            throw ConfigError("duplicate key (first set on line " + std::to_string(it->second.line) + ")", e.line,
                              e.key);
        }
        by_key.emplace(e.key, e);
    }
    auto get = [&](const std::string& key) -> const ConfigEntry* {
        auto it = by_key.find(key);
        return it == by_key.end() ? nullptr : &it->second;
    };
    auto number = [&](const std::string& key, double fallback) {
        const auto* e = get(key);
        return e ? detail::parse_double(*e) : fallback;
    };
    auto required = [&](const std::string& key, const std::string& alias) -> const ConfigEntry& {
        const auto* a = get(key);
        const auto* b = alias.empty() ? nullptr : get(alias);
        if (a && b) throw ConfigError("both '" + key + "' and '" + alias + "' are set", b->line, alias);
        if (!a && !b) throw ConfigError("missing required key", 0, key);
        return a ? *a : *b;
    };

    RunConfig rc;
    auto& sim = rc.simulation;
    sim.cavity.wavelength = number("cavity.wavelength", sim.cavity.wavelength);
    sim.cavity.waist = number("cavity.waist", sim.cavity.waist);
    sim.cavity.field_amplitude = detail::parse_double(required("cavity.field_amplitude", ""));
    sim.geometry.length = number("rod.length", sim.geometry.length);
    sim.geometry.diameter = number("rod.diameter", sim.geometry.diameter);
    sim.material.epsilon_r = number("material.epsilon_r", sim.material.epsilon_r);
    sim.material.density = number("material.density", sim.material.density);
    if (const auto* e = get("particle.kind")) {
        if (e->value == "rod") {
            sim.particle_kind = ParticleKind::rod;
        } else if (e->value == "sphere") {
            sim.particle_kind = ParticleKind::sphere;
        } else {
            throw ConfigError("expected 'rod' or 'sphere'", e->line, e->key);
        }
    }
    sim.v_x = detail::parse_double(required("transit.v_x", ""));

    const auto& z = required("initial.z", "initial.kz");
    sim.initial.z = detail::parse_double(z);
    if (z.key == "initial.kz") sim.initial.z /= sim.cavity.wave_number();
    sim.initial.z_dot = detail::parse_double(required("initial.z_dot", ""));
    sim.initial.phi = detail::parse_double(required("initial.phi", ""));
    const auto& w = required("initial.phi_dot", "initial.f_rot");
    sim.initial.phi_dot = detail::parse_double(w);
    if (w.key == "initial.f_rot") sim.initial.phi_dot *= 2.0 * constants::pi;

    try {
        sim.cavity.validate();
        const double half = default_half_span(sim.cavity.waist, sim.v_x);
        sim.t_start = number("time.t_start", -half);
        sim.t_end = number("time.t_end", half);
        sim.initial.t = sim.t_start;
        sim.dt = get("time.dt") ? number("time.dt", 0.0) : default_time_step(sim);
        sim.validate();
    } catch (const ValidityError& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }

    rc.sample_rate = number("synth.sample_rate", rc.sample_rate);
    rc.y_offset = number("synth.y_offset", rc.y_offset);
    rc.noise = number("synth.noise", rc.noise);
    rc.min_prominence = number("analysis.min_prominence", rc.min_prominence);
    if (const auto* e = get("run.seed")) rc.seed = detail::parse_unsigned(*e);
    if (!(rc.sample_rate > 0.0)) throw ConfigError("must be positive", 0, "synth.sample_rate");
    if (!(rc.noise >= 0.0)) throw ConfigError("must be non-negative", 0, "synth.noise");
    if (!(rc.min_prominence > 0.0 && rc.min_prominence < 1.0)) {
        throw ConfigError("must lie in (0, 1)", 0, "analysis.min_prominence");
    }
    return rc;
}

[[nodiscard]] inline RunConfig parse_config(std::string_view text) { return resolve(parse_entries(text)); }

/// Canonical form: every key, fixed order, 17 significant digits.
[[nodiscard]] inline std::string serialize(const RunConfig& rc) {
    const auto& s = rc.simulation;
    const auto f = detail::format_double;
    std::ostringstream out;
    out << "cavity.wavelength = " << f(s.cavity.wavelength) << '\n'
        << "cavity.waist = " << f(s.cavity.waist) << '\n'
        << "cavity.field_amplitude = " << f(s.cavity.field_amplitude) << '\n'
        << "rod.length = " << f(s.geometry.length) << '\n'
        << "rod.diameter = " << f(s.geometry.diameter) << '\n'
        << "material.epsilon_r = " << f(s.material.epsilon_r) << '\n'
        << "material.density = " << f(s.material.density) << '\n'
        << "particle.kind = " << (s.particle_kind == ParticleKind::sphere ? "sphere" : "rod") << '\n'
        << "transit.v_x = " << f(s.v_x) << '\n'
        << "time.t_start = " << f(s.t_start) << '\n'
        << "time.t_end = " << f(s.t_end) << '\n'
        << "time.dt = " << f(s.dt) << '\n'
        << "initial.z = " << f(s.initial.z) << '\n'
        << "initial.z_dot = " << f(s.initial.z_dot) << '\n'
        << "initial.phi = " << f(s.initial.phi) << '\n'
        << "initial.phi_dot = " << f(s.initial.phi_dot) << '\n'
        << "synth.sample_rate = " << f(rc.sample_rate) << '\n'
        << "synth.y_offset = " << f(rc.y_offset) << '\n'
        << "synth.noise = " << f(rc.noise) << '\n'
        << "analysis.min_prominence = " << f(rc.min_prominence) << '\n'
        << "run.seed = " << rc.seed << '\n';
    return out.str();
}

/// Replaces or appends `key = value` entries; used for CLI overrides and sweep axes.
inline void set_entry(std::vector<ConfigEntry>& entries, const std::string& key, const std::string& value) {
    for (auto& e : entries) {
        if (e.key == key) {
            e.value = value;
            return;
        }
    }
    entries.push_back({key, value, 0});
}

}  // namespace nanorotor::simctl
