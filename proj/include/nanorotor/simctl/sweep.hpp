/**
 * @file sweep.hpp
 * @brief Cartesian parameter sweeps over the simulate stage.
 *
 * A sweep file is a config file plus:
 *   sweep.base = other.cfg          optional, relative to the sweep file
 *   sweep.cap = 10000               optional bound on the number of runs
 *   sweep.axis.<key> = v1, v2, ...  one line per axis, any config key
 * Runs are numbered in row-major order of the axes as listed (last axis fastest)
 * and written to <out>/run_NNNNN/. The manifest is assembled after all runs
 * finish, so its content does not depend on scheduling.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nanorotor/errors.hpp"
#include "nanorotor/simctl/commands.hpp"
#include "nanorotor/simctl/config.hpp"
#include "nanorotor/simctl/io.hpp"

namespace nanorotor::simctl {

inline constexpr std::size_t default_sweep_cap = 10000;

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

struct SweepSpec {
    std::vector<ConfigEntry> base;
    std::vector<SweepAxis> axes;
    std::size_t cap = default_sweep_cap;

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 1;
        for (const auto& a : axes) {
            if (a.values.empty()) return 0;
            if (n > cap) return n;  // already over the cap; avoid overflow
            n *= a.values.size();
        }
        return n;
    }
};

[[nodiscard]] inline SweepSpec parse_sweep(std::string_view text, const fs::path& directory = {}) {
    SweepSpec spec;
    std::vector<ConfigEntry> overrides;
    for (auto& e : parse_entries(text)) {
        if (e.key == "sweep.base") {
            spec.base = parse_entries(read_file(directory / e.value));
        } else if (e.key == "sweep.cap") {
            spec.cap = static_cast<std::size_t>(detail::parse_unsigned(e));
        } else if (e.key.starts_with("sweep.axis.")) {
            SweepAxis axis{e.key.substr(11), {}};
            if (!detail::known_keys().contains(axis.key)) throw ConfigError("unknown sweep axis", e.line, e.key);
            for (const auto& a : spec.axes) {
                if (a.key == axis.key) throw ConfigError("duplicate sweep axis", e.line, e.key);
            }
            std::string item;
            std::istringstream list(e.value);
            while (std::getline(list, item, ',')) {
                auto v = detail::trim(item);
                if (v.empty()) throw ConfigError("empty value in sweep list", e.line, e.key);
                axis.values.push_back(std::move(v));
            }
            spec.axes.push_back(std::move(axis));
        } else if (e.key.starts_with("sweep.")) {
            throw ConfigError("unknown sweep key", e.line, e.key);
        } else {
            overrides.push_back(std::move(e));
        }
    }
    for (const auto& o : overrides) set_entry(spec.base, o.key, o.value);
    if (spec.size() > spec.cap) {
        throw CapExceededError("sweep has " + std::to_string(spec.size()) + "+ runs, cap is " +
                               std::to_string(spec.cap));
    }
    return spec;
}

struct SweepRun {
    std::size_t index = 0;
    std::vector<std::pair<std::string, std::string>> parameters;
    fs::path directory;
    std::optional<SimulateResult> result;
    std::string error;
};

[[nodiscard]] inline std::string run_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%05zu", index);
    return buf;
}

/// Runs every combination on `jobs` workers; per-run failures are recorded, not thrown.
[[nodiscard]] inline std::vector<SweepRun> run_sweep(const SweepSpec& spec, const fs::path& out_dir,
                                                     std::size_t jobs = 0) {
    const std::size_t n = spec.size();
    if (n > spec.cap) throw CapExceededError("sweep exceeds its cap");
    std::vector<SweepRun> runs(n);
    for (std::size_t i = 0; i < n; ++i) {
        runs[i].index = i;
        runs[i].directory = out_dir / run_name(i);
        std::size_t rem = i;
        runs[i].parameters.resize(spec.axes.size());
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            const auto& axis = spec.axes[a];
            runs[i].parameters[a] = {axis.key, axis.values[rem % axis.values.size()]};
            rem /= axis.values.size();
        }
    }

    auto execute = [&](SweepRun& run) {
        try {
            auto entries = spec.base;
            for (const auto& [k, v] : run.parameters) set_entry(entries, k, v);
            run.result = cmd_simulate(resolve(entries), run.directory);
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    };

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) execute(runs[i]);
            });
        }
    }
    return runs;
}

[[nodiscard]] inline json manifest_json(const std::vector<SweepRun>& runs) {
    json list = json::array();
    for (const auto& r : runs) {
        json j;
        j["index"] = r.index;
        json params = json::object();
        for (const auto& [k, v] : r.parameters) params[k] = v;
        j["parameters"] = params;
        if (r.result) {
            const auto rel = run_name(r.index);
            j["outputs"] = {{"trajectory", rel + "/trajectory.csv"}, {"summary", rel + "/summary.json"}};
            const auto& s = r.result->summary;
            j["metrics"] = {{"channelled", s.channelled},
                            {"n_antinode_hops", s.n_antinode_hops},
                            {"trap_frequency", detail::optional_number(s.trap_frequency)},
                            {"velocity_ratio", s.velocity_ratio()},
                            {"rotation_ratio", s.rotation_ratio()}};
            j["error"] = nullptr;
        } else {
            j["error"] = r.error;
        }
        list.push_back(std::move(j));
    }
    std::size_t failures = 0;
    for (const auto& r : runs) failures += r.result ? 0 : 1;
    return {{"runs", list}, {"n_runs", runs.size()}, {"n_failed", failures}};
}

}  // namespace nanorotor::simctl
