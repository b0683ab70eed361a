/**
 * @file io.hpp
 * @brief Artifact files: trajectory and signal CSVs, JSON records, provenance hashes.
 *
 * Every numeric field is written with 17 significant digits and no timestamps
 * are recorded, so identical inputs give byte-identical files.
 */

#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nanorotor/errors.hpp"
#include "nanorotor/rotor_dynamics.hpp"
#include "nanorotor/signal_trace.hpp"
#include "nanorotor/simctl/config.hpp"
#include "nanorotor/trace_analysis.hpp"

namespace nanorotor::simctl {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* tool_version = "nanorotor 1.0.0";

[[nodiscard]] inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

[[nodiscard]] inline json provenance(const RunConfig& rc) {
    return {{"config_sha256", sha256_hex(serialize(rc))}, {"version", tool_version}};
}

[[nodiscard]] inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

inline void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

namespace detail {

inline void append_row(std::string& out, std::initializer_list<double> values) {
    char buf[32];
    bool first = true;
    for (double v : values) {
        if (!first) out += ',';
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
        first = false;
    }
    out += '\n';
}

inline std::vector<std::vector<double>> read_csv(const fs::path& path, const std::string& header) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != header) {
        throw Error(path.string() + ": expected header '" + header + "'");
    }
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        std::istringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            char* end = nullptr;
            const auto text = detail::trim(field);
            const double v = std::strtod(text.c_str(), &end);
            if (text.empty() || *end != '\0') {
                throw Error(path.string() + ":" + std::to_string(line_no) + ": bad number '" + text + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json estimate_json(const OptionalEstimate& e) {
    if (e.has_value()) return {{"value", e.value()}, {"sigma", e.sigma()}};
    return {{"value", nullptr}, {"sigma", nullptr}, {"reason", e.reason}};
}

}  // namespace detail

// --- trajectory -------------------------------------------------------------

inline void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
    std::string out = "t,z,z_dot,phi,phi_dot,envelope\n";
    out.reserve(traj.size() * 128);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj.samples[i];
        detail::append_row(out, {s.t, s.z, s.z_dot, s.phi, s.phi_dot, traj.envelope(i)});
    }
    write_file(path, out);
}

/// Reloads a trajectory produced with `config`; the step is rederived as in simulate().
[[nodiscard]] inline Trajectory read_trajectory_csv(const fs::path& path, const SimulationConfig& config) {
    const auto rows = detail::read_csv(path, "t,z,z_dot,phi,phi_dot,envelope");
    if (rows.size() < 2) throw InsufficientDataError(path.string() + ": fewer than two trajectory rows");
    Trajectory traj;
    traj.config = config;
    traj.config.dt = (config.t_end - config.t_start) / static_cast<double>(rows.size() - 1);
    for (const auto& r : rows) {
        if (r.size() != 6) throw Error(path.string() + ": expected 6 columns");
        traj.samples.push_back({r[0], r[1], r[2], r[3], r[4]});
    }
    return traj;
}

[[nodiscard]] inline json summary_json(const TransitSummary& s, const ChannellingResult& c, const RunConfig& rc) {
    json j;
    j["v_z_in"] = s.v_z_in;
    j["v_z_out"] = s.v_z_out;
    j["f_rot_in"] = s.f_rot_in;
    j["f_rot_out"] = s.f_rot_out;
    j["velocity_ratio"] = s.velocity_ratio();
    j["rotation_ratio"] = s.rotation_ratio();
    j["channelled"] = s.channelled;
    j["n_antinode_hops"] = s.n_antinode_hops;
    j["max_excursion"] = c.max_excursion;
    j["trap_frequency"] = detail::optional_number(s.trap_frequency);
    if (!s.trap_frequency) j["trap_frequency_reason"] = c.note;
    j["dt"] = rc.simulation.dt;
    j["provenance"] = provenance(rc);
    return j;
}

// --- signal ---------------------------------------------------------------------

inline void write_signal(const fs::path& csv_path, const SignalTrace& trace, const RunConfig& rc) {
    std::string out = "t,s_n\n";
    out.reserve(trace.size() * 48);
    for (std::size_t i = 0; i < trace.size(); ++i) detail::append_row(out, {trace.time(i), trace.samples[i]});
    write_file(csv_path, out);
    json side;
    side["sample_rate"] = trace.sample_rate;
    side["t0"] = trace.t0;
    side["n_samples"] = trace.size();
    side["provenance"] = provenance(rc);
    auto sidecar = csv_path;
    sidecar.replace_extension(".json");
    write_json(sidecar, side);
}

/**
 * Reads `t,s_n`. The sample rate and t0 come from the JSON sidecar when present,
 * otherwise from the (required uniform) time column.
 */
[[nodiscard]] inline SignalTrace read_signal(const fs::path& csv_path) {
    const auto rows = detail::read_csv(csv_path, "t,s_n");
    if (rows.size() < 2) throw InsufficientDataError(csv_path.string() + ": fewer than two samples");
    SignalTrace trace;
    for (const auto& r : rows) {
        if (r.size() != 2) throw Error(csv_path.string() + ": expected 2 columns");
        trace.samples.push_back(r[1]);
    }
    auto sidecar = csv_path;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
        const auto side = json::parse(read_file(sidecar));
        trace.sample_rate = side.at("sample_rate").get<double>();
        trace.t0 = side.at("t0").get<double>();
    } else {
        const double span = rows.back()[0] - rows.front()[0];
        trace.sample_rate = static_cast<double>(rows.size() - 1) / span;
        trace.t0 = rows.front()[0];
        const double h = 1.0 / trace.sample_rate;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (std::abs(rows[i][0] - rows[i - 1][0] - h) > 1e-6 * h) {
                throw Error(csv_path.string() + ": time column is not uniformly spaced");
            }
        }
    }
    trace.validate();
    return trace;
}

// --- analysis -------------------------------------------------------------------

[[nodiscard]] inline json analysis_json(const TraceAnalysis& a, const RunConfig& rc) {
    const auto& k = a.kinematics;
    json j;
    j["v_x"] = detail::estimate_json(k.v_x);
    j["v_z"] = detail::estimate_json(k.v_z);
    j["f_rot"] = detail::estimate_json(k.f_rot);
    j["t_center"] = detail::optional_number(k.t_center);
    j["nu_trans"] = detail::optional_number(k.nu_trans);
    j["nu_rot"] = detail::optional_number(k.nu_rot);
    j["channelled"] = a.channelled ? json(*a.channelled) : json(nullptr);
    j["trap_frequency"] = detail::estimate_json(a.trap_frequency);
    j["warnings"] = a.warnings;
    j["provenance"] = provenance(rc);
    return j;
}

inline void write_reconstruction_csv(const fs::path& path, const AxialReconstruction& rec) {
    std::string out = "t,z\n";
    for (std::size_t i = 0; i < rec.t.size(); ++i) detail::append_row(out, {rec.t[i], rec.z[i]});
    write_file(path, out);
}

inline void write_rate_csv(const fs::path& path, const RotationRateSeries& series) {
    std::string out = "t,f_rot\n";
    for (std::size_t i = 0; i < series.t.size(); ++i) detail::append_row(out, {series.t[i], series.rate[i]});
    write_file(path, out);
}

}  // namespace nanorotor::simctl
