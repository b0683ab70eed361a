// nanorotor: simulate, synthesize and analyze rod transits through a standing-wave cavity.
//
// Exit status: 0 success (possibly with warnings), 1 runtime failure, 2 usage or config error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nanorotor/simctl/commands.hpp"
#include "nanorotor/simctl/config.hpp"
#include "nanorotor/simctl/io.hpp"
#include "nanorotor/simctl/sweep.hpp"

namespace {

using namespace nanorotor;
using namespace nanorotor::simctl;

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct Overrides {
    std::optional<double> dt;
    std::optional<double> sample_rate;
    std::optional<std::uint64_t> seed;

    void apply(std::vector<ConfigEntry>& entries) const {
        if (dt) set_entry(entries, "time.dt", simctl::detail::format_double(*dt));
        if (sample_rate) set_entry(entries, "synth.sample_rate", simctl::detail::format_double(*sample_rate));
        if (seed) set_entry(entries, "run.seed", std::to_string(*seed));
    }
};

RunConfig load_config(const std::string& path, const Overrides& ov) {
    auto entries = parse_entries(read_file(path));
    ov.apply(entries);
    return resolve(entries);
}

std::string g4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void print_summary(const SimulateResult& r) {
    const auto& s = r.summary;
    std::cout << "v_z  " << g4(s.v_z_in) << " -> " << g4(s.v_z_out) << " m/s (ratio " << g4(s.velocity_ratio())
              << ")\n"
              << "f_rot " << g4(s.f_rot_in) << " -> " << g4(s.f_rot_out) << " Hz (ratio " << g4(s.rotation_ratio())
              << ")\n"
              << "channelled " << (s.channelled ? "yes" : "no") << ", antinode hops " << s.n_antinode_hops
              << ", trap frequency " << (s.trap_frequency ? g4(*s.trap_frequency) + " Hz" : "n/a") << "\n";
}

void print_estimate(const char* name, const OptionalEstimate& e, const char* unit) {
    std::cout << name << ' ';
    if (e.has_value()) {
        std::cout << g4(e.value()) << " +- " << g4(e.sigma()) << ' ' << unit << '\n';
    } else {
        std::cout << "absent (" << e.reason << ")\n";
    }
}

void print_analysis(const TraceAnalysis& a) {
    print_estimate("v_x  ", a.kinematics.v_x, "m/s");
    print_estimate("v_z  ", a.kinematics.v_z, "m/s");
    print_estimate("f_rot", a.kinematics.f_rot, "Hz");
    std::cout << "channelled " << (a.channelled ? (*a.channelled ? "yes" : "no") : "n/a") << '\n';
    print_estimate("trap ", a.trap_frequency, "Hz");
    for (const auto& w : a.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rod transit simulation and scattering-trace analysis"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string input_path;
    Overrides ov;
    std::size_t jobs = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
        cmd->add_option("--dt", ov.dt, "integration step [s]");
        cmd->add_option("--sample-rate", ov.sample_rate, "synthesis sample rate [Hz]");
        cmd->add_option("--seed", ov.seed, "seed for the optional additive noise");
    };
    auto* simulate_cmd = app.add_subcommand("simulate", "integrate a transit, write trajectory and summary");
    auto* synth_cmd = app.add_subcommand("synth", "synthesize the normalised scattering signal");
    auto* analyze_cmd = app.add_subcommand("analyze", "recover kinematics from a signal");
    auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
    auto* pipeline_cmd = app.add_subcommand("pipeline", "simulate, synth and analyze");
    for (auto* c : {simulate_cmd, synth_cmd, analyze_cmd, sweep_cmd, pipeline_cmd}) add_common(c);
    synth_cmd->add_option("--trajectory", input_path, "trajectory CSV (default <out>/trajectory.csv)");
    analyze_cmd->add_option("--signal", input_path, "signal CSV (default <out>/signal.csv)");
    sweep_cmd->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    const fs::path out(out_dir);
    try {
        if (*sweep_cmd) {
            const fs::path spec_path(config_path);
            auto spec = parse_sweep(read_file(spec_path), spec_path.parent_path());
            ov.apply(spec.base);
            const auto runs = run_sweep(spec, out, jobs);
            const auto manifest = manifest_json(runs);
            write_json(out / "manifest.json", manifest);
            std::cout << manifest["n_runs"] << " runs, " << manifest["n_failed"] << " failed; manifest "
                      << (out / "manifest.json").string() << '\n';
            return exit_ok;
        }

        const auto rc = load_config(config_path, ov);
        if (*simulate_cmd) {
            print_summary(cmd_simulate(rc, out));
        } else if (*synth_cmd) {
            const auto trace = cmd_synth(rc, input_path.empty() ? out / "trajectory.csv" : fs::path(input_path), out);
            std::cout << trace.size() << " samples at " << g4(trace.sample_rate) << " Hz\n";
        } else if (*analyze_cmd) {
            print_analysis(cmd_analyze(rc, input_path.empty() ? out / "signal.csv" : fs::path(input_path), out));
        } else if (*pipeline_cmd) {
            const auto res = cmd_pipeline(rc, out);
            print_summary(res.simulation);
            print_analysis(res.analysis);
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error";
        if (e.line() > 0) std::cerr << " at line " << e.line();
        if (!e.field().empty()) std::cerr << " (" << e.field() << ")";
        std::cerr << ": " << e.what() << '\n';
        return exit_usage;
    } catch (const CapExceededError& e) {
        std::cerr << "sweep error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}
