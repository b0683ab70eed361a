/**
 * @file commands.hpp
 * @brief simulate -> synth -> analyze stages writing artifacts into an output directory.
 *
 * Layout of an output directory:
 *   config.cfg          canonical configuration (hashed for provenance)
 *   trajectory.csv      t,z,z_dot,phi,phi_dot,envelope
 *   summary.json        transit summary
 *   signal.csv/.json    t,s_n plus sidecar
 *   kinematics.json     estimates recovered from the signal
 *   reconstruction.csv  t,z
 *   rotation_rate.csv   t,f_rot
 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nanorotor/needle_scattering.hpp"
#include "nanorotor/rotor_dynamics.hpp"
#include "nanorotor/simctl/config.hpp"
#include "nanorotor/simctl/io.hpp"
#include "nanorotor/trace_analysis.hpp"

namespace nanorotor::simctl {

struct SimulateResult {
    TransitSummary summary;
    ChannellingResult channelling;
};

inline SimulateResult cmd_simulate(const RunConfig& rc, const fs::path& out_dir) {
    const auto traj = simulate(rc.simulation);
    SimulateResult res;
    res.channelling = classify_channelling(traj);
    res.summary = transit_summary(traj);
    write_file(out_dir / "config.cfg", serialize(rc));
    write_trajectory_csv(out_dir / "trajectory.csv", traj);
    write_json(out_dir / "summary.json", summary_json(res.summary, res.channelling, rc));
    return res;
}

inline SignalTrace cmd_synth(const RunConfig& rc, const fs::path& trajectory_csv, const fs::path& out_dir) {
    const auto traj = read_trajectory_csv(trajectory_csv, rc.simulation);
    auto trace = synthesize_signal(traj, rc.sample_rate, rc.y_offset);
    if (rc.noise > 0.0) trace = normalize_signal(add_noise(std::move(trace), rc.noise, rc.seed));
    write_signal(out_dir / "signal.csv", trace, rc);
    return trace;
}

inline TraceAnalysis cmd_analyze(const RunConfig& rc, const fs::path& signal_csv, const fs::path& out_dir) {
    const auto trace = read_signal(signal_csv);
    AnalysisOptions opt;
    opt.min_prominence = rc.min_prominence;
    const auto analysis = analyze_trace(trace, rc.simulation.cavity, opt);
    write_json(out_dir / "kinematics.json", analysis_json(analysis, rc));
    write_reconstruction_csv(out_dir / "reconstruction.csv",
                             analysis.reconstruction ? *analysis.reconstruction : AxialReconstruction{});
    write_rate_csv(out_dir / "rotation_rate.csv",
                   analysis.rotation_rate ? *analysis.rotation_rate : RotationRateSeries{});
    return analysis;
}

struct PipelineResult {
    SimulateResult simulation;
    TraceAnalysis analysis;
};

inline PipelineResult cmd_pipeline(const RunConfig& rc, const fs::path& out_dir) {
    PipelineResult res;
    res.simulation = cmd_simulate(rc, out_dir);
    cmd_synth(rc, out_dir / "trajectory.csv", out_dir);
    res.analysis = cmd_analyze(rc, out_dir / "signal.csv", out_dir);
    return res;
}

}  // namespace nanorotor::simctl
