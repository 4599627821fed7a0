#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ips/errors.hpp"
#include "ips/pipeline.hpp"
#include "ips/synth.hpp"
#include "json.hpp"

namespace {

using ips::pipeline::PipelineConfig;

// Config file layer: defaults < JSON config < CLI flags. Keys mirror the
// long flag names with underscores; unknown keys are rejected to catch typos.
void apply_config_file(const std::string& path, PipelineConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ips::IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ips::ParseError("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ips::ParseError("config file must hold a JSON object: " + path);
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "fps") cfg.fps_fallback = value.get<double>();
            else if (key == "no_enhance") cfg.no_enhance = value.get<bool>();
            else if (key == "enhance_block") cfg.enhance_block = value.get<int>();
            else if (key == "enhance_offset") cfg.enhance_offset = value.get<double>();
            else if (key == "octaves") cfg.octaves = value.get<int>();
            else if (key == "scales") cfg.scales = value.get<int>();
            else if (key == "base_sigma") cfg.base_sigma = value.get<double>();
            else if (key == "contrast_thresh") cfg.contrast_thresh = value.get<double>();
            else if (key == "edge_ratio") cfg.edge_ratio = value.get<double>();
            else if (key == "max_keypoints") cfg.max_keypoints = value.get<int>();
            else if (key == "lk_window") cfg.lk_window = value.get<int>();
            else if (key == "eig_min") cfg.eig_min = value.get<double>();
            else if (key == "pyramid_levels") cfg.pyramid_levels = value.get<int>();
            else if (key == "nx") cfg.camera.nx = value.get<int>();
            else if (key == "beta") cfg.camera.beta = value.get<double>();
            else if (key == "lambda") cfg.lambda = value.get<double>();
            else if (key == "low_cut") cfg.low_cut = value.get<double>();
            else if (key == "k_sigma") cfg.k_sigma = value.get<double>();
            else if (key == "fixed_high_cut") cfg.fixed_high_cut = value.get<double>();
            else if (key == "turn_window") cfg.turn_window = value.get<int>();
            else if (key == "turn_thresh") cfg.turn_thresh = value.get<double>();
            else if (key == "svr_c") cfg.svr.c = value.get<double>();
            else if (key == "svr_eps") cfg.svr.epsilon = value.get<double>();
            else if (key == "svr_delta") cfg.svr.delta = value.get<double>();
            else if (key == "svr_gamma") cfg.svr.gamma = value.get<double>();
            else if (key == "svr_max_train") cfg.svr.max_train_points = value.get<int>();
            else if (key == "v_max") cfg.v_max = value.get<double>();
            else if (key == "median_window") cfg.median_window = value.get<int>();
            else if (key == "grid_dt") cfg.grid_dt = value.get<double>();
            else throw ips::ParseError("unknown config key '" + key + "' in " + path);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ips::ParseError("config file " + path + ": " + e.what());
    }
}

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& cfg, std::string& config_path,
                        bool with_lidar) {
    cmd->add_option("--frames", cfg.frames_dir, "directory of frame_%06d.pgm (+ frames.times)")
        ->required();
    cmd->add_option("--imu", cfg.imu_path, "IMU log: t,gx,gy,gz,ax,ay,az")->required();
    if (with_lidar) cmd->add_option("--lidar", cfg.lidar_path, "LIDAR log: t,distance_m");
    cmd->add_option("--out", cfg.out_dir, "output directory")->required();
    cmd->add_option("--config", config_path, "JSON config file (defaults < config < flags)");
    cmd->add_option("--fps", cfg.fps_fallback, "frame rate used when frames.times is absent");

    cmd->add_flag("--no-enhance", cfg.no_enhance, "detect keypoints on raw frames");
    cmd->add_option("--enhance-block", cfg.enhance_block, "adaptive threshold block size");
    cmd->add_option("--enhance-offset", cfg.enhance_offset, "adaptive threshold offset");

    cmd->add_option("--octaves", cfg.octaves, "scale-space octaves");
    cmd->add_option("--scales", cfg.scales, "scales per octave");
    cmd->add_option("--base-sigma", cfg.base_sigma, "scale-space base blur");
    cmd->add_option("--contrast-thresh", cfg.contrast_thresh, "keypoint contrast threshold");
    cmd->add_option("--edge-ratio", cfg.edge_ratio, "keypoint edge rejection ratio");
    cmd->add_option("--max-keypoints", cfg.max_keypoints, "keypoint cap per frame");

    cmd->add_option("--lk-window", cfg.lk_window, "flow window size (odd)");
    cmd->add_option("--eig-min", cfg.eig_min, "flow validity eigenvalue floor");
    cmd->add_option("--pyramid-levels", cfg.pyramid_levels, "coarse-to-fine flow levels");

    cmd->add_option("--nx", cfg.camera.nx, "horizontal resolution, pixels");
    cmd->add_option("--beta", cfg.camera.beta, "horizontal field of view, degrees");
    cmd->add_option("--lambda", cfg.lambda, "gyro weight in heading fusion [0, 1]");
    cmd->add_option("--low-cut", cfg.low_cut, "flow magnitude low cut, px/frame");
    cmd->add_option("--k-sigma", cfg.k_sigma, "high cut multiplier on sigma");
    cmd->add_option("--fixed-high-cut", cfg.fixed_high_cut, "fixed high cut, px/frame");

    cmd->add_option("--turn-window", cfg.turn_window, "turn kernel half-width, frames");
    cmd->add_option("--turn-thresh", cfg.turn_thresh, "turn threshold, degrees");
    cmd->add_option("--svr-c", cfg.svr.c, "SVR regularization C");
    cmd->add_option("--svr-eps", cfg.svr.epsilon, "SVR insensitive tube, metres");
    cmd->add_option("--svr-delta", cfg.svr.delta, "SVR quadratic-to-linear knee, metres");
    cmd->add_option("--svr-gamma", cfg.svr.gamma, "SVR kernel gamma (default from duration)");
    cmd->add_option("--svr-max-train", cfg.svr.max_train_points, "SVR training point cap");

    cmd->add_option("--v-max", cfg.v_max, "walking speed threshold, m/s");
    cmd->add_option("--median-window", cfg.median_window, "speed replacement window (odd)");
    cmd->add_option("--grid-dt", cfg.grid_dt, "velocity grid step, seconds");

    cmd->add_flag("--dump-keypoints", cfg.dump_keypoints, "write keypoints_%06d.csv per frame");
    cmd->add_flag("--dump-flow", cfg.dump_flow, "write flow_%06d.csv per frame pair");
}

int run_pipeline(const PipelineConfig& cfg) {
    try {
        const ips::pipeline::RunReport report = ips::pipeline::run(cfg);
        if (!report.ok) {
            std::fprintf(stderr, "error in stage %s: %s\n", report.failed_stage.c_str(),
                         report.error.c_str());
            std::fprintf(stderr, "report: %s/report.json\n", cfg.out_dir.c_str());
            return report.failed_stage == "sensorio" ? 1 : 2;
        }
        std::printf(
            "ok: %d frames, %d turns, %d segments, endpoint (%.2f, %.2f) m, "
            "final heading %.1f deg -> %s\n",
            report.frames, report.turns, report.segments, report.endpoint_x, report.endpoint_y,
            report.final_heading, cfg.out_dir.c_str());
        for (const std::string& w : report.warnings)
            std::fprintf(stderr, "warning: %s\n", w.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"offline visual-inertial indoor positioning reconstructor"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    std::string config_path;

    CLI::App* run_cmd = app.add_subcommand("run", "full heading + path reconstruction");
    add_pipeline_flags(run_cmd, cfg, config_path, true);
    run_cmd->add_flag("--compass-only", cfg.compass_only,
                      "stop after heading estimation (no LIDAR required)");

    CLI::App* compass_cmd =
        app.add_subcommand("compass-only", "heading reconstruction without LIDAR");
    add_pipeline_flags(compass_cmd, cfg, config_path, false);

    CLI::App* synth_cmd = app.add_subcommand("synth", "synthetic benchmark data");
    synth_cmd->require_subcommand(1);

    std::uint64_t pan_seed = 1;
    double pan_rotation = 90.0;
    int pan_frames = 300;
    std::string pan_out;
    ips::compass::CameraModel pan_cam;
    ips::synth::PanOptions pan_opts;
    CLI::App* pan_cmd = synth_cmd->add_subcommand("pan", "pure-rotation frame sequence");
    pan_cmd->add_option("--seed", pan_seed, "texture seed");
    pan_cmd->add_option("--rotation", pan_rotation, "total rotation, degrees");
    pan_cmd->add_option("--frames", pan_frames, "frame count");
    pan_cmd->add_option("--out", pan_out, "output directory")->required();
    pan_cmd->add_option("--nx", pan_cam.nx, "horizontal resolution, pixels");
    pan_cmd->add_option("--beta", pan_cam.beta, "horizontal field of view, degrees");
    pan_cmd->add_option("--height", pan_opts.height, "frame height, pixels");
    pan_cmd->add_option("--fps", pan_opts.fps, "frame rate");
    pan_cmd->add_option("--amplitude-scale", pan_opts.amplitude_scale, "texture contrast scale");
    pan_cmd->add_option("--pixel-noise", pan_opts.pixel_noise_sigma,
                        "pixel noise sigma, gray levels");

    std::string walk_scenario;
    std::string walk_out;
    std::optional<std::uint64_t> walk_seed;
    CLI::App* walk_cmd = synth_cmd->add_subcommand("walk", "corridor walk with IMU and LIDAR");
    walk_cmd->add_option("--scenario", walk_scenario, "scenario JSON file")->required();
    walk_cmd->add_option("--out", walk_out, "output directory")->required();
    walk_cmd->add_option("--seed", walk_seed, "override the scenario seed");

    // The config file must land before CLI11 writes flag values, so flags can
    // override it; find it ahead of the real parse.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            apply_config_file(config_path, cfg);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
    }

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return run_pipeline(cfg);
    if (compass_cmd->parsed()) {
        cfg.compass_only = true;
        return run_pipeline(cfg);
    }

    try {
        if (pan_cmd->parsed()) {
            const ips::synth::PanData data =
                ips::synth::gen_pan(pan_seed, pan_rotation, pan_frames, pan_cam, pan_opts);
            ips::synth::write_pan(data, pan_out);
            std::printf("wrote %zu frames (%.3f px/frame) -> %s\n", data.frames.size(),
                        data.px_per_frame, pan_out.c_str());
            return 0;
        }
        if (walk_cmd->parsed()) {
            ips::synth::Scenario scenario = ips::synth::load_scenario(walk_scenario);
            if (walk_seed) scenario.seed = *walk_seed;
            const ips::synth::WalkData data = ips::synth::gen_walk(scenario);
            ips::synth::write_walk(data, walk_out);
            std::printf("wrote %zu frames, %zu imu, %zu lidar samples (%.1f m path) -> %s\n",
                        data.frames.size(), data.imu.size(), data.ranges.size(),
                        data.path_length, walk_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
