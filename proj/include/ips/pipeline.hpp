#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ips/compass.hpp"
#include "ips/kinematics.hpp"
#include "ips/ranger.hpp"
#include "ips/sensorio.hpp"

namespace ips::pipeline {

struct PipelineConfig {
    // Inputs and outputs (file-based runs only).
    std::string frames_dir;
    std::string imu_path;
    std::string lidar_path;  // may stay empty with compass_only
    std::string out_dir;
    std::optional<double> fps_fallback;  // uniform frame timing when no sidecar
    bool compass_only = false;

    // Enhancement (feeds keypoint detection only).
    bool no_enhance = false;
    int enhance_block = 11;
    double enhance_offset = 2.0;

    // Keypoint detection.
    int octaves = 4;
    int scales = 3;
    double base_sigma = 1.6;
    double contrast_thresh = 0.03;
    double edge_ratio = 10.0;
    int max_keypoints = 400;

    // Optical flow.
    int lk_window = 15;
    double eig_min = 1e-4;
    int pyramid_levels = 1;

    // Compass.
    compass::CameraModel camera;
    double lambda = 0.6;
    double low_cut = 0.2;
    double k_sigma = 2.0;
    std::optional<double> fixed_high_cut;

    // Turn detection and range fitting.
    int turn_window = 15;
    double turn_thresh = 45.0;
    ranger::SvrParams svr;

    // Velocity and dead reckoning.
    double v_max = 3.0;
    int median_window = 9;
    double grid_dt = 1.0 / 30.0;

    // Optional per-frame dumps (written under out_dir).
    bool dump_keypoints = false;
    bool dump_flow = false;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunReport {
    bool ok = false;
    std::string failed_stage;  // empty on success
    std::string error;         // empty on success
    int frames = 0;
    double mean_keypoints = 0.0;
    double mean_inlier_ratio = 0.0;
    int zero_survivor_frames = 0;      // frame pairs with no surviving flow
    double zero_survivor_fraction = 0.0;
    bool degraded = false;  // at least half the frame pairs carried no flow
    int turns = 0;
    int segments = 0;
    std::vector<std::string> warnings;
    std::vector<StageTiming> timings;
    double endpoint_x = 0.0;
    double endpoint_y = 0.0;
    double final_heading = 0.0;  // degrees in [0, 360)
    double path_length = 0.0;    // metres of integrated |v|

    std::string to_json() const;
};

struct RunInputs {
    std::vector<sensorio::Frame> frames;
    std::vector<sensorio::ImuSample> imu;
    std::vector<sensorio::RangeSample> ranges;
};

struct RunOutputs {
    std::vector<compass::HeadingSample> headings;
    std::vector<ranger::TurnEvent> turns;
    ranger::Segmentation segmentation;
    std::vector<ranger::SvrModel> models;
    std::vector<kinematics::VelocitySample> velocity;
    std::vector<kinematics::PathPoint> path;
    RunReport report;
};

// In-memory pipeline: enhance -> features -> flow -> compass -> ranger ->
// kinematics. Stage errors are captured in report.failed_stage/error; the
// outputs computed before the failure remain filled.
RunOutputs run_data(const RunInputs& inputs, const PipelineConfig& config);

// File-based pipeline: loads inputs, runs, writes heading.csv, turns.csv,
// segments.csv, range_fit.csv, velocity.csv, path.csv, path.svg, compass.svg
// and report.json under config.out_dir. report.json is written even when a
// stage fails; outputs from completed stages are retained.
RunReport run(const PipelineConfig& config);

}  // namespace ips::pipeline
