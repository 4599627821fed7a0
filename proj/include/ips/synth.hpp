#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "ips/compass.hpp"
#include "ips/image.hpp"
#include "ips/kinematics.hpp"
#include "ips/sensorio.hpp"

namespace ips::synth {

struct NoiseSpec {
    double pixel_sigma = 0.0;   // gray levels on the 0..255 scale
    double gyro_bias = 0.0;     // degrees/second, constant offset
    double gyro_sigma = 0.0;    // degrees/second, per-sample white noise
    double lidar_sigma = 0.0;   // metres
    double outlier_rate = 0.0;  // probability of a +10 m spike per lidar sample
};

// Sensor-noise preset used by the acceptance suite.
NoiseSpec calibrated_noise();

struct Scenario {
    std::vector<std::pair<double, double>> waypoints;  // metres
    double speed = 1.25;  // m/s along legs
    double fps = 30.0;
    compass::CameraModel camera;
    NoiseSpec noise;
    // Generator extensions beyond the sensor model:
    std::uint64_t seed = 1;
    double turn_rate_dps = 55.0;   // in-place rotation speed at corners
    double lidar_rate = 60.0;      // mean samples/second (timestamps jittered +-20%)
    int frame_height = 240;        // rendered frame height, pixels
    double texture_cell_px = 24.0; // feature size of the wall texture
    double bob_amplitude_px = 1.5; // vertical gait bob of the viewport
    double wall_standoff = 0.5;    // metres kept to the facing wall at each corner
};

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// Band-limited value-noise texture: smooth random field with features around
// cell_px, mid-gray mean, contrast scaled by amplitude_scale.
GrayImage make_texture(std::uint64_t seed, int width, int height,
                       double amplitude_scale = 1.0, double cell_px = 24.0);

struct PanOptions {
    double amplitude_scale = 1.0;
    double pixel_noise_sigma = 0.0;  // gray levels
    int height = 240;
    double fps = 30.0;
};

struct PanData {
    std::vector<sensorio::Frame> frames;
    std::vector<double> truth_heading;  // degrees per frame
    double px_per_frame = 0.0;          // signed viewport shift per frame
};

// Pure-rotation sequence: a wide texture viewed through a sliding
// camera-width viewport. Positive rotation produces positive horizontal flow.
PanData gen_pan(std::uint64_t texture_seed, double total_rotation_deg, int frames,
                const compass::CameraModel& cam, const PanOptions& opts = {});

struct WalkData {
    Scenario scenario;  // canonical form: first leg rotated onto heading 0
    std::vector<sensorio::Frame> frames;
    std::vector<sensorio::ImuSample> imu;
    std::vector<sensorio::RangeSample> ranges;
    std::vector<kinematics::PathPoint> truth;  // at frame timestamps
    double path_length = 0.0;                  // metres, sum of leg lengths
};

// Corridor walk: constant speed along each leg, in-place rotation at each
// corner, LIDAR ranging the facing wall (resetting to the next corridor's
// length at mid-turn), gyro with bias and noise, frames panning during turns
// with a small vertical bob while walking.
WalkData gen_walk(const Scenario& scenario);

// Writes frames/ (PGM + frames.times), imu.csv, lidar.csv, truth.csv and
// scenario.json under dir.
void write_walk(const WalkData& data, const std::filesystem::path& dir);

// Writes frames/ (PGM + frames.times) and truth.csv under dir.
void write_pan(const PanData& data, const std::filesystem::path& dir);

}  // namespace ips::synth
