#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ips/ranger.hpp"

namespace ips::kinematics {

struct VelocitySample {
    double t = 0.0;
    double v_raw = 0.0;  // m/s, straight from the fitted curve's derivative
    double v = 0.0;      // m/s, after thresholding
    bool replaced = false;
};

struct PathPoint {
    double t = 0.0;
    double x = 0.0;  // metres
    double y = 0.0;
    double theta = 0.0;  // degrees, fused heading at t
};

struct VelocityResult {
    std::vector<VelocitySample> samples;
    std::vector<std::string> warnings;  // inter-segment gaps, skipped segments
};

struct ThresholdParams {
    double v_max = 3.0;     // m/s
    int median_window = 9;  // odd, >= 3
};

struct ThresholdResult {
    std::vector<VelocitySample> samples;
    std::vector<std::string> warnings;
};

// Walking speed from each fitted segment: central differences of the
// prediction on a uniform grid (one-sided at segment edges), sign-flipped so
// approaching the facing wall is positive speed. Gaps between segments are
// recorded as warnings.
VelocityResult differentiate_fit(const std::vector<ranger::SvrModel>& models, double grid_dt);

// Replaces |v_raw| > v_max with the median of in-threshold neighbours inside
// median_window (whole-list inlier median when the window has none). The
// input is treated as one segment; call per segment.
ThresholdResult threshold_velocities(const std::vector<VelocitySample>& samples,
                                     const ThresholdParams& params = {});

// Planar dead reckoning: headings (degrees at heading_times) are linearly
// interpolated onto the speed timestamps, then
//   x_{k+1} = x_k + v_k * dt_k * cos(theta_k), likewise y with sin.
std::vector<PathPoint> dead_reckon(const std::vector<double>& heading_times,
                                   const std::vector<double>& headings_deg,
                                   const std::vector<VelocitySample>& speeds,
                                   std::pair<double, double> origin = {0.0, 0.0});

}  // namespace ips::kinematics
