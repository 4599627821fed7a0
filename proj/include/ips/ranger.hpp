#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ips/errors.hpp"
#include "ips/sensorio.hpp"

namespace ips::ranger {

struct TurnEvent {
    double t = 0.0;              // seconds
    int frame = 0;               // index into the heading trace
    double heading_change = 0.0; // degrees across the detection window
};

struct TurnParams {
    int kernel_halfwidth = 15;  // W, frames; kernel spans [-W, W], slope w = W/4
    double turn_thresh = 45.0;  // degrees
};

// One straight leg of LIDAR data between consecutive turns.
struct RangeSegment {
    double start_t = 0.0;
    double end_t = 0.0;
    std::vector<sensorio::RangeSample> samples;
    double init_distance = 0.0;  // least-squares d0
    double init_velocity = 0.0;  // least-squares v0 (m/s, d-dot)
    double accel_bar = 0.0;      // mean forward acceleration term used in the trend
};

struct Segmentation {
    std::vector<RangeSegment> segments;
    std::vector<std::string> warnings;
};

struct InitConditions {
    double d0 = 0.0;
    double v0 = 0.0;
    double accel_bar = 0.0;
};

struct SvrParams {
    double c = 10.0;
    double epsilon = 0.05;  // metres, insensitive tube
    double delta = 0.5;     // metres, quadratic-to-linear knee
    std::optional<double> gamma;  // kernel 1/(2*(duration/8)^2) when unset
    int max_iter = 200;
    double tol = 1e-6;
    int max_train_points = 400;  // training set decimation cap
};

// Gaussian-kernel regressor over a segment, trained on residuals about the
// quadratic initial-conditions trend (re-added at prediction).
struct SvrModel {
    double start_t = 0.0;
    double end_t = 0.0;
    double d0 = 0.0;
    double v0 = 0.0;
    double accel_bar = 0.0;
    std::vector<double> train_t;
    std::vector<double> alpha;
    double gamma = 0.0;
    double bias = 0.0;
    double c = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    double domain_pad = 0.0;  // one mean sample interval

    double trend(double t) const {
        const double tau = t - start_t;
        return d0 + v0 * tau + 0.5 * accel_bar * tau * tau;
    }
};

// Non-convergence report: carries the last iterate and its residual norm.
struct SvrConvergenceError : FitError {
    SvrConvergenceError(const std::string& msg, SvrModel last_model, double residual)
        : FitError(msg), last(std::move(last_model)), residual_norm(residual) {}
    SvrModel last;
    double residual_norm = 0.0;
};

// Convolves the heading trace with an antisymmetric sigmoid step kernel
// (normalized so an ideal unit step responds with 1) and reports isolated
// |response| peaks above turn_thresh, separated by at least 2W frames.
std::vector<TurnEvent> detect_turns(const std::vector<double>& headings,
                                    const std::vector<double>& times,
                                    const TurnParams& params = {});

// Splits the range stream at turn times. Fragments shorter than 4 samples
// merge into their predecessor, or are dropped at sequence boundaries.
Segmentation segment_ranges(const std::vector<sensorio::RangeSample>& ranges,
                            const std::vector<TurnEvent>& turns);

// Ordinary least squares of d(t) = d0 + v0*tau + 0.5*accel_bar*tau^2 with
// accel_bar held fixed (tau measured from segment start).
InitConditions init_conditions(const RangeSegment& segment, double accel_bar);

// Same, with accel_bar taken as minus the mean forward (x-axis) acceleration
// over the segment's time span; zero when no IMU samples fall inside.
InitConditions init_conditions(const RangeSegment& segment,
                               const std::vector<sensorio::ImuSample>& imu);

// Robust epsilon-Huber SVR fit via iteratively reweighted least squares.
SvrModel svr_fit(const RangeSegment& segment, const SvrParams& params = {});

// Trend + kernel expansion at t; t must lie within the segment span padded
// by one mean sample interval on each side.
double svr_predict(const SvrModel& model, double t);

}  // namespace ips::ranger
