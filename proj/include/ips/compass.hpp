#pragma once

#include <optional>
#include <vector>

#include "ips/flow.hpp"

namespace ips::compass {

// Pinhole horizontal geometry: rx() degrees of yaw per pixel of image motion.
struct CameraModel {
    int nx = 320;        // horizontal pixels
    double beta = 49.0;  // horizontal field of view, degrees

    double rx() const { return beta / nx; }
    bool valid() const { return nx >= 16 && beta > 0.0 && beta < 180.0; }
};

struct RejectParams {
    double low_cut = 0.2;  // pixels/frame, slower-than-this is sensor noise
    double k_sigma = 2.0;  // high cut multiplier on sigma
    std::optional<double> fixed_high_cut;  // overrides k_sigma * sigma when set
};

struct RejectionStats {
    double sigma = 0.0;     // RMS magnitude of vectors passing the low cut
    double low_cut = 0.0;   // pixels/frame
    double high_cut = 0.0;  // pixels/frame
    int total = 0;          // valid flow vectors considered
    int below_low = 0;
    int above_high = 0;
    int inliers = 0;
};

struct RejectionResult {
    double u_mean = 0.0;  // mean horizontal velocity of survivors, pixels/frame
    RejectionStats stats;
};

// Per-frame heading record as written to heading.csv.
struct HeadingSample {
    int frame = 0;
    double t = 0.0;
    double omega_c = 0.0;      // degrees/frame, camera angular velocity
    double theta_c = 0.0;      // degrees, integrated camera heading
    double theta_g = 0.0;      // degrees, gyro heading at the frame time
    double theta_fused = 0.0;  // degrees, lambda*theta_g + (1-lambda)*theta_c
    int n_inliers = 0;
};

// Foreground/noise rejection: drops invalid vectors, magnitudes below
// low_cut, then magnitudes above the high cut (k_sigma times the RMS
// magnitude of the remainder, unless a fixed cut is given). Averages the
// horizontal component of the survivors; no survivors yields zero motion.
RejectionResult reject_and_average(const std::vector<flow::FlowVector>& flows,
                                   const RejectParams& params = {});

// Horizontal image velocity (pixels/frame) to yaw rate (degrees/frame).
double angular_velocity(double u_mean, const CameraModel& cam);

// Cumulative sum with heading[0] = 0; output has one more entry than input.
// Unwrapped: not reduced mod 360.
std::vector<double> integrate_heading(const std::vector<double>& omegas);

// Elementwise convex combination lambda*theta_g + (1-lambda)*theta_c.
std::vector<double> fuse_headings(const std::vector<double>& theta_c,
                                  const std::vector<double>& theta_g, double lambda);

// Display mapping onto [0, 360).
double wrap360(double degrees);

}  // namespace ips::compass
