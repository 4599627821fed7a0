#pragma once

#include <optional>
#include <vector>

#include "ips/features.hpp"
#include "ips/image.hpp"

namespace ips::flow {

enum class FlowStatus { ok, singular, out_of_bounds };

// Per-keypoint pixel velocity between two consecutive frames.
struct FlowVector {
    double x = 0.0;  // source position, pixels
    double y = 0.0;
    double u = 0.0;  // horizontal velocity, pixels/frame
    double v = 0.0;  // vertical velocity, pixels/frame
    bool valid = false;
    FlowStatus status = FlowStatus::singular;
};

// Gradient rasters over a square window centred on a (sub-pixel) point.
struct GradientPatch {
    int size = 0;  // window edge length
    std::vector<float> ix, iy, it;
};

struct LkParams {
    int window = 15;        // odd, >= 5
    double eig_min = 1e-4;  // min eigenvalue of the per-pixel-averaged structure tensor
    int pyramid_levels = 1; // 1 = single level
};

// Coarse-to-fine image stack; level 0 is the original resolution.
struct FlowPyramid {
    std::vector<GrayImage> levels;
};

// Spatial gradients (central differences on prev) and temporal difference
// (next - prev), all bilinearly sampled around p. Returns nullopt when the
// window plus a one-pixel differencing margin leaves the image.
std::optional<GradientPatch> image_gradients(const GrayImage& prev, const GrayImage& next,
                                             double px, double py, int window);

// levels >= 1; each level halves resolution after a light anti-alias blur.
// Throws ParamError when the coarsest level would drop below 16 px.
FlowPyramid build_flow_pyramid(const GrayImage& img, int levels);

// Least-squares flow at each keypoint position. With pyramid_levels > 1 the
// solve runs coarse-to-fine, warping the temporal difference by the running
// estimate; every level contributes exactly one solve.
std::vector<FlowVector> lk_at_points(const FlowPyramid& prev, const FlowPyramid& next,
                                     const std::vector<features::Keypoint>& points,
                                     const LkParams& params = {});

// Convenience overload building both pyramids internally.
std::vector<FlowVector> lk_at_points(const GrayImage& prev, const GrayImage& next,
                                     const std::vector<features::Keypoint>& points,
                                     const LkParams& params = {});

}  // namespace ips::flow
