#pragma once

#include <vector>

#include "ips/image.hpp"

namespace ips::features {

/// Gaussian pyramid with difference-of-Gaussians stacks. Octave o level s has
/// effective scale base_sigma * 2^(o + s / scales_per_octave) in input pixels.
struct ScaleSpace {
    int octaves = 0;
    int scales_per_octave = 0;
    double base_sigma = 0.0;
    int base_width = 0;
    int base_height = 0;
    /// scales_per_octave + 3 Gaussian levels per octave.
    std::vector<std::vector<GrayImage>> gauss;
    /// scales_per_octave + 2 adjacent differences per octave.
    std::vector<std::vector<GrayImage>> dog;

    /// Blur of level s within an octave, in that octave's pixel units.
    double level_sigma(int s) const;
    /// Blur of octave o level s in full-resolution pixel units.
    double absolute_sigma(int octave, int s) const;
};

/// Scale-space feature in full-resolution coordinates.
struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    int octave = 0;
    int scale = 0;
    double response = 0.0;
};

ScaleSpace build_scale_space(const GrayImage& img, int octaves = 4, int scales_per_octave = 3,
                             double base_sigma = 1.6);

/// 3x3x3 DoG extrema with quadratic sub-pixel refinement, contrast and edge
/// rejection, capped at max_keypoints by descending |response|.
std::vector<Keypoint> detect_keypoints(const ScaleSpace& space, double contrast_thresh = 0.03,
                                       double edge_ratio = 10.0, int max_keypoints = 400);

}  // namespace ips::features
