#pragma once

#include <cstddef>
#include <vector>

namespace ips {

/// Row-major float raster shared by the vision stages. The pipeline keeps
/// intensities normalized to [0, 1] once frames leave the loader; the
/// container itself does not care.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    /// Border-replicated access.
    float at_clamped(int x, int y) const;

    /// Bilinear sample with border replication outside [0, w-1] x [0, h-1].
    float bilinear(double x, double y) const;

    bool empty() const { return data.empty(); }
};

/// Separable Gaussian blur, border replicated. Kernel truncated at 3 sigma.
GrayImage gaussian_blur(const GrayImage& src, double sigma);

/// Keep every second pixel in both directions.
GrayImage downsample_half(const GrayImage& src);

}  // namespace ips
