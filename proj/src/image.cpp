#include "ips/image.hpp"

#include <algorithm>
#include <cmath>

namespace ips {

float GrayImage::at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return data[static_cast<size_t>(y) * width + x];
}

float GrayImage::bilinear(double x, double y) const {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double v00 = at_clamped(x0, y0);
    const double v10 = at_clamped(x0 + 1, y0);
    const double v01 = at_clamped(x0, y0 + 1);
    const double v11 = at_clamped(x0 + 1, y0 + 1);
    const double top = v00 + fx * (v10 - v00);
    const double bot = v01 + fx * (v11 - v01);
    return static_cast<float>(top + fy * (bot - top));
}

namespace {

std::vector<float> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = static_cast<float>(v);
        sum += v;
    }
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& src, double sigma) {
    if (sigma <= 0.0) return src;
    const auto k = gaussian_kernel(sigma);
    const int taps = static_cast<int>(k.size());
    const int radius = taps / 2;
    const int w = src.width;
    const int h = src.height;

    // Both passes accumulate tap-by-tap into the output row so the inner loops
    // run over contiguous, independent lanes (auto-vectorizable without
    // reassociating the per-pixel sum: taps are still added in ascending
    // order, starting from zero).
    GrayImage tmp(w, h);
    // horizontal pass
    for (int y = 0; y < h; ++y) {
        const float* row = &src.data[static_cast<size_t>(y) * w];
        float* out = &tmp.data[static_cast<size_t>(y) * w];
        std::fill(out, out + w, 0.0f);
        for (int t = 0; t < taps; ++t) {
            const int off = t - radius;
            const float kv = k[t];
            // Outputs whose sample x+off falls outside [0, w-1] use the
            // border-replicated edge value.
            const int x_lo = std::clamp(-off, 0, w);
            const int x_hi = std::clamp(w - off, x_lo, w);
            const float left = kv * row[0];
            for (int x = 0; x < x_lo; ++x) out[x] += left;
            const float* p = row + off;
            for (int x = x_lo; x < x_hi; ++x) out[x] += kv * p[x];
            const float right = kv * row[w - 1];
            for (int x = x_hi; x < w; ++x) out[x] += right;
        }
    }
    GrayImage dst(w, h);
    // vertical pass
    for (int y = 0; y < h; ++y) {
        float* out = &dst.data[static_cast<size_t>(y) * w];
        std::fill(out, out + w, 0.0f);
        for (int t = 0; t < taps; ++t) {
            const int yi = std::clamp(y + t - radius, 0, h - 1);
            const float kv = k[t];
            const float* row = &tmp.data[static_cast<size_t>(yi) * w];
            for (int x = 0; x < w; ++x) out[x] += kv * row[x];
        }
    }
    return dst;
}

GrayImage downsample_half(const GrayImage& src) {
    GrayImage dst(src.width / 2, src.height / 2);
    for (int y = 0; y < dst.height; ++y)
        for (int x = 0; x < dst.width; ++x)
            dst.at(x, y) = src.at(2 * x, 2 * y);
    return dst;
}

}  // namespace ips
