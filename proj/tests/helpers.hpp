#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ips/features.hpp"
#include "ips/image.hpp"
#include "ips/synth.hpp"

namespace ips_test {

// Scratch directory under the system temp root, wiped on construction and
// destruction so reruns start clean.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("ips_test_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Viewport of width w starting at column x0.
inline ips::GrayImage crop(const ips::GrayImage& src, int x0, int w) {
    ips::GrayImage out(w, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = src.at(x0 + x, y);
    return out;
}

// n x n lattice of probe positions inset from the borders.
inline std::vector<ips::features::Keypoint> grid_points(int w, int h, int n, int inset) {
    std::vector<ips::features::Keypoint> pts;
    pts.reserve(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            ips::features::Keypoint k;
            k.x = inset + (w - 2.0 * inset) * i / (n - 1);
            k.y = inset + (h - 2.0 * inset) * j / (n - 1);
            pts.push_back(k);
        }
    return pts;
}

// Smooth random texture normalized to [0, 1] as the pipeline feeds it to the
// vision stages.
inline ips::GrayImage texture01(std::uint64_t seed, int w, int h, double cell = 24.0) {
    ips::GrayImage tex = ips::synth::make_texture(seed, w, h, 1.0, cell);
    for (float& v : tex.data) v /= 255.0f;
    return tex;
}

}  // namespace ips_test
