#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "ips/errors.hpp"
#include "ips/features.hpp"

using namespace ips;

namespace {

// Sum of isotropic Gaussian blobs on a mid-gray background.
GrayImage blob_image(int w, int h, double sigma,
                     const std::vector<std::pair<double, double>>& centers) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.data.assign(static_cast<size_t>(w) * h, 0.5f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 0.0;
            for (const auto& [cx, cy] : centers) {
                const double dx = x - cx, dy = y - cy;
                v += 0.45 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            }
            img.data[static_cast<size_t>(y) * w + x] += static_cast<float>(v);
        }
    return img;
}

double nearest_keypoint_distance(const std::vector<features::Keypoint>& kps, double cx,
                                 double cy) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& k : kps) best = std::min(best, std::hypot(k.x - cx, k.y - cy));
    return best;
}

}  // namespace

TEST(ScaleSpace, OctaveGeometry) {
    GrayImage img;
    img.width = 320;
    img.height = 240;
    img.data.assign(320 * 240, 0.5f);
    const auto space = features::build_scale_space(img, 4, 3, 1.6);
    ASSERT_EQ(space.octaves, 4);
    ASSERT_EQ(space.gauss.size(), 4u);
    ASSERT_EQ(space.dog.size(), 4u);
    const int widths[] = {320, 160, 80, 40};
    const int heights[] = {240, 120, 60, 30};
    for (int o = 0; o < 4; ++o) {
        ASSERT_EQ(space.gauss[o].size(), 6u);  // scales_per_octave + 3
        ASSERT_EQ(space.dog[o].size(), 5u);
        EXPECT_EQ(space.gauss[o][0].width, widths[o]);
        EXPECT_EQ(space.gauss[o][0].height, heights[o]);
    }
    EXPECT_NEAR(space.absolute_sigma(0, 0), 1.6, 1e-12);
    EXPECT_NEAR(space.absolute_sigma(1, 0), 3.2, 1e-12);
    // One octave doubles sigma across scales_per_octave steps.
    EXPECT_NEAR(space.absolute_sigma(0, 3), 3.2, 1e-9);
}

TEST(ScaleSpace, TooSmallImageRejected) {
    GrayImage img;
    img.width = 64;
    img.height = 64;
    img.data.assign(64 * 64, 0.5f);
    EXPECT_THROW(features::build_scale_space(img, 4, 3, 1.6), ParamError);
    EXPECT_NO_THROW(features::build_scale_space(img, 2, 3, 1.6));
}

TEST(DetectKeypoints, ConstantImageGivesNone) {
    GrayImage img;
    img.width = 160;
    img.height = 160;
    img.data.assign(160 * 160, 0.37f);
    const auto space = features::build_scale_space(img, 3, 3, 1.6);
    EXPECT_TRUE(features::detect_keypoints(space).empty());
}

TEST(DetectKeypoints, FindsIsolatedBlobs) {
    const std::vector<std::pair<double, double>> centers = {
        {40, 40}, {150, 45}, {60, 150}, {160, 155}, {100, 95}};
    const auto img = blob_image(200, 200, 2.5, centers);
    const auto space = features::build_scale_space(img);
    const auto kps = features::detect_keypoints(space);
    ASSERT_GE(kps.size(), centers.size());
    for (const auto& [cx, cy] : centers)
        EXPECT_LE(nearest_keypoint_distance(kps, cx, cy), 2.0) << cx << "," << cy;
}

TEST(DetectKeypoints, BlobScaleMatchesExtremumLevel) {
    // A blob of scale sigma_b appears as the strongest band-pass response where
    // the detector's absolute sigma matches it. Place sigma_b on the grid:
    // absolute_sigma(octave 1, level 1) = 3.2 * 2^(1/3) = 4.0317...
    const double sigma_b = 3.2 * std::pow(2.0, 1.0 / 3.0);
    const auto img = blob_image(128, 128, sigma_b, {{63.5, 63.5}});
    const auto space = features::build_scale_space(img, 3, 3, 1.6);
    double best = -1.0;
    int best_o = -1, best_s = -1;
    for (int o = 0; o < space.octaves; ++o) {
        const double scale = std::pow(2.0, o);
        for (size_t s = 0; s < space.dog[o].size(); ++s) {
            const auto& d = space.dog[o][s];
            const int cx = static_cast<int>(63.5 / scale);
            const int cy = static_cast<int>(63.5 / scale);
            const double v = std::fabs(d.at(cx, cy));
            if (v > best) {
                best = v;
                best_o = o;
                best_s = static_cast<int>(s);
            }
        }
    }
    ASSERT_GE(best_o, 0);
    // Octaves overlap in absolute scale (e.g. octave 0 level 4 == octave 1
    // level 1), so assert on the scale value, not the grid position: the
    // winning level must sit within half a level of the blob's scale.
    const double sigma_hat = space.absolute_sigma(best_o, best_s);
    EXPECT_LE(std::fabs(std::log2(sigma_hat / sigma_b)), 1.0 / 6.0)
        << "extremum at octave " << best_o << " level " << best_s;
}

TEST(DetectKeypoints, StepEdgeSuppressed) {
    GrayImage img;
    img.width = 128;
    img.height = 128;
    img.data.assign(128 * 128, 0.0f);
    for (int y = 0; y < 128; ++y)
        for (int x = 64; x < 128; ++x) img.data[static_cast<size_t>(y) * 128 + x] = 0.78f;
    const auto space = features::build_scale_space(img, 3, 3, 1.6);
    const auto kps = features::detect_keypoints(space);
    EXPECT_TRUE(kps.empty()) << kps.size() << " keypoints on a pure edge";
}

TEST(DetectKeypoints, RotationCoherent) {
    const std::vector<std::pair<double, double>> centers = {
        {40, 40}, {150, 45}, {60, 150}, {160, 155}, {100, 95}};
    const int n = 200;
    const auto img = blob_image(n, n, 2.5, centers);
    GrayImage rot;
    rot.width = n;
    rot.height = n;
    rot.data.assign(static_cast<size_t>(n) * n, 0.0f);
    // 90-degree rotation: (x, y) -> (y, n-1-x)
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            rot.data[static_cast<size_t>(n - 1 - x) * n + y] =
                img.data[static_cast<size_t>(y) * n + x];
    const auto kps = features::detect_keypoints(features::build_scale_space(rot));
    ASSERT_GE(kps.size(), centers.size());
    for (const auto& [cx, cy] : centers)
        EXPECT_LE(nearest_keypoint_distance(kps, cy, n - 1 - cx), 2.0);
}

TEST(DetectKeypoints, ContrastThresholdMonotone) {
    const auto img = ips_test::texture01(3, 200, 200);
    const auto space = features::build_scale_space(img);
    const size_t loose = features::detect_keypoints(space, 0.02, 10.0, 100000).size();
    const size_t mid = features::detect_keypoints(space, 0.04, 10.0, 100000).size();
    const size_t tight = features::detect_keypoints(space, 0.08, 10.0, 100000).size();
    EXPECT_GE(loose, mid);
    EXPECT_GE(mid, tight);
    EXPECT_GT(loose, 0u);
}

TEST(DetectKeypoints, DeterministicAndCapped) {
    const auto img = ips_test::texture01(4, 200, 200);
    const auto space = features::build_scale_space(img);
    const auto a = features::detect_keypoints(space);
    const auto b = features::detect_keypoints(space);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].x, b[i].x);
        EXPECT_EQ(a[i].y, b[i].y);
        EXPECT_EQ(a[i].response, b[i].response);
    }
    const auto capped = features::detect_keypoints(space, 0.03, 10.0, 10);
    EXPECT_LE(capped.size(), 10u);
    ASSERT_FALSE(capped.empty());
    // The cap keeps the strongest responses.
    double weakest_kept = std::numeric_limits<double>::infinity();
    for (const auto& k : capped) weakest_kept = std::min(weakest_kept, std::fabs(k.response));
    size_t stronger_total = 0;
    for (const auto& k : a)
        if (std::fabs(k.response) >= weakest_kept) ++stronger_total;
    EXPECT_GE(stronger_total, capped.size());
}

TEST(DetectKeypoints, CoordinatesInsideImage) {
    const auto img = ips_test::texture01(5, 200, 160);
    const auto space = features::build_scale_space(img);
    for (const auto& k : features::detect_keypoints(space)) {
        EXPECT_GE(k.x, 0.0);
        EXPECT_LT(k.x, 200.0);
        EXPECT_GE(k.y, 0.0);
        EXPECT_LT(k.y, 160.0);
        EXPECT_GE(k.octave, 0);
        EXPECT_LT(k.octave, space.octaves);
    }
}
