#include "ips/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ips/errors.hpp"

namespace ips::features {

double ScaleSpace::level_sigma(int s) const {
    return base_sigma * std::pow(2.0, static_cast<double>(s) / scales_per_octave);
}

double ScaleSpace::absolute_sigma(int octave, int s) const {
    return level_sigma(s) * std::pow(2.0, octave);
}

ScaleSpace build_scale_space(const GrayImage& img, int octaves, int scales_per_octave,
                             double base_sigma) {
    if (octaves < 1) throw ParamError("build_scale_space: octaves must be >= 1");
    if (scales_per_octave < 3) throw ParamError("build_scale_space: scales_per_octave must be >= 3");
    if (base_sigma <= 0.0) throw ParamError("build_scale_space: base_sigma must be positive");
    const int min_dim = std::min(img.width, img.height);
    if (min_dim < (1 << octaves) * 8)
        throw ParamError("build_scale_space: image min dimension " + std::to_string(min_dim) +
                         " too small for " + std::to_string(octaves) + " octaves (needs >= " +
                         std::to_string((1 << octaves) * 8) + ")");

    ScaleSpace space;
    space.octaves = octaves;
    space.scales_per_octave = scales_per_octave;
    space.base_sigma = base_sigma;
    space.base_width = img.width;
    space.base_height = img.height;
    space.gauss.resize(octaves);
    space.dog.resize(octaves);

    const int nlevels = scales_per_octave + 3;
    GrayImage octave_base = gaussian_blur(img, base_sigma);
    for (int o = 0; o < octaves; ++o) {
        auto& levels = space.gauss[o];
        levels.reserve(nlevels);
        levels.push_back(std::move(octave_base));
        for (int s = 1; s < nlevels; ++s) {
            const double prev = space.level_sigma(s - 1);
            const double cur = space.level_sigma(s);
            const double inc = std::sqrt(cur * cur - prev * prev);
            levels.push_back(gaussian_blur(levels[s - 1], inc));
        }
        // Level scales_per_octave carries blur 2 * base_sigma, the next
        // octave's base once halved.
        if (o + 1 < octaves) octave_base = downsample_half(levels[scales_per_octave]);

        auto& diffs = space.dog[o];
        diffs.reserve(nlevels - 1);
        for (int s = 0; s + 1 < nlevels; ++s) {
            const GrayImage& a = levels[s];
            const GrayImage& b = levels[s + 1];
            GrayImage d(a.width, a.height);
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] = b.data[i] - a.data[i];
            diffs.push_back(std::move(d));
        }
    }
    return space;
}

namespace {

struct Candidate {
    Keypoint kp;
    double abs_response;
};

// Solves the 3x3 system H * delta = -g. Returns false when H is singular.
bool solve_offset(const double h[3][3], const double g[3], double delta[3]) {
    const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                       h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                       h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    if (std::abs(det) < 1e-20) return false;
    const double inv = 1.0 / det;
    const double b[3] = {-g[0], -g[1], -g[2]};
    delta[0] = inv * (b[0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                      h[0][1] * (b[1] * h[2][2] - h[1][2] * b[2]) +
                      h[0][2] * (b[1] * h[2][1] - h[1][1] * b[2]));
    delta[1] = inv * (h[0][0] * (b[1] * h[2][2] - h[1][2] * b[2]) -
                      b[0] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                      h[0][2] * (h[1][0] * b[2] - b[1] * h[2][0]));
    delta[2] = inv * (h[0][0] * (h[1][1] * b[2] - b[1] * h[2][1]) -
                      h[0][1] * (h[1][0] * b[2] - b[1] * h[2][0]) +
                      b[0] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]));
    return true;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const ScaleSpace& space, double contrast_thresh,
                                       double edge_ratio, int max_keypoints) {
    if (max_keypoints < 1) throw ParamError("detect_keypoints: max_keypoints must be >= 1");
    if (edge_ratio <= 0.0) throw ParamError("detect_keypoints: edge_ratio must be positive");

    const double prefilter = 0.5 * contrast_thresh;
    const double edge_limit = (edge_ratio + 1.0) * (edge_ratio + 1.0) / edge_ratio;
    const int s_max = space.scales_per_octave;  // interior DoG levels are 1..s_max

    std::vector<Candidate> found;
    for (int o = 0; o < space.octaves; ++o) {
        const auto& dog = space.dog[o];
        const int w = dog[0].width;
        const int h = dog[0].height;
        const double scale_factor = std::pow(2.0, o);
        for (int s = 1; s <= s_max; ++s) {
            const GrayImage& below = dog[s - 1];
            const GrayImage& cur = dog[s];
            const GrayImage& above = dog[s + 1];
            for (int y = 1; y + 1 < h; ++y) {
                for (int x = 1; x + 1 < w; ++x) {
                    const float d = cur.at(x, y);
                    if (std::abs(d) < prefilter) continue;

                    bool is_max = true, is_min = true;
                    for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const float vb = below.at(x + dx, y + dy);
                            const float va = above.at(x + dx, y + dy);
                            const float vc = cur.at(x + dx, y + dy);
                            if (vb >= d || va >= d || (vc >= d && (dx | dy) != 0)) is_max = false;
                            if (vb <= d || va <= d || (vc <= d && (dx | dy) != 0)) is_min = false;
                            if (!is_max && !is_min) break;
                        }
                    }
                    if (!is_max && !is_min) continue;

                    // Quadratic localization; re-centers and retries when the
                    // offset leaves the sample cell.
                    int cx = x, cy = y, cs = s;
                    double delta[3] = {0, 0, 0};
                    double dc = 0.0, grad[3] = {0, 0, 0};
                    bool converged = false;
                    for (int iter = 0; iter < 5; ++iter) {
                        const GrayImage& l0 = dog[cs - 1];
                        const GrayImage& l1 = dog[cs];
                        const GrayImage& l2 = dog[cs + 1];
                        dc = l1.at(cx, cy);
                        grad[0] = 0.5 * (l1.at(cx + 1, cy) - l1.at(cx - 1, cy));
                        grad[1] = 0.5 * (l1.at(cx, cy + 1) - l1.at(cx, cy - 1));
                        grad[2] = 0.5 * (l2.at(cx, cy) - l0.at(cx, cy));
                        double hess[3][3];
                        hess[0][0] = l1.at(cx + 1, cy) - 2.0 * dc + l1.at(cx - 1, cy);
                        hess[1][1] = l1.at(cx, cy + 1) - 2.0 * dc + l1.at(cx, cy - 1);
                        hess[2][2] = l2.at(cx, cy) - 2.0 * dc + l0.at(cx, cy);
                        hess[0][1] = hess[1][0] =
                            0.25 * (l1.at(cx + 1, cy + 1) - l1.at(cx - 1, cy + 1) -
                                    l1.at(cx + 1, cy - 1) + l1.at(cx - 1, cy - 1));
                        hess[0][2] = hess[2][0] = 0.25 * (l2.at(cx + 1, cy) - l2.at(cx - 1, cy) -
                                                          l0.at(cx + 1, cy) + l0.at(cx - 1, cy));
                        hess[1][2] = hess[2][1] = 0.25 * (l2.at(cx, cy + 1) - l2.at(cx, cy - 1) -
                                                          l0.at(cx, cy + 1) + l0.at(cx, cy - 1));
                        if (!solve_offset(hess, grad, delta)) break;
                        if (std::abs(delta[0]) <= 0.5 && std::abs(delta[1]) <= 0.5 &&
                            std::abs(delta[2]) <= 0.5) {
                            converged = true;
                            break;
                        }
                        cx += static_cast<int>(std::lround(std::clamp(delta[0], -1.0, 1.0)));
                        cy += static_cast<int>(std::lround(std::clamp(delta[1], -1.0, 1.0)));
                        cs += static_cast<int>(std::lround(std::clamp(delta[2], -1.0, 1.0)));
                        if (cx < 1 || cx + 1 >= w || cy < 1 || cy + 1 >= h || cs < 1 || cs > s_max)
                            break;
                    }
                    if (!converged) continue;

                    const double response =
                        dc + 0.5 * (grad[0] * delta[0] + grad[1] * delta[1] + grad[2] * delta[2]);
                    if (std::abs(response) < contrast_thresh) continue;

                    // Edge rejection on the 2x2 spatial Hessian.
                    const GrayImage& l1 = dog[cs];
                    const double dxx = l1.at(cx + 1, cy) - 2.0 * l1.at(cx, cy) + l1.at(cx - 1, cy);
                    const double dyy = l1.at(cx, cy + 1) - 2.0 * l1.at(cx, cy) + l1.at(cx, cy - 1);
                    const double dxy = 0.25 * (l1.at(cx + 1, cy + 1) - l1.at(cx - 1, cy + 1) -
                                               l1.at(cx + 1, cy - 1) + l1.at(cx - 1, cy - 1));
                    const double tr = dxx + dyy;
                    const double det = dxx * dyy - dxy * dxy;
                    if (det <= 0.0 || tr * tr / det > edge_limit) continue;

                    Keypoint kp;
                    kp.x = (cx + delta[0]) * scale_factor;
                    kp.y = (cy + delta[1]) * scale_factor;
                    kp.octave = o;
                    kp.scale = cs;
                    kp.response = response;
                    if (kp.x < 0.0 || kp.x >= space.base_width || kp.y < 0.0 ||
                        kp.y >= space.base_height)
                        continue;
                    found.push_back({kp, std::abs(response)});
                }
            }
        }
    }

    std::stable_sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
        if (a.abs_response != b.abs_response) return a.abs_response > b.abs_response;
        if (a.kp.octave != b.kp.octave) return a.kp.octave < b.kp.octave;
        if (a.kp.y != b.kp.y) return a.kp.y < b.kp.y;
        return a.kp.x < b.kp.x;
    });
    if (static_cast<int>(found.size()) > max_keypoints) found.resize(max_keypoints);

    std::vector<Keypoint> out;
    out.reserve(found.size());
    for (const Candidate& c : found) out.push_back(c.kp);
    return out;
}

}  // namespace ips::features
