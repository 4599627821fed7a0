#include "ips/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ips/errors.hpp"

namespace ips::flow {

namespace {

// Window fits when every bilinear sample, including the +-1 px differencing
// stencil, stays strictly inside [0, dim-1].
bool window_fits(const GrayImage& img, double px, double py, int window) {
    const double half = window / 2;
    return px - half - 1.0 >= 0.0 && px + half + 1.0 <= img.width - 1.0 &&
           py - half - 1.0 >= 0.0 && py + half + 1.0 <= img.height - 1.0;
}

// Gradient patch with the temporal sample warped by (gu, gv) in `next`.
std::optional<GradientPatch> gradients_warped(const GrayImage& prev, const GrayImage& next,
                                              double px, double py, double gu, double gv,
                                              int window) {
    if (!window_fits(prev, px, py, window)) return std::nullopt;
    if (!window_fits(next, px + gu, py + gv, window)) return std::nullopt;
    const int half = window / 2;
    GradientPatch patch;
    patch.size = window;
    patch.ix.resize(static_cast<size_t>(window) * window);
    patch.iy.resize(patch.ix.size());
    patch.it.resize(patch.ix.size());
    size_t k = 0;
    for (int dy = -half; dy <= half; ++dy) {
        const double sy = py + dy;
        for (int dx = -half; dx <= half; ++dx, ++k) {
            const double sx = px + dx;
            patch.ix[k] = static_cast<float>(
                0.5 * (prev.bilinear(sx + 1.0, sy) - prev.bilinear(sx - 1.0, sy)));
            patch.iy[k] = static_cast<float>(
                0.5 * (prev.bilinear(sx, sy + 1.0) - prev.bilinear(sx, sy - 1.0)));
            patch.it[k] = static_cast<float>(next.bilinear(sx + gu, sy + gv) -
                                             prev.bilinear(sx, sy));
        }
    }
    return patch;
}

// Bilinear samples of `img` at (ox + i, oy + j) for the nx x ny integer
// offset grid. The fractional parts are shared by every sample, so the
// interpolation weights hoist out of the loop; values match
// GrayImage::bilinear exactly (same formula, same float rounding). Callers
// guarantee the grid is in bounds except possibly the +1 fetch of the last
// row/column, which border-replicates just as bilinear() would.
void sample_patch(const GrayImage& img, double ox, double oy, int nx, int ny, float* dst) {
    const int w = img.width;
    const int h = img.height;
    const int x0 = static_cast<int>(std::floor(ox));
    const int y0 = static_cast<int>(std::floor(oy));
    const double fx = ox - x0;
    const double fy = oy - y0;
    const int fast = std::clamp(w - 1 - x0, 0, nx);  // i < fast: column x0+i+1 in range
    for (int j = 0; j < ny; ++j) {
        const int yj = y0 + j;
        const float* r0 = &img.data[static_cast<size_t>(yj) * w];
        const float* r1 = &img.data[static_cast<size_t>(std::min(yj + 1, h - 1)) * w];
        float* out = dst + static_cast<size_t>(j) * nx;
        int i = 0;
        for (; i < fast; ++i) {
            const int xi = x0 + i;
            const double v00 = r0[xi];
            const double v10 = r0[xi + 1];
            const double v01 = r1[xi];
            const double v11 = r1[xi + 1];
            const double top = v00 + fx * (v10 - v00);
            const double bot = v01 + fx * (v11 - v01);
            out[i] = static_cast<float>(top + fy * (bot - top));
        }
        for (; i < nx; ++i) {
            const int xi = std::min(x0 + i, w - 1);
            const int xi1 = std::min(xi + 1, w - 1);
            const double v00 = r0[xi];
            const double v10 = r0[xi1];
            const double v01 = r1[xi];
            const double v11 = r1[xi1];
            const double top = v00 + fx * (v10 - v00);
            const double bot = v01 + fx * (v11 - v01);
            out[i] = static_cast<float>(top + fy * (bot - top));
        }
    }
}

struct LevelSolve {
    double du = 0.0, dv = 0.0;
    FlowStatus status = FlowStatus::ok;
};

LevelSolve solve_level(const GrayImage& prev, const GrayImage& next, double px, double py,
                       double gu, double gv, const LkParams& params) {
    LevelSolve out;
    const int window = params.window;
    if (!window_fits(prev, px, py, window) || !window_fits(next, px + gu, py + gv, window)) {
        out.status = FlowStatus::out_of_bounds;
        return out;
    }
    const int half = window / 2;
    const int pw = window + 2;  // prev patch carries the +-1 differencing ring

    thread_local std::vector<float> prev_patch;
    thread_local std::vector<float> next_patch;
    prev_patch.resize(static_cast<size_t>(pw) * pw);
    next_patch.resize(static_cast<size_t>(window) * window);
    sample_patch(prev, px - half - 1, py - half - 1, pw, pw, prev_patch.data());
    sample_patch(next, px + gu - half, py + gv - half, window, window, next_patch.data());

    double gxx = 0.0, gxy = 0.0, gyy = 0.0, bx = 0.0, by = 0.0;
    for (int j = 0; j < window; ++j) {
        const float* c = prev_patch.data() + static_cast<size_t>(j + 1) * pw + 1;
        const float* up = c - pw;
        const float* dn = c + pw;
        const float* nr = next_patch.data() + static_cast<size_t>(j) * window;
        for (int i = 0; i < window; ++i) {
            const double ix = static_cast<float>(
                0.5 * (static_cast<double>(c[i + 1]) - static_cast<double>(c[i - 1])));
            const double iy = static_cast<float>(
                0.5 * (static_cast<double>(dn[i]) - static_cast<double>(up[i])));
            const double it =
                static_cast<float>(static_cast<double>(nr[i]) - static_cast<double>(c[i]));
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
            bx -= ix * it;
            by -= iy * it;
        }
    }
    const double n = static_cast<double>(window) * window;
    const double tr = gxx + gyy;
    const double disc = std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy);
    const double min_eig = 0.5 * (tr - disc) / n;
    if (!(min_eig >= params.eig_min)) {
        out.status = FlowStatus::singular;
        return out;
    }
    const double det = gxx * gyy - gxy * gxy;
    out.du = (gyy * bx - gxy * by) / det;
    out.dv = (gxx * by - gxy * bx) / det;
    return out;
}

}  // namespace

std::optional<GradientPatch> image_gradients(const GrayImage& prev, const GrayImage& next,
                                             double px, double py, int window) {
    if (window < 3 || window % 2 == 0)
        throw ParamError("image_gradients: window must be odd and >= 3");
    if (prev.width != next.width || prev.height != next.height)
        throw ParamError("image_gradients: frame dimensions differ");
    return gradients_warped(prev, next, px, py, 0.0, 0.0, window);
}

FlowPyramid build_flow_pyramid(const GrayImage& img, int levels) {
    if (levels < 1) throw ParamError("build_flow_pyramid: levels must be >= 1");
    FlowPyramid pyr;
    pyr.levels.reserve(levels);
    pyr.levels.push_back(img);
    for (int l = 1; l < levels; ++l) {
        const GrayImage& cur = pyr.levels.back();
        if (std::min(cur.width, cur.height) / 2 < 16)
            throw ParamError("build_flow_pyramid: level " + std::to_string(l) +
                             " would be smaller than 16 px");
        pyr.levels.push_back(downsample_half(gaussian_blur(cur, 1.0)));
    }
    return pyr;
}

std::vector<FlowVector> lk_at_points(const FlowPyramid& prev, const FlowPyramid& next,
                                     const std::vector<features::Keypoint>& points,
                                     const LkParams& params) {
    if (params.window < 5 || params.window % 2 == 0)
        throw ParamError("lk_at_points: window must be odd and >= 5");
    if (prev.levels.empty() || next.levels.empty() ||
        prev.levels.size() != next.levels.size())
        throw ParamError("lk_at_points: pyramid level counts differ");
    if (prev.levels[0].width != next.levels[0].width ||
        prev.levels[0].height != next.levels[0].height)
        throw ParamError("lk_at_points: frame dimensions differ");
    const int nlevels = std::min<int>(params.pyramid_levels,
                                      static_cast<int>(prev.levels.size()));
    if (nlevels < 1) throw ParamError("lk_at_points: pyramid_levels must be >= 1");

    std::vector<FlowVector> out;
    out.reserve(points.size());
    for (const auto& kp : points) {
        FlowVector fv;
        fv.x = kp.x;
        fv.y = kp.y;
        double gu = 0.0, gv = 0.0;
        FlowStatus status = FlowStatus::ok;
        for (int l = nlevels - 1; l >= 0; --l) {
            const double scale = std::pow(2.0, l);
            const LevelSolve s = solve_level(prev.levels[l], next.levels[l], kp.x / scale,
                                             kp.y / scale, gu, gv, params);
            if (s.status != FlowStatus::ok) {
                status = s.status;
                break;
            }
            gu += s.du;
            gv += s.dv;
            if (l > 0) {
                gu *= 2.0;
                gv *= 2.0;
            }
        }
        fv.status = status;
        fv.valid = status == FlowStatus::ok;
        if (fv.valid) {
            fv.u = gu;
            fv.v = gv;
        }
        if (!std::isfinite(fv.u) || !std::isfinite(fv.v)) {
            fv.valid = false;
            fv.status = FlowStatus::singular;
            fv.u = fv.v = 0.0;
        }
        out.push_back(fv);
    }
    return out;
}

std::vector<FlowVector> lk_at_points(const GrayImage& prev, const GrayImage& next,
                                     const std::vector<features::Keypoint>& points,
                                     const LkParams& params) {
    FlowPyramid pp = build_flow_pyramid(prev, params.pyramid_levels);
    FlowPyramid np = build_flow_pyramid(next, params.pyramid_levels);
    return lk_at_points(pp, np, points, params);
}

}  // namespace ips::flow
