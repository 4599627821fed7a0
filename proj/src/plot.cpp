#include "ips/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>

#include "ips/errors.hpp"

namespace ips::plot {

namespace {

constexpr int kMaxPolylinePoints = 5000;

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// Grid step of the form {1, 2, 5} * 10^k giving roughly `target` divisions.
double nice_step(double span, int target) {
    if (span <= 0.0) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    double step;
    if (norm <= 1.5)
        step = 1.0;
    else if (norm <= 3.5)
        step = 2.0;
    else if (norm <= 7.5)
        step = 5.0;
    else
        step = 10.0;
    return step * mag;
}

template <typename Point, typename GetX, typename GetY>
std::string polyline(const std::vector<Point>& pts, GetX get_x, GetY get_y,
                     const std::string& style) {
    const size_t stride = pts.size() > kMaxPolylinePoints
                              ? (pts.size() + kMaxPolylinePoints - 1) / kMaxPolylinePoints
                              : 1;
    std::string out = "  <polyline " + style + " points=\"";
    for (size_t i = 0; i < pts.size(); i += stride)
        out += fmt("%.2f,%.2f ", get_x(pts[i]), get_y(pts[i]));
    if ((pts.size() - 1) % stride != 0)  // always keep the endpoint
        out += fmt("%.2f,%.2f ", get_x(pts.back()), get_y(pts.back()));
    out += "\"/>\n";
    return out;
}

struct Mapper {
    double x0, y0, scale;  // world -> view with equal aspect, y flipped
    double vx0, vy1;       // view box: left edge, bottom edge
    double to_vx(double wx) const { return vx0 + (wx - x0) * scale; }
    double to_vy(double wy) const { return vy1 - (wy - y0) * scale; }
};

}  // namespace

std::string render_path_svg(const std::vector<kinematics::PathPoint>& path,
                            const std::vector<kinematics::PathPoint>* truth) {
    if (path.empty()) throw ParamError("render_path_svg: empty path");

    double min_x = path[0].x, max_x = path[0].x, min_y = path[0].y, max_y = path[0].y;
    auto grow = [&](const std::vector<kinematics::PathPoint>& pts) {
        for (const auto& p : pts) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    };
    grow(path);
    if (truth) grow(*truth);

    double span_x = max_x - min_x, span_y = max_y - min_y;
    const double pad = std::max({span_x, span_y, 1.0}) * 0.08;
    min_x -= pad; max_x += pad; min_y -= pad; max_y += pad;
    span_x = max_x - min_x; span_y = max_y - min_y;

    const int width = 800, height = 600;
    const double ml = 60, mr = 20, mt = 20, mb = 42;
    const double view_w = width - ml - mr, view_h = height - mt - mb;
    const double scale = std::min(view_w / span_x, view_h / span_y);
    // Center the world box inside the view.
    const double extra_x = (view_w - span_x * scale) / 2.0;
    const double extra_y = (view_h - span_y * scale) / 2.0;
    Mapper map{min_x, min_y, scale, ml + extra_x, height - mb - extra_y};

    std::string svg;
    svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
               "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n",
               width, height, width, height);
    svg += fmt("  <rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width, height);

    // Meter gridlines.
    const double step = nice_step(std::max(span_x, span_y), 8);
    svg += "  <g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double gx = std::ceil(min_x / step) * step; gx <= max_x + 1e-9; gx += step)
        svg += fmt("    <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n",
                   map.to_vx(gx), mt, map.to_vx(gx), static_cast<double>(height - mb));
    for (double gy = std::ceil(min_y / step) * step; gy <= max_y + 1e-9; gy += step)
        svg += fmt("    <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", ml,
                   map.to_vy(gy), static_cast<double>(width - mr), map.to_vy(gy));
    svg += "  </g>\n";
    svg += "  <g fill=\"#555555\">\n";
    for (double gx = std::ceil(min_x / step) * step; gx <= max_x + 1e-9; gx += step)
        svg += fmt("    <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%g</text>\n",
                   map.to_vx(gx), static_cast<double>(height - mb + 16), gx);
    for (double gy = std::ceil(min_y / step) * step; gy <= max_y + 1e-9; gy += step)
        svg += fmt("    <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%g</text>\n", ml - 6,
                   map.to_vy(gy) + 4, gy);
    svg += "  </g>\n";
    svg += fmt("  <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" fill=\"#333333\">x "
               "(m)</text>\n",
               ml + view_w / 2, static_cast<double>(height - 8));
    svg += fmt("  <text x=\"14\" y=\"%.2f\" text-anchor=\"middle\" fill=\"#333333\" "
               "transform=\"rotate(-90 14 %.2f)\">y (m)</text>\n",
               mt + view_h / 2, mt + view_h / 2);

    if (truth && !truth->empty()) {
        svg += polyline(*truth, [&](const kinematics::PathPoint& p) { return map.to_vx(p.x); },
                        [&](const kinematics::PathPoint& p) { return map.to_vy(p.y); },
                        "fill=\"none\" stroke=\"#888888\" stroke-width=\"1.5\" "
                        "stroke-dasharray=\"6 4\"");
    }
    svg += polyline(path, [&](const kinematics::PathPoint& p) { return map.to_vx(p.x); },
                    [&](const kinematics::PathPoint& p) { return map.to_vy(p.y); },
                    "fill=\"none\" stroke=\"#1f6fd0\" stroke-width=\"2\"");

    // Start and end markers.
    svg += fmt("  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"#2a9d3a\"/>\n",
               map.to_vx(path.front().x), map.to_vy(path.front().y));
    svg += fmt("  <rect x=\"%.2f\" y=\"%.2f\" width=\"8\" height=\"8\" fill=\"#d03030\"/>\n",
               map.to_vx(path.back().x) - 4, map.to_vy(path.back().y) - 4);

    // Legend.
    const double lx = width - mr - 150, ly = mt + 10;
    svg += fmt("  <rect x=\"%.2f\" y=\"%.2f\" width=\"142\" height=\"%d\" fill=\"white\" "
               "stroke=\"#bbbbbb\"/>\n",
               lx, ly, truth ? 54 : 36);
    svg += fmt("  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#1f6fd0\" "
               "stroke-width=\"2\"/>\n",
               lx + 8, ly + 16, lx + 36, ly + 16);
    svg += fmt("  <text x=\"%.2f\" y=\"%.2f\">reconstruction</text>\n", lx + 42, ly + 20);
    if (truth) {
        svg += fmt("  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#888888\" "
                   "stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n",
                   lx + 8, ly + 34, lx + 36, ly + 34);
        svg += fmt("  <text x=\"%.2f\" y=\"%.2f\">ground truth</text>\n", lx + 42, ly + 38);
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_compass_svg(const std::vector<compass::HeadingSample>& samples) {
    if (samples.empty()) throw ParamError("render_compass_svg: no heading samples");

    const int width = 900, height = 420;
    const double ml = 64, mr = 230, mt = 24, mb = 46;
    const double view_w = width - ml - mr, view_h = height - mt - mb;

    double t0 = samples.front().t, t1 = samples.back().t;
    if (t1 <= t0) t1 = t0 + 1.0;
    double d_min = 0.0, d_max = 0.0;
    for (const auto& s : samples) {
        d_min = std::min({d_min, s.theta_c, s.theta_g, s.theta_fused});
        d_max = std::max({d_max, s.theta_c, s.theta_g, s.theta_fused});
    }
    if (d_max - d_min < 1.0) d_max = d_min + 1.0;
    const double pad = (d_max - d_min) * 0.06;
    d_min -= pad;
    d_max += pad;

    auto to_x = [&](double t) { return ml + (t - t0) / (t1 - t0) * view_w; };
    auto to_y = [&](double d) { return mt + (d_max - d) / (d_max - d_min) * view_h; };

    std::string svg;
    svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
               "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n",
               width, height, width, height);
    svg += fmt("  <rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width, height);

    const double dstep = nice_step(d_max - d_min, 6);
    const double tstep = nice_step(t1 - t0, 8);
    svg += "  <g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double g = std::ceil(d_min / dstep) * dstep; g <= d_max + 1e-9; g += dstep)
        svg += fmt("    <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", ml, to_y(g),
                   ml + view_w, to_y(g));
    for (double g = std::ceil(t0 / tstep) * tstep; g <= t1 + 1e-9; g += tstep)
        svg += fmt("    <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", to_x(g), mt,
                   to_x(g), mt + view_h);
    svg += "  </g>\n  <g fill=\"#555555\">\n";
    for (double g = std::ceil(d_min / dstep) * dstep; g <= d_max + 1e-9; g += dstep)
        svg += fmt("    <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%g</text>\n", ml - 6,
                   to_y(g) + 4, g);
    for (double g = std::ceil(t0 / tstep) * tstep; g <= t1 + 1e-9; g += tstep)
        svg += fmt("    <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%g</text>\n", to_x(g),
                   mt + view_h + 16, g);
    svg += "  </g>\n";
    svg += fmt("  <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" fill=\"#333333\">t "
               "(s)</text>\n",
               ml + view_w / 2, static_cast<double>(height - 10));
    svg += fmt("  <text x=\"16\" y=\"%.2f\" text-anchor=\"middle\" fill=\"#333333\" "
               "transform=\"rotate(-90 16 %.2f)\">heading (deg)</text>\n",
               mt + view_h / 2, mt + view_h / 2);

    svg += polyline(samples, [&](const compass::HeadingSample& s) { return to_x(s.t); },
                    [&](const compass::HeadingSample& s) { return to_y(s.theta_c); },
                    "fill=\"none\" stroke=\"#1f6fd0\" stroke-width=\"1.5\"");
    svg += polyline(samples, [&](const compass::HeadingSample& s) { return to_x(s.t); },
                    [&](const compass::HeadingSample& s) { return to_y(s.theta_g); },
                    "fill=\"none\" stroke=\"#2a9d3a\" stroke-width=\"1.5\"");
    svg += polyline(samples, [&](const compass::HeadingSample& s) { return to_x(s.t); },
                    [&](const compass::HeadingSample& s) { return to_y(s.theta_fused); },
                    "fill=\"none\" stroke=\"#d03030\" stroke-width=\"2\"");

    // Final-heading dial.
    const double cx = width - mr + 110, cy = mt + 96, r = 64;
    svg += fmt("  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"none\" "
               "stroke=\"#999999\"/>\n",
               cx, cy, r);
    const char* labels[4] = {"0", "90", "180", "270"};
    for (int q = 0; q < 4; ++q) {
        const double a = q * 90.0 * M_PI / 180.0;
        const double tx = cx + (r + 12) * std::cos(a), ty = cy - (r + 12) * std::sin(a);
        svg += fmt("    <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" "
                   "fill=\"#555555\">%s</text>\n",
                   tx, ty + 4, labels[q]);
        svg += fmt("    <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                   "stroke=\"#999999\"/>\n",
                   cx + (r - 5) * std::cos(a), cy - (r - 5) * std::sin(a), cx + r * std::cos(a),
                   cy - r * std::sin(a));
    }
    const double final_deg = compass::wrap360(samples.back().theta_fused);
    const double fa = final_deg * M_PI / 180.0;
    svg += fmt("  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#d03030\" "
               "stroke-width=\"3\"/>\n",
               cx, cy, cx + (r - 10) * std::cos(fa), cy - (r - 10) * std::sin(fa));
    svg += fmt("  <text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" fill=\"#333333\">final "
               "%.1f deg</text>\n",
               cx, cy + r + 30, final_deg);

    // Legend.
    const double lx = width - mr + 30, ly = mt + 210;
    const struct {
        const char* color;
        const char* name;
    } entries[3] = {{"#1f6fd0", "camera"}, {"#2a9d3a", "gyro"}, {"#d03030", "fused"}};
    for (int i = 0; i < 3; ++i) {
        svg += fmt("  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                   "stroke-width=\"2\"/>\n",
                   lx, ly + i * 18.0, lx + 28, ly + i * 18.0, entries[i].color);
        svg += fmt("  <text x=\"%.2f\" y=\"%.2f\">%s</text>\n", lx + 34, ly + i * 18.0 + 4,
                   entries[i].name);
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace ips::plot
