#include "ips/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ips/errors.hpp"

namespace ips::kinematics {

VelocityResult differentiate_fit(const std::vector<ranger::SvrModel>& models, double grid_dt) {
    if (grid_dt <= 0.0) throw ParamError("differentiate_fit: grid_dt must be positive");
    VelocityResult out;
    char buf[160];
    const ranger::SvrModel* prev_model = nullptr;
    for (const auto& model : models) {
        if (prev_model && model.start_t > prev_model->end_t + 1e-9) {
            std::snprintf(buf, sizeof(buf), "velocity gap [%.3f, %.3f] between segments",
                          prev_model->end_t, model.start_t);
            out.warnings.push_back(buf);
        }
        prev_model = &model;

        const double span = model.end_t - model.start_t;
        const size_t count = span >= 0.0
                                 ? static_cast<size_t>(std::floor(span / grid_dt + 1e-9)) + 1
                                 : 0;
        std::vector<double> ts(count);
        for (size_t i = 0; i < count; ++i) ts[i] = model.start_t + i * grid_dt;
        if (ts.size() < 2) {
            std::snprintf(buf, sizeof(buf),
                          "segment [%.3f, %.3f] shorter than grid step, skipped", model.start_t,
                          model.end_t);
            out.warnings.push_back(buf);
            continue;
        }
        std::vector<double> d(ts.size());
        for (size_t i = 0; i < ts.size(); ++i) d[i] = ranger::svr_predict(model, ts[i]);

        for (size_t i = 0; i < ts.size(); ++i) {
            double ddot;
            if (i == 0)
                ddot = (d[1] - d[0]) / grid_dt;
            else if (i + 1 == ts.size())
                ddot = (d[i] - d[i - 1]) / grid_dt;
            else
                ddot = (d[i + 1] - d[i - 1]) / (2.0 * grid_dt);
            VelocitySample s;
            s.t = ts[i];
            s.v_raw = -ddot;  // distance to the facing wall shrinks while walking
            s.v = s.v_raw;
            out.samples.push_back(s);
        }
    }
    return out;
}

namespace {

double median_of(std::vector<double> values) {
    const size_t n = values.size();
    auto mid = values.begin() + n / 2;
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

ThresholdResult threshold_velocities(const std::vector<VelocitySample>& samples,
                                     const ThresholdParams& params) {
    if (params.v_max <= 0.0) throw ParamError("threshold_velocities: v_max must be positive");
    if (params.median_window < 3 || params.median_window % 2 == 0)
        throw ParamError("threshold_velocities: median_window must be odd and >= 3");

    ThresholdResult out;
    out.samples = samples;
    const int n = static_cast<int>(samples.size());
    if (n == 0) return out;

    std::vector<double> inliers;
    for (const auto& s : samples)
        if (std::abs(s.v_raw) <= params.v_max) inliers.push_back(s.v_raw);

    if (inliers.empty()) {
        for (auto& s : out.samples) {
            s.v = 0.0;
            s.replaced = true;
        }
        out.warnings.push_back("all velocity samples exceed v_max; speeds forced to 0");
        return out;
    }

    const int half = params.median_window / 2;
    for (int i = 0; i < n; ++i) {
        auto& s = out.samples[i];
        if (std::abs(s.v_raw) <= params.v_max) {
            s.v = s.v_raw;
            continue;
        }
        std::vector<double> window;
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            if (j == i) continue;
            if (std::abs(samples[j].v_raw) <= params.v_max) window.push_back(samples[j].v_raw);
        }
        s.v = window.empty() ? median_of(inliers) : median_of(std::move(window));
        s.replaced = true;
    }
    return out;
}

std::vector<PathPoint> dead_reckon(const std::vector<double>& heading_times,
                                   const std::vector<double>& headings_deg,
                                   const std::vector<VelocitySample>& speeds,
                                   std::pair<double, double> origin) {
    if (heading_times.size() != headings_deg.size())
        throw ParamError("dead_reckon: heading times and values differ in length");
    if (speeds.empty()) return {};
    if (heading_times.empty()) throw ParamError("dead_reckon: empty heading trace");

    auto heading_at = [&](double t) {
        if (t <= heading_times.front()) return headings_deg.front();
        if (t >= heading_times.back()) return headings_deg.back();
        const auto it = std::upper_bound(heading_times.begin(), heading_times.end(), t);
        const size_t hi = static_cast<size_t>(it - heading_times.begin());
        const size_t lo = hi - 1;
        const double span = heading_times[hi] - heading_times[lo];
        const double f = span > 0.0 ? (t - heading_times[lo]) / span : 0.0;
        return headings_deg[lo] + f * (headings_deg[hi] - headings_deg[lo]);
    };

    constexpr double kDegToRad = M_PI / 180.0;
    std::vector<PathPoint> path;
    path.reserve(speeds.size());
    double x = origin.first;
    double y = origin.second;
    for (size_t k = 0; k < speeds.size(); ++k) {
        const double theta = heading_at(speeds[k].t);
        path.push_back({speeds[k].t, x, y, theta});
        if (k + 1 < speeds.size()) {
            const double dt = speeds[k + 1].t - speeds[k].t;
            x += speeds[k].v * dt * std::cos(theta * kDegToRad);
            y += speeds[k].v * dt * std::sin(theta * kDegToRad);
        }
    }
    return path;
}

}  // namespace ips::kinematics
