#include "ips/compass.hpp"

#include <cmath>

#include "ips/errors.hpp"

namespace ips::compass {

RejectionResult reject_and_average(const std::vector<flow::FlowVector>& flows,
                                   const RejectParams& params) {
    if (params.low_cut <= 0.0) throw ParamError("reject_and_average: low_cut must be positive");
    if (params.k_sigma <= 0.0) throw ParamError("reject_and_average: k_sigma must be positive");

    RejectionResult res;
    res.stats.low_cut = params.low_cut;

    std::vector<double> mags;
    std::vector<double> us;
    mags.reserve(flows.size());
    us.reserve(flows.size());
    for (const auto& f : flows) {
        if (!f.valid) continue;
        ++res.stats.total;
        const double mag = std::hypot(f.u, f.v);
        if (mag < params.low_cut) {
            ++res.stats.below_low;
            continue;
        }
        mags.push_back(mag);
        us.push_back(f.u);
    }
    if (mags.empty()) {
        res.stats.high_cut = params.fixed_high_cut.value_or(0.0);
        return res;
    }

    double sq = 0.0;
    for (double m : mags) sq += m * m;
    res.stats.sigma = std::sqrt(sq / mags.size());
    res.stats.high_cut = params.fixed_high_cut.value_or(params.k_sigma * res.stats.sigma);

    double u_sum = 0.0;
    int survivors = 0;
    for (size_t i = 0; i < mags.size(); ++i) {
        if (mags[i] > res.stats.high_cut) {
            ++res.stats.above_high;
            continue;
        }
        u_sum += us[i];
        ++survivors;
    }
    res.stats.inliers = survivors;
    res.u_mean = survivors > 0 ? u_sum / survivors : 0.0;
    return res;
}

double angular_velocity(double u_mean, const CameraModel& cam) {
    if (!cam.valid()) throw ParamError("angular_velocity: invalid camera model");
    return u_mean * cam.beta / cam.nx;
}

std::vector<double> integrate_heading(const std::vector<double>& omegas) {
    std::vector<double> headings;
    headings.reserve(omegas.size() + 1);
    headings.push_back(0.0);
    double acc = 0.0;
    for (double w : omegas) {
        acc += w;
        headings.push_back(acc);
    }
    return headings;
}

std::vector<double> fuse_headings(const std::vector<double>& theta_c,
                                  const std::vector<double>& theta_g, double lambda) {
    if (theta_c.size() != theta_g.size())
        throw ParamError("fuse_headings: heading lists differ in length");
    if (lambda < 0.0 || lambda > 1.0) throw ParamError("fuse_headings: lambda must be in [0, 1]");
    std::vector<double> fused(theta_c.size());
    for (size_t i = 0; i < fused.size(); ++i)
        fused[i] = lambda * theta_g[i] + (1.0 - lambda) * theta_c[i];
    return fused;
}

double wrap360(double degrees) {
    double r = std::fmod(degrees, 360.0);
    if (r < 0.0) r += 360.0;
    return r;
}

}  // namespace ips::compass
