#include "ips/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "ips/errors.hpp"
#include "json.hpp"

namespace ips::synth {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kBobCyclesPerMetre = 1.45;  // gait bob frequency along the walk

// Seeded generator with an explicit Box-Muller normal so that output is
// bit-stable across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return (gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

sensorio::Frame render_viewport(const GrayImage& texture, double ox, double oy, int width,
                                int height, double pixel_sigma, Rng& rng) {
    sensorio::Frame frame;
    frame.width = width;
    frame.height = height;
    frame.pixels.resize(static_cast<size_t>(width) * height);
    size_t k = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x, ++k) {
            double v = texture.bilinear(ox + x, oy + y);
            if (pixel_sigma > 0.0) v += rng.normal(0.0, pixel_sigma);
            frame.pixels[k] = quantize(v);
        }
    }
    return frame;
}

}  // namespace

NoiseSpec calibrated_noise() {
    NoiseSpec n;
    n.pixel_sigma = 2.0;
    n.gyro_bias = 0.1;
    n.gyro_sigma = 0.5;
    n.lidar_sigma = 0.05;
    n.outlier_rate = 0.05;
    return n;
}

GrayImage make_texture(std::uint64_t seed, int width, int height, double amplitude_scale,
                       double cell_px) {
    if (width < 16 || height < 16) throw ParamError("make_texture: size must be >= 16 px");
    if (cell_px < 4.0) throw ParamError("make_texture: cell_px must be >= 4");
    if (amplitude_scale < 0.0) throw ParamError("make_texture: amplitude_scale must be >= 0");

    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    GrayImage img(width, height);

    // Three octaves of bilinear value noise: the coarse one defines the blob
    // structure, the fine ones keep gradient energy high enough everywhere
    // for flow windows to stay well-conditioned.
    double cell = cell_px;
    for (const double weight : {1.0, 0.6, 0.4}) {
        const int gw = static_cast<int>(std::ceil(width / cell)) + 2;
        const int gh = static_cast<int>(std::ceil(height / cell)) + 2;
        std::vector<double> lattice(static_cast<size_t>(gw) * gh);
        for (double& v : lattice) v = rng.normal();

        for (int y = 0; y < height; ++y) {
            const double gy = y / cell;
            const int y0 = static_cast<int>(gy);
            const double fy = gy - y0;
            for (int x = 0; x < width; ++x) {
                const double gx = x / cell;
                const int x0 = static_cast<int>(gx);
                const double fx = gx - x0;
                const double v00 = lattice[static_cast<size_t>(y0) * gw + x0];
                const double v01 = lattice[static_cast<size_t>(y0) * gw + x0 + 1];
                const double v10 = lattice[static_cast<size_t>(y0 + 1) * gw + x0];
                const double v11 = lattice[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
                img.at(x, y) += static_cast<float>(
                    weight * ((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                              fy * ((1 - fx) * v10 + fx * v11)));
            }
        }
        if (cell / 2.0 < 4.0) break;  // finer octaves would alias
        cell /= 2.0;
    }
    img = gaussian_blur(img, 1.0);

    double mean = 0.0;
    for (float v : img.data) mean += v;
    mean /= img.data.size();
    double var = 0.0;
    for (float v : img.data) var += (v - mean) * (v - mean);
    const double stdev = std::sqrt(var / img.data.size());
    const double gain = stdev > 1e-12 ? 45.0 * amplitude_scale / stdev : 0.0;
    for (float& v : img.data)
        v = static_cast<float>(std::clamp(128.0 + (v - mean) * gain, 0.0, 255.0));
    return img;
}

PanData gen_pan(std::uint64_t texture_seed, double total_rotation_deg, int frames,
                const compass::CameraModel& cam, const PanOptions& opts) {
    if (frames < 2) throw ParamError("gen_pan: need at least 2 frames");
    if (!cam.valid()) throw ParamError("gen_pan: invalid camera model");
    if (opts.height < 16) throw ParamError("gen_pan: height must be >= 16");
    if (opts.fps <= 0.0) throw ParamError("gen_pan: fps must be positive");

    const double total_px = total_rotation_deg / cam.rx();
    const double px_per_frame = total_px / frames;
    if (std::abs(px_per_frame) > 4.0) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "gen_pan: per-frame shift %.3f px exceeds the 4 px capture range; "
                      "raise the frame count",
                      px_per_frame);
        throw ParamError(buf);
    }

    const double margin = 8.0;
    const int tex_w =
        static_cast<int>(std::ceil(cam.nx + std::abs(total_px) + 2.0 * margin)) + 1;
    const GrayImage texture =
        make_texture(texture_seed, tex_w, opts.height, opts.amplitude_scale);

    Rng noise_rng(texture_seed * 1000003ULL + 17ULL);
    PanData out;
    out.px_per_frame = px_per_frame;
    out.frames.reserve(frames);
    out.truth_heading.reserve(frames);
    const double o0 = margin + std::max(0.0, total_px);
    for (int k = 0; k < frames; ++k) {
        // Positive rotation slides the viewport left over the texture, so
        // scene content moves right (positive u) in the image.
        const double ox = o0 - k * px_per_frame;
        sensorio::Frame frame = render_viewport(texture, ox, 0.0, cam.nx, opts.height,
                                                opts.pixel_noise_sigma, noise_rng);
        frame.index = k;
        frame.t = k / opts.fps;
        out.frames.push_back(std::move(frame));
        out.truth_heading.push_back(k * total_rotation_deg / frames);
    }
    return out;
}

namespace {

// Piecewise-constant-speed corridor walk timeline.
struct LegInfo {
    double heading = 0.0;  // degrees, unwrapped
    double length = 0.0;   // metres
    double t_start = 0.0;  // leg begins (walking)
    double t_end = 0.0;    // leg ends (corner reached)
    std::pair<double, double> p_start;
    std::pair<double, double> dir;
};

struct TurnInfo {
    double t_start = 0.0;
    double t_end = 0.0;
    double heading_from = 0.0;
    double rate = 0.0;  // degrees/second, signed
};

struct Timeline {
    std::vector<LegInfo> legs;
    std::vector<TurnInfo> turns;  // turns[i] follows legs[i]
    double t_end = 0.0;
    double total_length = 0.0;

    // heading (deg), position (m), walked distance (m), facing-wall distance
    // (m), yaw rate (deg/s) at time t.
    void state(double t, double standoff, double& heading, double& px, double& py,
               double& walked, double& wall, double& rate) const {
        double walked_before = 0.0;
        for (size_t i = 0; i < legs.size(); ++i) {
            const LegInfo& leg = legs[i];
            if (t <= leg.t_end || i + 1 == legs.size()) {
                if (t < leg.t_start && i > 0) {  // inside turn i-1
                    const TurnInfo& turn = turns[i - 1];
                    const double dt = std::clamp(t - turn.t_start, 0.0,
                                                 turn.t_end - turn.t_start);
                    heading = turn.heading_from + turn.rate * dt;
                    px = leg.p_start.first;
                    py = leg.p_start.second;
                    walked = walked_before;
                    rate = turn.rate;
                    const double mid = 0.5 * (turn.t_start + turn.t_end);
                    wall = t < mid ? standoff : leg.length + standoff;
                    return;
                }
                const double s = std::clamp((t - leg.t_start), 0.0,
                                            leg.t_end - leg.t_start);
                const double vel = leg.t_end > leg.t_start
                                       ? leg.length / (leg.t_end - leg.t_start)
                                       : 0.0;
                const double along = vel * s;
                heading = leg.heading;
                px = leg.p_start.first + leg.dir.first * along;
                py = leg.p_start.second + leg.dir.second * along;
                walked = walked_before + along;
                wall = leg.length - along + standoff;
                rate = 0.0;
                return;
            }
            walked_before += leg.length;
        }
        heading = px = py = walked = wall = rate = 0.0;  // unreachable for t in range
    }
};

Timeline build_timeline(const Scenario& sc) {
    const auto& wp = sc.waypoints;
    if (wp.size() < 2) throw ParamError("gen_walk: need at least 2 waypoints");
    if (sc.speed <= 0.0) throw ParamError("gen_walk: speed must be positive");
    if (sc.fps <= 0.0) throw ParamError("gen_walk: fps must be positive");
    if (sc.turn_rate_dps <= 0.0) throw ParamError("gen_walk: turn_rate_dps must be positive");
    if (sc.lidar_rate <= 0.0) throw ParamError("gen_walk: lidar_rate must be positive");
    if (sc.noise.pixel_sigma < 0 || sc.noise.gyro_sigma < 0 || sc.noise.lidar_sigma < 0 ||
        sc.noise.outlier_rate < 0 || sc.noise.outlier_rate > 1)
        throw ParamError("gen_walk: noise parameters out of range");

    // Canonical frame: rotate about the first waypoint so leg 0 runs along
    // heading 0, translate the first waypoint to the origin.
    const double dx0 = wp[1].first - wp[0].first;
    const double dy0 = wp[1].second - wp[0].second;
    const double rot = -std::atan2(dy0, dx0);
    const double cr = std::cos(rot), sr = std::sin(rot);
    std::vector<std::pair<double, double>> pts(wp.size());
    for (size_t i = 0; i < wp.size(); ++i) {
        const double x = wp[i].first - wp[0].first;
        const double y = wp[i].second - wp[0].second;
        pts[i] = {cr * x - sr * y, sr * x + cr * y};
    }

    Timeline tl;
    double heading_acc = 0.0;
    double t = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const double dx = pts[i + 1].first - pts[i].first;
        const double dy = pts[i + 1].second - pts[i].second;
        const double len = std::hypot(dx, dy);
        if (len < 1.0) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "gen_walk: leg %zu is %.3f m; legs must be >= 1 m",
                          i, len);
            throw ParamError(buf);
        }
        const double raw_heading = std::atan2(dy, dx) / kDegToRad;
        if (i == 0) {
            heading_acc = 0.0;  // canonical frame guarantees this
        } else {
            double delta = raw_heading - std::fmod(heading_acc, 360.0);
            while (delta > 180.0) delta -= 360.0;
            while (delta <= -180.0) delta += 360.0;
            if (std::abs(delta) < 1e-9)
                throw ParamError("gen_walk: consecutive legs share a heading; merge them");
            TurnInfo turn;
            turn.t_start = t;
            turn.t_end = t + std::abs(delta) / sc.turn_rate_dps;
            turn.heading_from = heading_acc;
            turn.rate = delta >= 0 ? sc.turn_rate_dps : -sc.turn_rate_dps;
            tl.turns.push_back(turn);
            t = turn.t_end;
            heading_acc += delta;
        }
        LegInfo leg;
        leg.heading = heading_acc;
        leg.length = len;
        leg.t_start = t;
        leg.t_end = t + len / sc.speed;
        leg.p_start = pts[i];
        leg.dir = {dx / len, dy / len};
        tl.legs.push_back(leg);
        t = leg.t_end;
        tl.total_length += len;
    }
    tl.t_end = t;
    return tl;
}

}  // namespace

WalkData gen_walk(const Scenario& scenario) {
    if (!scenario.camera.valid()) throw ParamError("gen_walk: invalid camera model");
    if (scenario.frame_height < 16) throw ParamError("gen_walk: frame_height must be >= 16");
    const Timeline tl = build_timeline(scenario);
    const double standoff = scenario.wall_standoff;

    WalkData out;
    out.scenario = scenario;
    out.path_length = tl.total_length;

    // Heading range determines how wide the shared texture must be.
    double h_min = 0.0, h_max = 0.0;
    for (const auto& leg : tl.legs) {
        h_min = std::min(h_min, leg.heading);
        h_max = std::max(h_max, leg.heading);
    }
    const double rx = scenario.camera.rx();
    const double margin = 8.0;
    const double bob = std::max(0.0, scenario.bob_amplitude_px);
    const int tex_w = static_cast<int>(std::ceil(scenario.camera.nx + (h_max - h_min) / rx +
                                                 2.0 * margin)) + 1;
    const int tex_h = static_cast<int>(std::ceil(scenario.frame_height + 2.0 * bob +
                                                 2.0 * margin)) + 1;
    const GrayImage texture = make_texture(scenario.seed, tex_w, tex_h, 1.0,
                                           scenario.texture_cell_px);
    const double o_base = margin + h_max / rx;  // viewport left edge at heading h_max

    Rng pixel_rng(scenario.seed * 2654435761ULL + 1ULL);
    Rng imu_rng(scenario.seed * 40503ULL + 2ULL);
    Rng lidar_rng(scenario.seed * 69069ULL + 3ULL);

    // Frames and ground truth at fps.
    const int n_frames = static_cast<int>(std::floor(tl.t_end * scenario.fps)) + 1;
    out.frames.reserve(n_frames);
    out.truth.reserve(n_frames);
    double heading, px, py, walked, wall, rate;
    for (int k = 0; k < n_frames; ++k) {
        const double t = k / scenario.fps;
        tl.state(t, standoff, heading, px, py, walked, wall, rate);
        const double ox = o_base - heading / rx;
        const double oy = margin + bob +
                          bob * std::sin(2.0 * M_PI * kBobCyclesPerMetre * walked);
        sensorio::Frame frame = render_viewport(texture, ox, oy, scenario.camera.nx,
                                                scenario.frame_height,
                                                scenario.noise.pixel_sigma, pixel_rng);
        frame.index = k;
        frame.t = t;
        out.frames.push_back(std::move(frame));
        out.truth.push_back({t, px, py, heading});
    }

    // IMU at 100 Hz: gyro carries the truth yaw rate plus bias and noise;
    // the walker moves at constant speed, so forward acceleration is zero.
    const int n_imu = static_cast<int>(std::floor(tl.t_end * 100.0)) + 1;
    out.imu.reserve(n_imu);
    for (int j = 0; j < n_imu; ++j) {
        const double t = j / 100.0;
        tl.state(t, standoff, heading, px, py, walked, wall, rate);
        sensorio::ImuSample s;
        s.t = t;
        s.gyro_z = rate + scenario.noise.gyro_bias +
                   (scenario.noise.gyro_sigma > 0.0
                        ? imu_rng.normal(0.0, scenario.noise.gyro_sigma)
                        : 0.0);
        s.accel = {0.0, 0.0, 9.81};
        out.imu.push_back(s);
    }

    // LIDAR at the configured mean rate with +-20% timestamp jitter.
    const double mean_dt = 1.0 / scenario.lidar_rate;
    double t = 0.0;
    while (t <= tl.t_end) {
        tl.state(t, standoff, heading, px, py, walked, wall, rate);
        double d = wall;
        if (scenario.noise.lidar_sigma > 0.0) d += lidar_rng.normal(0.0, scenario.noise.lidar_sigma);
        if (scenario.noise.outlier_rate > 0.0 && lidar_rng.uniform() < scenario.noise.outlier_rate)
            d += 10.0;
        out.ranges.push_back({t, std::max(0.0, d)});
        t += mean_dt * (1.0 + lidar_rng.uniform(-0.2, 0.2));
    }

    // Echo the canonical-frame waypoints so the stored scenario matches truth.
    out.scenario.waypoints.clear();
    out.scenario.waypoints.reserve(tl.legs.size() + 1);
    out.scenario.waypoints.push_back(tl.legs.front().p_start);
    for (const auto& leg : tl.legs)
        out.scenario.waypoints.push_back({leg.p_start.first + leg.dir.first * leg.length,
                                          leg.p_start.second + leg.dir.second * leg.length});
    return out;
}

namespace {

nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["waypoints"] = nlohmann::json::array();
    for (const auto& w : s.waypoints) j["waypoints"].push_back({w.first, w.second});
    j["speed"] = s.speed;
    j["fps"] = s.fps;
    j["camera"] = {{"nx", s.camera.nx}, {"beta", s.camera.beta}};
    j["noise"] = {{"pixel_sigma", s.noise.pixel_sigma},
                  {"gyro_bias", s.noise.gyro_bias},
                  {"gyro_sigma", s.noise.gyro_sigma},
                  {"lidar_sigma", s.noise.lidar_sigma},
                  {"outlier_rate", s.noise.outlier_rate}};
    j["seed"] = s.seed;
    j["turn_rate_dps"] = s.turn_rate_dps;
    j["lidar_rate"] = s.lidar_rate;
    j["frame_height"] = s.frame_height;
    j["texture_cell_px"] = s.texture_cell_px;
    j["bob_amplitude_px"] = s.bob_amplitude_px;
    j["wall_standoff"] = s.wall_standoff;
    return j;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("scenario " + path.string() + ": " + e.what());
    }
    Scenario s;
    try {
        if (!j.contains("waypoints") || !j["waypoints"].is_array())
            throw ParseError("scenario " + path.string() + ": missing waypoints array");
        for (const auto& w : j["waypoints"])
            s.waypoints.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
        s.speed = j.value("speed", s.speed);
        s.fps = j.value("fps", s.fps);
        if (j.contains("camera")) {
            s.camera.nx = j["camera"].value("nx", s.camera.nx);
            s.camera.beta = j["camera"].value("beta", s.camera.beta);
        }
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            s.noise.pixel_sigma = n.value("pixel_sigma", s.noise.pixel_sigma);
            s.noise.gyro_bias = n.value("gyro_bias", s.noise.gyro_bias);
            s.noise.gyro_sigma = n.value("gyro_sigma", s.noise.gyro_sigma);
            s.noise.lidar_sigma = n.value("lidar_sigma", s.noise.lidar_sigma);
            s.noise.outlier_rate = n.value("outlier_rate", s.noise.outlier_rate);
        }
        s.seed = j.value("seed", s.seed);
        s.turn_rate_dps = j.value("turn_rate_dps", s.turn_rate_dps);
        s.lidar_rate = j.value("lidar_rate", s.lidar_rate);
        s.frame_height = j.value("frame_height", s.frame_height);
        s.texture_cell_px = j.value("texture_cell_px", s.texture_cell_px);
        s.bob_amplitude_px = j.value("bob_amplitude_px", s.bob_amplitude_px);
        s.wall_standoff = j.value("wall_standoff", s.wall_standoff);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("scenario " + path.string() + ": " + e.what());
    }
    return s;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream outf(path);
    if (!outf) throw IoError("cannot write scenario file: " + path.string());
    outf << scenario_to_json(scenario).dump(2) << "\n";
}

void write_walk(const WalkData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    sensorio::write_frames(data.frames, dir / "frames");
    sensorio::write_imu(data.imu, dir / "imu.csv");
    sensorio::write_ranges(data.ranges, dir / "lidar.csv");
    save_scenario(data.scenario, dir / "scenario.json");

    std::ofstream truth(dir / "truth.csv");
    if (!truth) throw IoError("cannot write " + (dir / "truth.csv").string());
    truth << "t,x,y,theta\n";
    char buf[160];
    for (const auto& p : data.truth) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", p.t, p.x, p.y, p.theta);
        truth << buf;
    }
}

void write_pan(const PanData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    sensorio::write_frames(data.frames, dir / "frames");
    std::ofstream truth(dir / "truth.csv");
    if (!truth) throw IoError("cannot write " + (dir / "truth.csv").string());
    truth << "frame,t,heading\n";
    char buf[128];
    for (size_t k = 0; k < data.frames.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", k, data.frames[k].t,
                      data.truth_heading[k]);
        truth << buf;
    }
}

}  // namespace ips::synth
