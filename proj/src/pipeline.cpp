#include "ips/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ips/enhance.hpp"
#include "ips/errors.hpp"
#include "ips/features.hpp"
#include "ips/flow.hpp"
#include "ips/plot.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace ips::pipeline {

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    // Seconds since construction or the previous lap.
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void dump_keypoints_csv(const fs::path& dir, int frame_index,
                        const std::vector<features::Keypoint>& kps) {
    std::string text = "x,y,octave,scale,response\n";
    for (const auto& k : kps)
        text += fmt("%.9g,%.9g,%d,%d,%.9g\n", k.x, k.y, k.octave, k.scale, k.response);
    write_text(dir / fmt("keypoints_%06d.csv", frame_index), text);
}

void dump_flow_csv(const fs::path& dir, int frame_index,
                   const std::vector<flow::FlowVector>& flows) {
    std::string text = "x,y,u,v,valid\n";
    for (const auto& f : flows)
        text += fmt("%.9g,%.9g,%.9g,%.9g,%d\n", f.x, f.y, f.u, f.v, f.valid ? 1 : 0);
    write_text(dir / fmt("flow_%06d.csv", frame_index), text);
}

}  // namespace

std::string RunReport::to_json() const {
    nlohmann::json j;
    j["ok"] = ok;
    j["failed_stage"] = failed_stage;
    j["error"] = error;
    j["frames"] = frames;
    j["mean_keypoints"] = mean_keypoints;
    j["mean_inlier_ratio"] = mean_inlier_ratio;
    j["zero_survivor_frames"] = zero_survivor_frames;
    j["zero_survivor_fraction"] = zero_survivor_fraction;
    j["degraded"] = degraded;
    j["turns"] = turns;
    j["segments"] = segments;
    j["warnings"] = warnings;
    nlohmann::json t = nlohmann::json::object();
    for (const auto& entry : timings) t[entry.stage] = entry.seconds;
    j["timings"] = t;
    j["endpoint_x"] = endpoint_x;
    j["endpoint_y"] = endpoint_y;
    j["final_heading"] = final_heading;
    j["path_length"] = path_length;
    return j.dump(2) + "\n";
}

RunOutputs run_data(const RunInputs& inputs, const PipelineConfig& config) {
    RunOutputs out;
    RunReport& rep = out.report;
    rep.frames = static_cast<int>(inputs.frames.size());

    double t_enhance = 0.0, t_features = 0.0, t_flow = 0.0, t_compass = 0.0;
    double t_ranger = 0.0, t_kin = 0.0;
    std::string stage = "sensorio";
    const fs::path out_dir = config.out_dir;
    const bool dumping = !config.out_dir.empty();

    try {
        if (inputs.frames.empty()) throw ParamError("no frames to process");
        if (!config.camera.valid())
            throw ParamError(fmt("invalid camera model (nx=%d, beta=%.6g)", config.camera.nx,
                                 config.camera.beta));

        const size_t n = inputs.frames.size();
        std::vector<double> frame_times(n);
        for (size_t i = 0; i < n; ++i) frame_times[i] = inputs.frames[i].t;

        flow::LkParams lk;
        lk.window = config.lk_window;
        lk.eig_min = config.eig_min;
        lk.pyramid_levels = config.pyramid_levels;
        compass::RejectParams reject;
        reject.low_cut = config.low_cut;
        reject.k_sigma = config.k_sigma;
        reject.fixed_high_cut = config.fixed_high_cut;

        // Vision loop: keypoints come from the (optionally) enhanced frame,
        // flow runs on the raw grayscale of the same pair.
        std::vector<double> omegas(n > 0 ? n - 1 : 0, 0.0);
        std::vector<int> inlier_counts(n, 0);
        double keypoint_total = 0.0;
        double inlier_ratio_sum = 0.0;
        flow::FlowPyramid prev_pyramid;
        std::vector<features::Keypoint> prev_keypoints;
        Stopwatch watch;
        for (size_t i = 0; i < n; ++i) {
            const sensorio::Frame& frame = inputs.frames[i];
            stage = "enhance";
            watch.lap();
            GrayImage gray = sensorio::to_gray(frame);
            GrayImage detect_img =
                config.no_enhance
                    ? gray
                    : sensorio::to_gray(enhance::adaptive_threshold(frame, config.enhance_block,
                                                                    config.enhance_offset));
            t_enhance += watch.lap();

            stage = "features";
            const features::ScaleSpace space = features::build_scale_space(
                detect_img, config.octaves, config.scales, config.base_sigma);
            std::vector<features::Keypoint> keypoints = features::detect_keypoints(
                space, config.contrast_thresh, config.edge_ratio, config.max_keypoints);
            keypoint_total += static_cast<double>(keypoints.size());
            if (config.dump_keypoints && dumping)
                dump_keypoints_csv(out_dir, frame.index, keypoints);
            t_features += watch.lap();

            stage = "flow";
            flow::FlowPyramid pyramid = flow::build_flow_pyramid(gray, config.pyramid_levels);
            if (i > 0) {
                const std::vector<flow::FlowVector> flows =
                    flow::lk_at_points(prev_pyramid, pyramid, prev_keypoints, lk);
                if (config.dump_flow && dumping) dump_flow_csv(out_dir, frame.index, flows);
                t_flow += watch.lap();

                stage = "compass";
                const compass::RejectionResult res = compass::reject_and_average(flows, reject);
                omegas[i - 1] = compass::angular_velocity(res.u_mean, config.camera);
                inlier_counts[i] = res.stats.inliers;
                if (res.stats.inliers == 0) ++rep.zero_survivor_frames;
                if (res.stats.total > 0)
                    inlier_ratio_sum += static_cast<double>(res.stats.inliers) / res.stats.total;
                t_compass += watch.lap();
            } else {
                t_flow += watch.lap();
            }
            prev_pyramid = std::move(pyramid);
            prev_keypoints = std::move(keypoints);
        }
        rep.mean_keypoints = keypoint_total / static_cast<double>(n);
        const size_t pairs = n - 1;
        if (pairs > 0) {
            rep.mean_inlier_ratio = inlier_ratio_sum / static_cast<double>(pairs);
            rep.zero_survivor_fraction =
                static_cast<double>(rep.zero_survivor_frames) / static_cast<double>(pairs);
        }
        rep.degraded = pairs > 0 && rep.zero_survivor_fraction >= 0.5;

        stage = "compass";
        watch.lap();
        const std::vector<double> theta_c = compass::integrate_heading(omegas);
        const std::vector<double> theta_g =
            sensorio::sample_gyro_heading(inputs.imu, frame_times);
        const std::vector<double> fused =
            compass::fuse_headings(theta_c, theta_g, config.lambda);
        out.headings.resize(n);
        for (size_t i = 0; i < n; ++i) {
            auto& h = out.headings[i];
            h.frame = inputs.frames[i].index;
            h.t = frame_times[i];
            h.omega_c = i > 0 ? omegas[i - 1] : 0.0;
            h.theta_c = theta_c[i];
            h.theta_g = theta_g[i];
            h.theta_fused = fused[i];
            h.n_inliers = inlier_counts[i];
        }
        rep.final_heading = compass::wrap360(fused.back());
        t_compass += watch.lap();

        stage = "ranger";
        out.turns = ranger::detect_turns(
            fused, frame_times,
            ranger::TurnParams{config.turn_window, config.turn_thresh});
        rep.turns = static_cast<int>(out.turns.size());
        t_ranger += watch.lap();

        if (!config.compass_only) {
            stage = "ranger";
            if (inputs.ranges.empty()) throw ParamError("no range samples to fit");
            out.segmentation = ranger::segment_ranges(inputs.ranges, out.turns);
            rep.segments = static_cast<int>(out.segmentation.segments.size());
            for (const std::string& w : out.segmentation.warnings) rep.warnings.push_back(w);
            for (auto& segment : out.segmentation.segments) {
                const ranger::InitConditions init = ranger::init_conditions(segment, inputs.imu);
                segment.init_distance = init.d0;
                segment.init_velocity = init.v0;
                segment.accel_bar = init.accel_bar;
                try {
                    out.models.push_back(ranger::svr_fit(segment, config.svr));
                } catch (const ranger::SvrConvergenceError& e) {
                    // The last iterate is still the best available curve; keep
                    // it and say so rather than losing the whole segment.
                    rep.warnings.push_back(
                        fmt("segment [%.3f, %.3f]: %s; using last iterate", segment.start_t,
                            segment.end_t, e.what()));
                    out.models.push_back(e.last);
                }
            }
            t_ranger += watch.lap();

            stage = "kinematics";
            kinematics::VelocityResult vel =
                kinematics::differentiate_fit(out.models, config.grid_dt);
            for (const std::string& w : vel.warnings) rep.warnings.push_back(w);
            // Threshold per segment: the flat grid holds floor(span/dt)+1
            // consecutive samples per model (segments under two grid points
            // were skipped), so the slices can be recovered exactly.
            out.velocity.reserve(vel.samples.size());
            size_t cursor = 0;
            for (const auto& model : out.models) {
                const double span = model.end_t - model.start_t;
                const size_t count =
                    span >= 0.0
                        ? static_cast<size_t>(std::floor(span / config.grid_dt + 1e-9)) + 1
                        : 0;
                if (count < 2) continue;
                const size_t end = std::min(cursor + count, vel.samples.size());
                const std::vector<kinematics::VelocitySample> slice(
                    vel.samples.begin() + cursor, vel.samples.begin() + end);
                kinematics::ThresholdResult th = kinematics::threshold_velocities(
                    slice, kinematics::ThresholdParams{config.v_max, config.median_window});
                for (const std::string& w : th.warnings) rep.warnings.push_back(w);
                out.velocity.insert(out.velocity.end(), th.samples.begin(), th.samples.end());
                cursor = end;
            }
            double path_length = 0.0;
            for (size_t k = 0; k + 1 < out.velocity.size(); ++k)
                path_length += std::abs(out.velocity[k].v) *
                               (out.velocity[k + 1].t - out.velocity[k].t);
            rep.path_length = path_length;

            out.path = kinematics::dead_reckon(frame_times, fused, out.velocity);
            if (!out.path.empty()) {
                rep.endpoint_x = out.path.back().x;
                rep.endpoint_y = out.path.back().y;
            }
            t_kin += watch.lap();
        }

        rep.ok = true;
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.failed_stage = stage;
        rep.error = e.what();
    }

    rep.timings.push_back({"enhance", t_enhance});
    rep.timings.push_back({"features", t_features});
    rep.timings.push_back({"flow", t_flow});
    rep.timings.push_back({"compass", t_compass});
    rep.timings.push_back({"ranger", t_ranger});
    rep.timings.push_back({"kinematics", t_kin});
    return out;
}

namespace {

std::string heading_csv(const std::vector<compass::HeadingSample>& rows) {
    std::string text = "frame,t,omega_c,theta_c,theta_g,theta_fused,n_inliers\n";
    for (const auto& h : rows)
        text += fmt("%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", h.frame, h.t, h.omega_c, h.theta_c,
                    h.theta_g, h.theta_fused, h.n_inliers);
    return text;
}

std::string turns_csv(const std::vector<ranger::TurnEvent>& turns) {
    std::string text = "t,frame,heading_change\n";
    for (const auto& e : turns) text += fmt("%.9g,%d,%.9g\n", e.t, e.frame, e.heading_change);
    return text;
}

std::string segments_csv(const std::vector<ranger::RangeSegment>& segments) {
    std::string text = "index,start_t,end_t,n_samples,init_distance,init_velocity,accel_bar\n";
    for (size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        text += fmt("%zu,%.9g,%.9g,%zu,%.9g,%.9g,%.9g\n", i, s.start_t, s.end_t,
                    s.samples.size(), s.init_distance, s.init_velocity, s.accel_bar);
    }
    return text;
}

std::string range_fit_csv(const std::vector<ranger::RangeSegment>& segments,
                          const std::vector<ranger::SvrModel>& models) {
    std::string text = "t,raw,fitted\n";
    const size_t count = std::min(segments.size(), models.size());
    for (size_t i = 0; i < count; ++i)
        for (const auto& sample : segments[i].samples)
            text += fmt("%.9g,%.9g,%.9g\n", sample.t, sample.distance,
                        ranger::svr_predict(models[i], sample.t));
    return text;
}

std::string velocity_csv(const std::vector<kinematics::VelocitySample>& rows) {
    std::string text = "t,v_raw,v,replaced\n";
    for (const auto& s : rows)
        text += fmt("%.9g,%.9g,%.9g,%d\n", s.t, s.v_raw, s.v, s.replaced ? 1 : 0);
    return text;
}

std::string path_csv(const std::vector<kinematics::PathPoint>& rows) {
    std::string text = "t,x,y,theta\n";
    for (const auto& p : rows) text += fmt("%.9g,%.9g,%.9g,%.9g\n", p.t, p.x, p.y, p.theta);
    return text;
}

}  // namespace

RunReport run(const PipelineConfig& config) {
    if (config.out_dir.empty()) throw ParamError("run: output directory not set");
    fs::create_directories(config.out_dir);
    const fs::path out_dir = config.out_dir;

    RunOutputs out;
    RunReport& rep = out.report;
    double t_load = 0.0;
    Stopwatch watch;

    RunInputs inputs;
    bool loaded = false;
    try {
        inputs.frames = sensorio::load_frames(config.frames_dir, config.fps_fallback);
        inputs.imu = sensorio::load_imu(config.imu_path);
        if (!config.compass_only) {
            if (config.lidar_path.empty())
                throw IoError("missing lidar log: pass --lidar FILE or --compass-only");
            inputs.ranges = sensorio::load_ranges(config.lidar_path);
        }
        loaded = true;
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.failed_stage = "sensorio";
        rep.error = e.what();
    }
    t_load = watch.lap();

    if (loaded) out = run_data(inputs, config);
    rep.timings.insert(rep.timings.begin(), {"sensorio", t_load});

    // Emit whatever the completed stages produced; report.json goes last so
    // it can carry the emit timing and any write warnings.
    watch.lap();
    std::string emit_error;
    try {
        if (!out.headings.empty()) {
            write_text(out_dir / "heading.csv", heading_csv(out.headings));
            write_text(out_dir / "turns.csv", turns_csv(out.turns));
            write_text(out_dir / "compass.svg", plot::render_compass_svg(out.headings));
        }
        if (!config.compass_only) {
            if (!out.segmentation.segments.empty() || !out.segmentation.warnings.empty())
                write_text(out_dir / "segments.csv", segments_csv(out.segmentation.segments));
            if (!out.models.empty())
                write_text(out_dir / "range_fit.csv",
                           range_fit_csv(out.segmentation.segments, out.models));
            if (!out.velocity.empty())
                write_text(out_dir / "velocity.csv", velocity_csv(out.velocity));
            if (!out.path.empty()) {
                write_text(out_dir / "path.csv", path_csv(out.path));
                write_text(out_dir / "path.svg", plot::render_path_svg(out.path));
            }
        }
    } catch (const std::exception& e) {
        emit_error = e.what();
        if (rep.ok) {
            rep.ok = false;
            rep.failed_stage = "emit";
            rep.error = emit_error;
        } else {
            rep.warnings.push_back(std::string("emit failed: ") + emit_error);
        }
    }
    rep.timings.push_back({"emit", watch.lap()});

    write_text(out_dir / "report.json", rep.to_json());
    return rep;
}

}  // namespace ips::pipeline
