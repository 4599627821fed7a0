#include "ips/ranger.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ips::ranger {

namespace {

std::vector<double> step_kernel(int halfwidth) {
    const double w = halfwidth / 4.0;
    std::vector<double> kernel(2 * halfwidth + 1);
    for (int i = -halfwidth; i <= halfwidth; ++i)
        kernel[i + halfwidth] = 1.0 / (1.0 + std::exp(-i / w)) - 0.5;
    // Normalize so a unit step produces a peak response of exactly 1.
    double step_gain = 0.0;
    for (int i = 0; i <= halfwidth; ++i) step_gain += kernel[i + halfwidth];
    for (double& k : kernel) k /= step_gain;
    return kernel;
}

}  // namespace

std::vector<TurnEvent> detect_turns(const std::vector<double>& headings,
                                    const std::vector<double>& times,
                                    const TurnParams& params) {
    if (params.kernel_halfwidth < 2)
        throw ParamError("detect_turns: kernel_halfwidth must be >= 2");
    if (params.turn_thresh <= 0.0) throw ParamError("detect_turns: turn_thresh must be positive");
    if (headings.size() != times.size())
        throw ParamError("detect_turns: headings and times differ in length");
    const int n = static_cast<int>(headings.size());
    if (n == 0) return {};

    const int W = params.kernel_halfwidth;
    const std::vector<double> kernel = step_kernel(W);
    std::vector<double> response(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -W; j <= W; ++j) {
            const int idx = std::clamp(i + j, 0, n - 1);  // replicate padding
            acc += kernel[j + W] * headings[idx];
        }
        response[i] = acc;
    }

    // Candidate peaks: local maxima of |response| above threshold (plateaus
    // keep their first sample).
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i) {
        const double cur = std::abs(response[i]);
        if (cur <= params.turn_thresh) continue;
        const double prev = i > 0 ? std::abs(response[i - 1]) : -1.0;
        const double next = i + 1 < n ? std::abs(response[i + 1]) : -1.0;
        if (cur >= prev && cur > next) candidates.push_back(i);
    }
    // Greedy selection by descending |response| with a 2W exclusion zone.
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        return std::abs(response[a]) > std::abs(response[b]);
    });
    std::vector<int> accepted;
    for (int c : candidates) {
        bool clear = true;
        for (int a : accepted) {
            if (std::abs(c - a) < 2 * W) {
                clear = false;
                break;
            }
        }
        if (clear) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end());

    std::vector<TurnEvent> events;
    events.reserve(accepted.size());
    for (int idx : accepted)
        events.push_back({times[idx], idx, response[idx]});
    return events;
}

Segmentation segment_ranges(const std::vector<sensorio::RangeSample>& ranges,
                            const std::vector<TurnEvent>& turns) {
    Segmentation out;
    if (ranges.empty()) return out;

    const double t_first = ranges.front().t;
    const double t_last = ranges.back().t;
    std::vector<double> bounds;
    for (const auto& turn : turns)
        if (turn.t > t_first && turn.t < t_last) bounds.push_back(turn.t);
    std::sort(bounds.begin(), bounds.end());
    bounds.push_back(t_last);

    std::vector<RangeSegment> raw;
    size_t i = 0;
    double seg_start = t_first;
    for (size_t b = 0; b < bounds.size(); ++b) {
        const bool last = b + 1 == bounds.size();
        RangeSegment seg;
        seg.start_t = seg_start;
        seg.end_t = bounds[b];
        while (i < ranges.size() &&
               (ranges[i].t < bounds[b] || (last && ranges[i].t <= bounds[b])))
            seg.samples.push_back(ranges[i++]);
        raw.push_back(std::move(seg));
        seg_start = bounds[b];
    }

    char buf[160];
    for (auto& seg : raw) {
        if (seg.samples.size() >= 4) {
            out.segments.push_back(std::move(seg));
            continue;
        }
        if (out.segments.empty()) {
            std::snprintf(buf, sizeof(buf),
                          "segment [%.3f, %.3f] with %zu samples dropped at sequence boundary",
                          seg.start_t, seg.end_t, seg.samples.size());
            out.warnings.push_back(buf);
            continue;
        }
        RangeSegment& prev = out.segments.back();
        std::snprintf(buf, sizeof(buf),
                      "segment [%.3f, %.3f] with %zu samples merged into predecessor",
                      seg.start_t, seg.end_t, seg.samples.size());
        out.warnings.push_back(buf);
        prev.end_t = seg.end_t;
        prev.samples.insert(prev.samples.end(), seg.samples.begin(), seg.samples.end());
    }
    return out;
}

InitConditions init_conditions(const RangeSegment& segment, double accel_bar) {
    const size_t n = segment.samples.size();
    if (n < 4) throw FitError("init_conditions: segment has fewer than 4 samples");

    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd target(n);
    for (size_t i = 0; i < n; ++i) {
        const double tau = segment.samples[i].t - segment.start_t;
        design(i, 0) = 1.0;
        design(i, 1) = tau;
        target(i) = segment.samples[i].distance - 0.5 * accel_bar * tau * tau;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 2)
        throw FitError("init_conditions: rank-deficient design (samples at one instant)");
    Eigen::Vector2d coef = qr.solve(target);
    return {coef(0), coef(1), accel_bar};
}

InitConditions init_conditions(const RangeSegment& segment,
                               const std::vector<sensorio::ImuSample>& imu) {
    double sum = 0.0;
    int count = 0;
    for (const auto& s : imu) {
        if (s.t < segment.start_t || s.t > segment.end_t) continue;
        sum += s.accel[0];
        ++count;
    }
    // Distance to the facing wall decelerates at the walker's forward
    // acceleration, hence the sign flip.
    const double accel_bar = count > 0 ? -sum / count : 0.0;
    return init_conditions(segment, accel_bar);
}

namespace {

// epsilon-Huber weight L'(|e|)/|e| for the IRLS quadratic surrogate.
double huber_weight(double e, double epsilon, double delta) {
    const double a = std::abs(e);
    if (a <= epsilon) return 0.0;
    if (a <= delta) return (a - epsilon) / ((delta - epsilon) * a);
    return 1.0 / a;
}

// The loss itself: zero tube, quadratic band, then linear growth (C1 at both
// joins, so the objective is smooth enough for the step search below).
double huber_loss(double e, double epsilon, double delta) {
    const double a = std::abs(e);
    if (a <= epsilon) return 0.0;
    if (a <= delta) return (a - epsilon) * (a - epsilon) / (2.0 * (delta - epsilon));
    return a - 0.5 * (delta + epsilon);
}

}  // namespace

SvrModel svr_fit(const RangeSegment& segment, const SvrParams& params) {
    const size_t n_all = segment.samples.size();
    if (n_all < 4) throw FitError("svr_fit: segment has fewer than 4 samples");
    if (params.c <= 0.0) throw ParamError("svr_fit: C must be positive");
    if (params.epsilon < 0.0) throw ParamError("svr_fit: epsilon must be >= 0");
    if (params.delta <= params.epsilon) throw ParamError("svr_fit: delta must exceed epsilon");
    if (params.gamma && *params.gamma <= 0.0) throw ParamError("svr_fit: gamma must be positive");
    if (params.max_train_points < 4)
        throw ParamError("svr_fit: max_train_points must be >= 4");

    const InitConditions init = init_conditions(segment, segment.accel_bar);

    SvrModel model;
    model.start_t = segment.start_t;
    model.end_t = segment.end_t;
    model.d0 = init.d0;
    model.v0 = init.v0;
    model.accel_bar = segment.accel_bar;
    model.c = params.c;
    model.epsilon = params.epsilon;
    model.delta = params.delta;

    const double t_first = segment.samples.front().t;
    const double t_last = segment.samples.back().t;
    model.domain_pad = n_all > 1 ? (t_last - t_first) / (n_all - 1) : 0.0;

    double duration = model.end_t - model.start_t;
    if (duration <= 0.0) duration = std::max(t_last - t_first, 1e-6);
    const double bandwidth = duration / 8.0;
    model.gamma = params.gamma.value_or(1.0 / (2.0 * bandwidth * bandwidth));

    // Uniform decimation keeps the solve tractable; prediction still covers
    // every original sample through the kernel's smoothness.
    std::vector<size_t> train_idx;
    if (n_all > static_cast<size_t>(params.max_train_points)) {
        const size_t m = params.max_train_points;
        train_idx.reserve(m);
        for (size_t j = 0; j < m; ++j)
            train_idx.push_back(j * (n_all - 1) / (m - 1));
        train_idx.erase(std::unique(train_idx.begin(), train_idx.end()), train_idx.end());
    } else {
        train_idx.resize(n_all);
        std::iota(train_idx.begin(), train_idx.end(), 0);
    }
    const int m = static_cast<int>(train_idx.size());

    model.train_t.resize(m);
    Eigen::VectorXd residual(m);
    for (int i = 0; i < m; ++i) {
        const auto& s = segment.samples[train_idx[i]];
        model.train_t[i] = s.t;
        residual(i) = s.distance - model.trend(s.t);
    }

    Eigen::MatrixXd kernel(m, m);
    for (int i = 0; i < m; ++i) {
        kernel(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            const double dt = model.train_t[i] - model.train_t[j];
            const double k = std::exp(-model.gamma * dt * dt);
            kernel(i, j) = k;
            kernel(j, i) = k;
        }
    }

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
    double bias = 0.0;
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(m);
    bool converged = false;
    Eigen::MatrixXd system(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);

    // Regularized objective; alpha^T K alpha folds into alpha . (f - b) since
    // f = K alpha + b.
    const auto objective = [&](const Eigen::VectorXd& a, double b, const Eigen::VectorXd& f) {
        double loss = 0.0;
        for (int i = 0; i < m; ++i)
            loss += huber_loss(residual(i) - f(i), params.epsilon, params.delta);
        return loss + (a.dot(f) - b * a.sum()) / (2.0 * params.c);
    };

    for (int iter = 0; iter < params.max_iter; ++iter) {
        Eigen::VectorXd weights(m);
        double weight_sum = 0.0;
        for (int i = 0; i < m; ++i) {
            weights(i) = huber_weight(residual(i) - fitted(i), params.epsilon, params.delta);
            weight_sum += weights(i);
        }
        if (weight_sum < 1e-300) {
            // Every residual sits inside the insensitive tube: the loss is
            // zero and the current iterate stays.
            converged = true;
            break;
        }

        // Stationarity of the weighted surrogate in (alpha, bias):
        //   alpha/C + W(K alpha + bias 1 - r) = 0
        //   1^T W (K alpha + bias 1 - r) = 0
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) system(i, j) = weights(i) * kernel(i, j);
            system(i, i) += 1.0 / params.c;
            system(i, m) = weights(i);
            rhs(i) = weights(i) * residual(i);
        }
        for (int j = 0; j < m; ++j) {
            double col = 0.0;
            for (int i = 0; i < m; ++i) col += weights(i) * kernel(i, j);
            system(m, j) = col;
        }
        system(m, m) = weight_sum;
        rhs(m) = weights.dot(residual);

        Eigen::VectorXd sol = system.partialPivLu().solve(rhs);
        const Eigen::VectorXd solve_alpha = sol.head(m);
        const double solve_bias = sol(m);
        Eigen::VectorXd solve_fitted = kernel * solve_alpha;
        solve_fitted.array() += solve_bias;

        // The surrogate shares the objective's gradient at the current
        // iterate, so the solve direction descends — but the full update can
        // overshoot and flip active sets back and forth. The objective along
        // the segment toward the solve is convex (f is linear in alpha and
        // bias), so a ternary search picks the best step.
        const auto along = [&](double t) {
            Eigen::VectorXd a = alpha + t * (solve_alpha - alpha);
            Eigen::VectorXd f = fitted + t * (solve_fitted - fitted);
            return objective(a, bias + t * (solve_bias - bias), f);
        };
        double lo = 0.0, hi = 1.0;
        for (int probe = 0; probe < 40 && hi - lo > 1e-6; ++probe) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            if (along(m1) <= along(m2)) hi = m2;
            else lo = m1;
        }
        double step = 0.5 * (lo + hi);
        // Take the pure solve whenever it is no worse: at convergence that
        // keeps the iterate an exact stationary point of the surrogate.
        if (along(1.0) <= along(step)) step = 1.0;
        Eigen::VectorXd new_alpha = alpha + step * (solve_alpha - alpha);
        const double new_bias = bias + step * (solve_bias - bias);
        Eigen::VectorXd new_fitted = fitted + step * (solve_fitted - fitted);

        const double change = (new_fitted - fitted).norm();
        const double scale = std::max(new_fitted.norm(), 1e-9);
        alpha = std::move(new_alpha);
        bias = new_bias;
        fitted = std::move(new_fitted);
        if (change / scale <= params.tol) {
            converged = true;
            break;
        }
    }

    // The exact fixed point satisfies |alpha_i| <= C; the tolerance-truncated
    // iterate can overshoot by ~C*tol, so project onto the feasible box.
    model.alpha.resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
        model.alpha[i] = std::clamp(alpha[i], -params.c, params.c);
    model.bias = bias;
    if (!converged) {
        const double res_norm = (residual - fitted).norm();
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "svr_fit: no convergence after %d iterations (residual norm %.6g)",
                      params.max_iter, res_norm);
        throw SvrConvergenceError(buf, model, res_norm);
    }
    return model;
}

double svr_predict(const SvrModel& model, double t) {
    if (t < model.start_t - model.domain_pad || t > model.end_t + model.domain_pad) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "svr_predict: t=%.6g outside fitted span [%.6g, %.6g] (pad %.6g)", t,
                      model.start_t, model.end_t, model.domain_pad);
        throw DomainError(buf);
    }
    double acc = model.trend(t) + model.bias;
    for (size_t i = 0; i < model.train_t.size(); ++i) {
        const double dt = t - model.train_t[i];
        acc += model.alpha[i] * std::exp(-model.gamma * dt * dt);
    }
    return acc;
}

}  // namespace ips::ranger
