#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ips/errors.hpp"
#include "ips/ranger.hpp"

using namespace ips;

namespace {

std::vector<double> frame_times(int n, double fps = 30.0) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = i / fps;
    return t;
}

ranger::RangeSegment linear_segment(double d0, double v0, int n, double dt,
                                    double start = 0.0) {
    ranger::RangeSegment seg;
    seg.start_t = start;
    seg.end_t = start + (n - 1) * dt;
    for (int i = 0; i < n; ++i) {
        const double t = start + i * dt;
        seg.samples.push_back({t, d0 + v0 * (t - start)});
    }
    return seg;
}

void attach_init(ranger::RangeSegment& seg, double accel_bar = 0.0) {
    const auto init = ranger::init_conditions(seg, accel_bar);
    seg.init_distance = init.d0;
    seg.init_velocity = init.v0;
    seg.accel_bar = accel_bar;
}

std::vector<sensorio::RangeSample> uniform_ranges(double t0, double t1, double rate) {
    std::vector<sensorio::RangeSample> out;
    for (int i = 0;; ++i) {
        const double t = t0 + i / rate;
        if (t > t1 + 1e-12) break;
        out.push_back({t, 5.0});
    }
    return out;
}

bool any_warning_contains(const std::vector<std::string>& warnings,
                          const std::string& needle) {
    for (const auto& w : warnings)
        if (w.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(DetectTurns, ConstantHeadingHasNoTurns) {
    const std::vector<double> h(300, 45.0);
    EXPECT_TRUE(ranger::detect_turns(h, frame_times(300)).empty());
}

TEST(DetectTurns, SingleStepDetectedAtTheRightFrame) {
    std::vector<double> h(300, 0.0);
    for (int i = 150; i < 300; ++i) h[i] = 90.0;
    const auto events = ranger::detect_turns(h, frame_times(300));
    ASSERT_EQ(events.size(), 1u);
    EXPECT_NEAR(events[0].heading_change, 90.0, 4.5);
    EXPECT_LE(std::abs(events[0].frame - 150), 2);
    EXPECT_NEAR(events[0].t, 150 / 30.0, 2 / 30.0 + 1e-12);
}

TEST(DetectTurns, TwoSeparatedStepsGiveTwoEvents) {
    std::vector<double> h(400, 0.0);
    for (int i = 150; i < 400; ++i) h[i] += 90.0;
    for (int i = 225; i < 400; ++i) h[i] += 90.0;
    const auto events = ranger::detect_turns(h, frame_times(400));
    ASSERT_EQ(events.size(), 2u);
    EXPECT_LT(events[0].frame, events[1].frame);
    EXPECT_LE(std::abs(events[0].frame - 150), 2);
    EXPECT_LE(std::abs(events[1].frame - 225), 2);
}

TEST(DetectTurns, InvariantToConstantHeadingOffset) {
    std::vector<double> h(400, 0.0);
    for (int i = 150; i < 400; ++i) h[i] += 90.0;
    for (int i = 225; i < 400; ++i) h[i] += 90.0;
    const auto t = frame_times(400);
    const auto base = ranger::detect_turns(h, t);
    for (auto& v : h) v += 1000.0;
    const auto shifted = ranger::detect_turns(h, t);
    ASSERT_EQ(base.size(), shifted.size());
    for (size_t i = 0; i < base.size(); ++i) {
        EXPECT_EQ(base[i].frame, shifted[i].frame);
        EXPECT_NEAR(base[i].heading_change, shifted[i].heading_change, 1e-9);
    }
}

TEST(DetectTurns, RandomizedStaircasesAreRecovered) {
    // 100 seeded trials: 1-4 right-angle steps with 0.5 degree heading noise.
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(1000 + trial);
        std::uniform_int_distribution<int> nsteps_d(1, 4);
        std::normal_distribution<double> noise(0.0, 0.5);
        const int n = 600;
        const int k = nsteps_d(rng);
        std::vector<int> pos;
        std::uniform_int_distribution<int> pos_d(40, n - 40);
        while (static_cast<int>(pos.size()) < k) {
            const int p = pos_d(rng);
            bool ok = true;
            for (int q : pos)
                if (std::abs(p - q) < 40) ok = false;
            if (ok) pos.push_back(p);
        }
        std::vector<double> h(n, 0.0);
        for (int p : pos)
            for (int i = p; i < n; ++i) h[i] += 90.0;
        for (int i = 0; i < n; ++i) h[i] += noise(rng);
        const auto events = ranger::detect_turns(h, frame_times(n));
        bool good = events.size() == static_cast<size_t>(k);
        if (good)
            for (const auto& e : events) {
                bool near = false;
                for (int p : pos)
                    if (std::abs(e.frame - p) <= 15) near = true;
                if (!near) good = false;
            }
        if (!good) ++failures;
    }
    EXPECT_EQ(failures, 0);
}

TEST(DetectTurns, ParameterValidation) {
    const std::vector<double> h(100, 0.0);
    const auto t = frame_times(100);
    ranger::TurnParams p;
    p.kernel_halfwidth = 1;
    EXPECT_THROW(ranger::detect_turns(h, t, p), ParamError);
    p = {};
    p.turn_thresh = 0.0;
    EXPECT_THROW(ranger::detect_turns(h, t, p), ParamError);
    EXPECT_THROW(ranger::detect_turns(h, frame_times(99), {}), ParamError);
}

TEST(SegmentRanges, NoTurnsKeepsOneSegment) {
    const auto ranges = uniform_ranges(0.0, 10.0, 60.0);
    const auto seg = ranger::segment_ranges(ranges, {});
    ASSERT_EQ(seg.segments.size(), 1u);
    EXPECT_EQ(seg.segments[0].samples.size(), ranges.size());
    EXPECT_TRUE(seg.warnings.empty());
}

TEST(SegmentRanges, OneTurnSplitsIntoTwoSegments) {
    const auto ranges = uniform_ranges(0.0, 10.0, 60.0);
    ranger::TurnEvent turn;
    turn.t = 5.0;
    turn.frame = 150;
    turn.heading_change = 90.0;
    const auto seg = ranger::segment_ranges(ranges, {turn});
    ASSERT_EQ(seg.segments.size(), 2u);
    EXPECT_EQ(seg.segments[0].samples.size() + seg.segments[1].samples.size(),
              ranges.size());
    EXPECT_LE(seg.segments[0].end_t, 5.0 + 1e-9);
    EXPECT_GE(seg.segments[1].start_t, 5.0 - 1e-9);
    for (const auto& s : seg.segments) {
        EXPECT_GE(s.samples.front().t, s.start_t - 1e-9);
        EXPECT_LE(s.samples.back().t, s.end_t + 1e-9);
    }
}

TEST(SegmentRanges, TinyBoundaryFragmentIsDropped) {
    const auto ranges = uniform_ranges(0.0, 10.0, 60.0);
    ranger::TurnEvent turn;
    turn.t = 0.02;  // two 60 Hz samples (t = 0 and 1/60) precede the split
    const auto seg = ranger::segment_ranges(ranges, {turn});
    ASSERT_EQ(seg.segments.size(), 1u);
    EXPECT_EQ(seg.segments[0].samples.size(), ranges.size() - 2);
    EXPECT_TRUE(any_warning_contains(seg.warnings, "dropped at sequence boundary"))
        << (seg.warnings.empty() ? "<none>" : seg.warnings[0]);
}

TEST(SegmentRanges, TinyInteriorFragmentMergesIntoPredecessor) {
    const auto ranges = uniform_ranges(0.0, 10.0, 60.0);
    ranger::TurnEvent a, b;
    a.t = 5.0;
    b.t = 5.05;
    const auto seg = ranger::segment_ranges(ranges, {a, b});
    ASSERT_EQ(seg.segments.size(), 2u);
    EXPECT_EQ(seg.segments[0].samples.size() + seg.segments[1].samples.size(),
              ranges.size());
    EXPECT_TRUE(any_warning_contains(seg.warnings, "merged into predecessor"))
        << (seg.warnings.empty() ? "<none>" : seg.warnings[0]);
}

TEST(InitConditions, RecoversLinearTrend) {
    auto seg = linear_segment(5.0, -1.2, 50, 0.1);
    const auto init = ranger::init_conditions(seg, 0.0);
    EXPECT_NEAR(init.d0, 5.0, 1e-9);
    EXPECT_NEAR(init.v0, -1.2, 1e-9);
    EXPECT_EQ(init.accel_bar, 0.0);
}

TEST(InitConditions, ConstantDistanceHasZeroVelocity) {
    auto seg = linear_segment(3.0, 0.0, 20, 0.05);
    const auto init = ranger::init_conditions(seg, 0.0);
    EXPECT_NEAR(init.d0, 3.0, 1e-9);
    EXPECT_NEAR(init.v0, 0.0, 1e-9);
}

TEST(InitConditions, QuadraticTrendWithKnownAcceleration) {
    ranger::RangeSegment seg;
    seg.start_t = 0.0;
    seg.end_t = 5.0;
    for (int i = 0; i < 50; ++i) {
        const double t = i * 0.1;
        seg.samples.push_back({t, 10.0 - t - 0.05 * t * t});
    }
    const auto init = ranger::init_conditions(seg, -0.1);
    EXPECT_NEAR(init.d0, 10.0, 1e-6);
    EXPECT_NEAR(init.v0, -1.0, 1e-6);
    EXPECT_EQ(init.accel_bar, -0.1);
}

TEST(InitConditions, RejectsDegenerateSegments) {
    auto tiny = linear_segment(5.0, -1.0, 3, 0.1);
    EXPECT_THROW(ranger::init_conditions(tiny, 0.0), FitError);

    ranger::RangeSegment flat;
    flat.start_t = 0.0;
    flat.end_t = 1.0;
    for (int i = 0; i < 4; ++i) flat.samples.push_back({0.5, 2.0});
    EXPECT_THROW(ranger::init_conditions(flat, 0.0), FitError);
}

TEST(InitConditions, ImuOverloadUsesMinusMeanForwardAcceleration) {
    auto seg = linear_segment(8.0, -1.0, 50, 0.1);
    std::vector<sensorio::ImuSample> imu;
    for (int i = 0; i <= 500; ++i)
        imu.push_back({i * 0.01, 0.0, {0.1, 0.0, 0.0}});
    const auto init = ranger::init_conditions(seg, imu);
    EXPECT_NEAR(init.accel_bar, -0.1, 1e-12);
    const auto empty = ranger::init_conditions(seg, std::vector<sensorio::ImuSample>{});
    EXPECT_EQ(empty.accel_bar, 0.0);
}

TEST(SvrFit, NoiselessRampStaysInsideTheTube) {
    ranger::RangeSegment seg;
    seg.start_t = 0.0;
    seg.end_t = 5.0;
    for (int i = 0; i < 100; ++i) {
        const double t = i * 0.05;
        seg.samples.push_back({t, 10.0 - 1.2 * t});
    }
    attach_init(seg);
    const auto model = ranger::svr_fit(seg);
    double worst = 0.0;
    for (const auto& s : seg.samples)
        worst = std::max(worst, std::abs(ranger::svr_predict(model, s.t) - s.distance));
    EXPECT_LE(worst, model.epsilon + 1e-6);
}

TEST(SvrFit, NoisyRampWithOutliersFitsTheCleanTrend) {
    ranger::RangeSegment seg;
    seg.start_t = 0.0;
    seg.end_t = 5.0;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int i = 0; i < 100; ++i) {
        const double t = i * 0.05;
        double d = 10.0 - 1.2 * t + noise(rng);
        if (i % 20 == 10) d += 10.0;  // gross outliers
        seg.samples.push_back({t, d});
    }
    attach_init(seg);
    const auto model = ranger::svr_fit(seg);

    double sq = 0.0;
    for (int i = 0; i < 100; ++i) {
        if (i % 20 == 10) continue;
        const double t = i * 0.05;
        const double e = ranger::svr_predict(model, t) - (10.0 - 1.2 * t);
        sq += e * e;
    }
    EXPECT_LE(std::sqrt(sq / 95.0), 0.2);

    double dense_worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = 4.95 * i / 1000.0;
        dense_worst =
            std::max(dense_worst, std::abs(ranger::svr_predict(model, t) - (10.0 - 1.2 * t)));
    }
    EXPECT_LE(dense_worst, 0.5);

    double max_alpha = 0.0;
    for (double a : model.alpha) max_alpha = std::max(max_alpha, std::abs(a));
    EXPECT_LE(max_alpha, model.c);
}

TEST(SvrFit, SingleOutlierHasBoundedInfluence) {
    const auto fit_pred = [](bool corrupt, double t_eval) {
        ranger::RangeSegment seg;
        seg.start_t = 0.0;
        seg.end_t = 5.0;
        for (int i = 0; i < 100; ++i) {
            const double t = i * 0.05;
            seg.samples.push_back({t, 10.0 - 1.2 * t});
        }
        if (corrupt) seg.samples[50].distance += 10.0;
        attach_init(seg);
        return ranger::svr_predict(ranger::svr_fit(seg), t_eval);
    };
    double svr_move = 0.0;
    for (int i = 0; i < 100; ++i) {
        if (i == 50) continue;
        const double t = i * 0.05;
        svr_move = std::max(svr_move, std::abs(fit_pred(true, t) - fit_pred(false, t)));
    }
    EXPECT_LE(svr_move, 0.12);

    // A plain least-squares quadratic on the same corrupted data moves much
    // further: the robust loss is doing real work here.
    Eigen::MatrixXd X(100, 3);
    Eigen::VectorXd y(100);
    for (int i = 0; i < 100; ++i) {
        const double t = i * 0.05;
        X(i, 0) = 1.0;
        X(i, 1) = t;
        X(i, 2) = t * t;
        y(i) = 10.0 - 1.2 * t + (i == 50 ? 10.0 : 0.0);
    }
    const Eigen::Vector3d beta = X.colPivHouseholderQr().solve(y);
    double ols_move = 0.0;
    for (int i = 0; i < 100; ++i) {
        if (i == 50) continue;
        const double t = i * 0.05;
        const double p = beta(0) + beta(1) * t + beta(2) * t * t;
        ols_move = std::max(ols_move, std::abs(p - (10.0 - 1.2 * t)));
    }
    EXPECT_GT(ols_move, svr_move);
}

TEST(SvrFit, MinimalSegmentIsFinite) {
    auto seg = linear_segment(5.0, -0.5, 4, 1.0);
    attach_init(seg);
    const auto model = ranger::svr_fit(seg);
    const double p = ranger::svr_predict(model, 1.5);
    EXPECT_TRUE(std::isfinite(p));
    EXPECT_NEAR(p, 5.0 - 0.5 * 1.5, 0.1);
}

TEST(SvrFit, ParameterValidation) {
    auto seg = linear_segment(5.0, -0.5, 20, 0.1);
    attach_init(seg);
    ranger::SvrParams p;
    p.c = 0.0;
    EXPECT_THROW(ranger::svr_fit(seg, p), ParamError);
    p = {};
    p.epsilon = -0.01;
    EXPECT_THROW(ranger::svr_fit(seg, p), ParamError);
    p = {};
    p.delta = 0.05;  // must exceed epsilon
    EXPECT_THROW(ranger::svr_fit(seg, p), ParamError);
    p = {};
    p.gamma = 0.0;
    EXPECT_THROW(ranger::svr_fit(seg, p), ParamError);
    p = {};
    p.max_train_points = 3;
    EXPECT_THROW(ranger::svr_fit(seg, p), ParamError);
}

TEST(SvrFit, DecimationCapsTheTrainingSet) {
    auto seg = linear_segment(20.0, -1.0, 1000, 0.01);
    attach_init(seg);
    ranger::SvrParams p;
    p.max_train_points = 50;
    const auto model = ranger::svr_fit(seg, p);
    EXPECT_LE(model.train_t.size(), 50u);
    double worst = 0.0;
    for (const auto& s : seg.samples)
        worst = std::max(worst, std::abs(ranger::svr_predict(model, s.t) - s.distance));
    EXPECT_LE(worst, model.epsilon + 1e-6);
}

TEST(SvrPredict, DomainIsTheSegmentPlusOneSampleInterval) {
    auto seg = linear_segment(5.0, -0.5, 100, 0.05);
    attach_init(seg);
    const auto model = ranger::svr_fit(seg);
    EXPECT_NO_THROW(ranger::svr_predict(model, 2.5));
    EXPECT_NEAR(ranger::svr_predict(model, 2.5), 5.0 - 0.5 * 2.5, 0.05 + 1e-6);
    EXPECT_THROW(ranger::svr_predict(model, -1.0), DomainError);
    EXPECT_THROW(ranger::svr_predict(model, 6.0), DomainError);
}
