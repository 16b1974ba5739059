#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "safedrive/geometry.hpp"
#include "safedrive/rng.hpp"

using namespace safedrive;

namespace {

void expect_vec(const Vec2& got, double x, double y, double tol = 1e-12) {
    EXPECT_NEAR(got.x, x, tol);
    EXPECT_NEAR(got.y, y, tol);
}

// Dense sampling of the first box; true if any sample lies in the second.
bool grid_overlap(const OrientedBox& a, const OrientedBox& b, int n = 160) {
    const Vec2 f{std::cos(a.yaw), std::sin(a.yaw)};
    const Vec2 l{-f.y, f.x};
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const double u = (2.0 * i / n - 1.0) * a.half_length;
            const double v = (2.0 * j / n - 1.0) * a.half_width;
            if (b.contains(a.center + f * u + l * v)) return true;
        }
    }
    return false;
}

double seg_dist(Vec2 p, Vec2 a, Vec2 b, double* t_out) {
    const Vec2 d = b - a;
    const double t = std::clamp((p - a).dot(d) / d.dot(d), 0.0, 1.0);
    *t_out = t;
    return (p - (a + d * t)).norm();
}

}  // namespace

TEST(Frames, ToLocalExamples) {
    expect_vec(to_local({0, 0, 0}, {3, 4}), 3, 4);
    expect_vec(to_local({1, 0, kPi / 2}, {1, 2}), 2, 0);
    expect_vec(to_local({5, 5, kPi}, {5, 5}), 0, 0);
}

TEST(Frames, ToGlobalExamples) {
    expect_vec(to_global({0, 0, 0}, {3, 4}), 3, 4);
    expect_vec(to_global({1, 0, kPi / 2}, {2, 0}), 1, 2);
}

TEST(Frames, RoundTrip) {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const Pose2D ref{rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-kPi, kPi)};
        const Vec2 p{rng.uniform(-500, 500), rng.uniform(-500, 500)};
        const Vec2 back = to_global(ref, to_local(ref, p));
        ASSERT_NEAR(back.x, p.x, 1e-9);
        ASSERT_NEAR(back.y, p.y, 1e-9);
    }
}

TEST(Frames, NormalizeAngle) {
    EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
    EXPECT_NEAR(normalize_angle(-kPi), kPi, 1e-12);
    EXPECT_NEAR(normalize_angle(3 * kPi / 2), -kPi / 2, 1e-12);
    EXPECT_NEAR(normalize_angle(10 * kPi + 0.1), 0.1, 1e-9);
}

TEST(Boxes, Trivial) {
    const OrientedBox a{{0, 0}, 0.0, 1.0, 1.0};
    EXPECT_TRUE(boxes_overlap(a, a));
    EXPECT_FALSE(boxes_overlap(a, {{10, 0}, 0.0, 1.0, 1.0}));
}

TEST(Boxes, RotatedNeighbourMatchesGrid) {
    const OrientedBox a{{0, 0}, 0.0, 1.0, 1.0};
    const OrientedBox b{{1.9, 0}, kPi / 4, 1.0, 1.0};
    const bool oracle = grid_overlap(a, b) || grid_overlap(b, a);
    EXPECT_EQ(boxes_overlap(a, b), oracle);
    EXPECT_TRUE(oracle);
}

TEST(Boxes, RandomPairsMatchGridAndAreSymmetric) {
    Rng rng(11);
    int disagreements = 0;
    for (int i = 0; i < 1000; ++i) {
        const OrientedBox a{{0, 0}, rng.uniform(-kPi, kPi), rng.uniform(0.5, 3), rng.uniform(0.3, 1.5)};
        const OrientedBox b{{rng.uniform(-6, 6), rng.uniform(-6, 6)}, rng.uniform(-kPi, kPi), rng.uniform(0.5, 3),
                            rng.uniform(0.3, 1.5)};
        const bool got = boxes_overlap(a, b);
        ASSERT_EQ(got, boxes_overlap(b, a));
        // edge sampling misses only grazing contacts; those must be rare
        if (got != (grid_overlap(a, b, 60) || grid_overlap(b, a, 60))) ++disagreements;
    }
    EXPECT_LE(disagreements, 5);
}

TEST(Boxes, CornersCounterClockwise) {
    const OrientedBox a{{1, 2}, 0.0, 2.0, 1.0};
    const auto c = a.corners();
    expect_vec(c[0], 3, 3);
    expect_vec(c[1], -1, 3);
    expect_vec(c[2], -1, 1);
    expect_vec(c[3], 3, 1);
}

TEST(Lateral, StraightLine) {
    const Polyline line({{0, 0}, {10, 0}});
    const auto pr = lateral_offset(line, {5, 2});
    EXPECT_NEAR(pr.offset, 2.0, 1e-12);
    EXPECT_NEAR(pr.arclength, 5.0, 1e-12);
    const auto on = lateral_offset(line, {7, 0});
    EXPECT_NEAR(on.offset, 0.0, 1e-12);
    EXPECT_NEAR(on.arclength, 7.0, 1e-12);
}

TEST(Lateral, LShapeMatchesBruteForce) {
    const Polyline line({{0, 0}, {4, 0}, {10, 0}, {10, 3}, {10, 10}});
    const auto pts = line.points();
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const Vec2 p{rng.uniform(5, 15), rng.uniform(-5, 5)};
        double best = std::numeric_limits<double>::infinity(), best_s = 0;
        double s0 = 0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            double t;
            const double d = seg_dist(p, pts[k], pts[k + 1], &t);
            const double len = (pts[k + 1] - pts[k]).norm();
            if (d < best - 1e-12) {
                best = d;
                best_s = s0 + t * len;
            }
            s0 += len;
        }
        const auto pr = lateral_offset(line, p);
        ASSERT_NEAR(pr.distance, best, 1e-9);
        ASSERT_NEAR(std::abs(pr.offset), best, 1e-9);
        ASSERT_NEAR(pr.arclength, best_s, 1e-9) << p.x << "," << p.y;
    }
}

TEST(Lateral, SignFlipsOnReversal) {
    const Polyline line({{0, 0}, {10, 0}, {10, 10}});
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const Vec2 p{rng.uniform(-2, 8), rng.uniform(-4, -0.5)};
        const auto a = lateral_offset(line, p);
        const auto b = lateral_offset(line.reversed(), p);
        ASSERT_NEAR(a.offset, -b.offset, 1e-9);
    }
}

TEST(PolylineOps, ResampleKeepsEndpointsAndLength) {
    const Polyline line({{0, 0}, {3, 4}, {3, 10}});
    const Polyline r = line.resampled(1.0);
    EXPECT_EQ(r.points().front(), (Vec2{0, 0}));
    EXPECT_EQ(r.points().back(), (Vec2{3, 10}));
    EXPECT_NEAR(r.length(), 11.0, 1e-9);
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        EXPECT_LE((r.points()[i + 1] - r.points()[i]).norm(), 1.0 + 1e-9);
}

TEST(PolylineOps, PointAtClamps) {
    const Polyline line({{0, 0}, {10, 0}});
    expect_vec(line.point_at(-5), 0, 0);
    expect_vec(line.point_at(25), 10, 0);
    expect_vec(line.point_at(2.5), 2.5, 0);
    EXPECT_THROW(Polyline({{0, 0}}), std::invalid_argument);
    EXPECT_THROW(Polyline({{0, 0}, {0, 0}}), std::invalid_argument);
}

TEST(PolylineOps, OffsetIsParallel) {
    const Polyline line({{0, 0}, {10, 0}});
    const Polyline left = line.offset(1.5);
    for (const Vec2& p : left.points()) EXPECT_NEAR(p.y, 1.5, 1e-12);
}
