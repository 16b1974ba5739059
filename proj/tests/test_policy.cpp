#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "safedrive/errors.hpp"
#include "safedrive/expert.hpp"
#include "safedrive/policy.hpp"
#include "safedrive/tracking.hpp"
#include "support/fixtures.hpp"

using namespace safedrive;
using namespace safedrive::testing;

namespace {

Trajectory line(double dx, double dy, std::size_t h = kDefaultHorizon) {
    Trajectory t;
    for (std::size_t i = 1; i <= h; ++i) t.points.push_back({dx * static_cast<double>(i), dy * static_cast<double>(i)});
    return t;
}

Trajectory shifted(Trajectory t, Vec2 by) {
    for (Vec2& p : t.points) p = p + by;
    return t;
}

DatasetFrame random_frame(Rng& rng) {
    DatasetFrame f;
    for (auto& b : f.raster.bytes()) b = static_cast<std::uint8_t>(rng.below(4) == 0 ? rng.below(256) : 0);
    f.ego_speed = rng.uniform(0.0, 8.0);
    f.label = line(rng.uniform(0.0, 1.0), rng.uniform(-0.1, 0.1));
    return f;
}

/// Expert driving along the straight lane, labelled like the collector does.
std::vector<DatasetFrame> straight_corpus(int ticks) {
    WorldState w = solo_world(straight_map(400.0), {"main"}, 10.0, 6.0);
    TrackingController tracker;
    std::vector<Pose2D> poses{w.ego.pose};
    std::vector<double> speeds{w.ego.speed};
    for (int k = 0; k < ticks + static_cast<int>(kDefaultHorizon); ++k) {
        w = step_world(w, tracker.track(expert_plan(w, *w.ego.route), w.ego.speed));
        poses.push_back(w.ego.pose);
        speeds.push_back(w.ego.speed);
    }
    std::vector<DatasetFrame> frames;
    for (int i = 0; i < ticks; ++i) {
        DatasetFrame f;
        f.ego_speed = speeds[static_cast<std::size_t>(i)];
        f.label = make_label(std::span<const Pose2D>(poses).subspan(static_cast<std::size_t>(i) + 1, kDefaultHorizon),
                             poses[static_cast<std::size_t>(i)]);
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace

TEST(Loss, Examples) {
    const Trajectory t = line(0.6, 0.0);
    EXPECT_EQ(loss(t, t), 0.0);
    EXPECT_DOUBLE_EQ(loss(shifted(t, {1, 0}), t), 1.0);

    Trajectory half = t;
    for (std::size_t i = 0; i < half.horizon(); i += 2) half.points[i].y += 2.0;
    EXPECT_DOUBLE_EQ(loss(half, t), 2.0);
}

TEST(Loss, SymmetricAndZeroOnlyWhenEqual) {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const Trajectory a = line(rng.uniform(-1, 1), rng.uniform(-1, 1));
        Trajectory b = a;
        b.points[rng.below(b.horizon())].x += rng.uniform(0.01, 1.0);
        EXPECT_EQ(loss(a, b), loss(b, a));
        EXPECT_GT(loss(a, b), 0.0);
    }
}

TEST(Displacement, Examples) {
    const Trajectory t = line(1.0, 0.0);
    for (std::size_t i = 1; i <= t.horizon(); ++i) EXPECT_DOUBLE_EQ(displacement_error(shifted(t, {1, 0}), t, i), 1.0);
    Trajectory p = t;
    p.points[1] = p.points[1] + Vec2{3, 4};
    EXPECT_DOUBLE_EQ(displacement_error(p, t, 2), 5.0);
    EXPECT_DOUBLE_EQ(displacement_error(p, t, 1), 0.0);
    EXPECT_THROW(displacement_error(p, t, 0), std::invalid_argument);
}

TEST(Features, BlackRasterIsBiasOnly) {
    const auto f = downsample_features(RasterImage{}, 0.0);
    ASSERT_EQ(f.size(), kFeatureDim);
    EXPECT_EQ(f.size(), 24u * 24u * 3u + 2u);
    for (std::size_t i = 0; i + 1 < f.size(); ++i) EXPECT_EQ(f[i], 0.0);
    EXPECT_EQ(f.back(), 1.0);
}

TEST(Features, WhiteRasterIsOne) {
    RasterImage img;
    std::fill(img.bytes().begin(), img.bytes().end(), std::uint8_t{255});
    const auto f = downsample_features(img, 4.5);
    for (std::size_t i = 0; i + 2 < f.size(); ++i) EXPECT_DOUBLE_EQ(f[i], 1.0);
    EXPECT_EQ(f[kFeatureDim - 2], 4.5);
}

TEST(Features, SinglePixelIsOneSixtyFourth) {
    RasterImage img;
    img.bytes()[(static_cast<std::size_t>(100) * kRasterSide + 37) * 3 + 1] = 255;
    const auto f = downsample_features(img, 0.0);
    const std::size_t hit = ((100 / 8) * kPooledSide + 37 / 8) * 3 + 1;
    for (std::size_t i = 0; i + 2 < f.size(); ++i) {
        if (i == hit) {
            EXPECT_DOUBLE_EQ(f[i], 1.0 / 64.0);
        } else {
            EXPECT_EQ(f[i], 0.0) << i;
        }
    }
}

TEST(Ridge, RealizableTargetsAreFitExactly) {
    Rng rng(11);
    const std::size_t n = 60, d = 6, k = 4;
    std::vector<double> X(n * d), Wt(d * k), Y(n * k, 0.0), c(n, 1.0);
    for (auto& x : X) x = rng.uniform(-1, 1);
    for (auto& w : Wt) w = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t m = 0; m < d; ++m) Y[i * k + j] += X[i * d + m] * Wt[m * k + j];

    const auto W = fit_ridge(X, Y, c, d, k, 1e-14);
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double y = 0.0;
            for (std::size_t m = 0; m < d; ++m) y += X[i * d + m] * W[m * k + j];
            mse += (y - Y[i * k + j]) * (y - Y[i * k + j]);
        }
    }
    EXPECT_LT(mse / static_cast<double>(n), 1e-8);
}

TEST(Ridge, MatchesNormalEquationsWhenUnderdetermined) {
    // dual and primal forms agree: check the gradient of the mean objective vanishes
    Rng rng(12);
    const std::size_t n = 5, d = 9, k = 2;
    const double l2 = 0.05;
    std::vector<double> X(n * d), Y(n * k), c{1, 2, 1, 3, 1};
    for (auto& x : X) x = rng.uniform(-1, 1);
    for (auto& y : Y) y = rng.uniform(-1, 1);
    const auto W = fit_ridge(X, Y, c, d, k, l2);
    const double total = 8.0;
    for (std::size_t m = 0; m < d; ++m) {
        for (std::size_t j = 0; j < k; ++j) {
            double g = l2 * W[m * k + j];
            for (std::size_t i = 0; i < n; ++i) {
                double r = -Y[i * k + j];
                for (std::size_t q = 0; q < d; ++q) r += X[i * d + q] * W[q * k + j];
                g += c[i] / total * X[i * d + m] * r;
            }
            EXPECT_NEAR(g, 0.0, 1e-12);
        }
    }
}

TEST(TrainToy, DuplicatedDatasetGivesIdenticalWeights) {
    Rng rng(3);
    std::vector<DatasetFrame> frames;
    for (int i = 0; i < 12; ++i) frames.push_back(random_frame(rng));
    std::vector<DatasetFrame> twice = frames;
    twice.insert(twice.end(), frames.begin(), frames.end());
    EXPECT_EQ(train_toy(frames).weights(), train_toy(twice).weights());
}

TEST(TrainToy, OrderInvariantAndDeterministic) {
    Rng rng(4);
    std::vector<DatasetFrame> frames;
    for (int i = 0; i < 12; ++i) frames.push_back(random_frame(rng));
    const ToyPolicy a = train_toy(frames);
    std::reverse(frames.begin(), frames.end());
    std::swap(frames[2], frames[7]);
    EXPECT_EQ(a.weights(), train_toy(frames).weights());
    EXPECT_EQ(a.weights(), train_toy(frames).weights());
}

TEST(TrainToy, SaveLoadRoundTrip) {
    Rng rng(6);
    std::vector<DatasetFrame> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(random_frame(rng));
    const ToyPolicy a = train_toy(frames);
    const auto path = std::filesystem::temp_directory_path() / "safedrive_toy_roundtrip.json";
    a.save(path.string());
    ToyPolicy b = ToyPolicy::load(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(a.weights(), b.weights());
    Observation obs;
    obs.raster = &frames[0].raster;
    obs.ego_speed = frames[0].ego_speed;
    const Trajectory t = b.plan(obs);
    EXPECT_EQ(t.horizon(), kDefaultHorizon);
    EXPECT_TRUE(t.finite());
}

TEST(TrainToy, EmptyDatasetThrows) {
    EXPECT_THROW(train_toy(std::span<const DatasetFrame>{}), EmptyDataset);
}

TEST(OpenLoop, LabelReplayIsExact) {
    Rng rng(8);
    std::vector<DatasetFrame> frames;
    for (int i = 0; i < 5; ++i) frames.push_back(random_frame(rng));

    struct Replay : Planner {
        const std::vector<DatasetFrame>* frames;
        std::size_t next = 0;
        Trajectory plan(const Observation&) override { return (*frames)[next++].label; }
        std::string name() const override { return "replay"; }
    } replay;
    replay.frames = &frames;
    EXPECT_EQ(average_displacement(replay, std::span<const DatasetFrame>(frames)), 0.0);
}

TEST(OpenLoop, ConstantVelocityOnStraightCorpus) {
    const auto frames = straight_corpus(150);
    ConstantVelocityPlanner cv;
    EXPECT_LT(average_displacement(cv, std::span<const DatasetFrame>(frames)), 0.1);
}

TEST(OpenLoop, EmptyDatasetThrows) {
    ConstantVelocityPlanner cv;
    EXPECT_THROW(average_displacement(cv, std::span<const DatasetFrame>{}), EmptyDataset);
}

TEST(Planners, FixedHorizonAndFinite) {
    WorldState w = solo_world(straight_map(), {"main"}, 10.0, 5.0);
    Observation obs;
    obs.world = &w;
    obs.route = w.ego.route.get();
    obs.ego_speed = w.ego.speed;
    ExpertPlanner expert;
    DegradedPlanner degraded(1);
    ConstantVelocityPlanner cv;
    for (Planner* p : std::initializer_list<Planner*>{&expert, &degraded, &cv}) {
        const Trajectory t = p->plan(obs);
        EXPECT_EQ(t.horizon(), kDefaultHorizon) << p->name();
        EXPECT_TRUE(t.finite()) << p->name();
    }
    // degraded noise is lateral only
    const Trajectory e = expert.plan(obs), d = DegradedPlanner(1).plan(obs);
    for (std::size_t i = 0; i < e.horizon(); ++i) EXPECT_EQ(e.points[i].x, d.points[i].x);
}
