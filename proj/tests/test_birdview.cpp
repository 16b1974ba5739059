#include <gtest/gtest.h>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "safedrive/birdview.hpp"
#include "safedrive/errors.hpp"
#include "support/fixtures.hpp"

using namespace safedrive;
using namespace safedrive::testing;

namespace {

std::size_t count_color(const RasterImage& img, Rgb c) {
    std::size_t n = 0;
    for (int r = 0; r < img.height(); ++r)
        for (int k = 0; k < img.width(); ++k) n += img.at(r, k) == c ? 1 : 0;
    return n;
}

Pose2D move(const Pose2D& p, const Pose2D& t) {
    const Vec2 g = to_global(t, p.position());
    return {g.x, g.y, normalize_angle(p.yaw + t.yaw)};
}

// Same map and vehicles under the rigid motion t.
std::shared_ptr<const MapData> moved_map(const MapData& map, const Pose2D& t) {
    nlohmann::json j = map.to_json();
    auto mv = [&](nlohmann::json& xy) {
        const Vec2 g = to_global(t, {xy[0].get<double>(), xy[1].get<double>()});
        xy = {g.x, g.y};
    };
    for (auto& l : j["lanes"])
        for (auto& p : l["centerline"]) mv(p);
    if (j.contains("traffic_lights"))
        for (auto& l : j["traffic_lights"]) mv(l["stop_point"]);
    if (j.contains("yields"))
        for (auto& y : j["yields"]) mv(y["stop_point"]);
    return std::make_shared<const MapData>(MapData::from_json(j));
}

std::shared_ptr<const Route> moved_route(const Route& r, const Pose2D& t) {
    std::vector<Vec2> pts;
    for (const Vec2& p : r.path.points()) pts.push_back(to_global(t, p));
    return std::make_shared<const Route>(Route{Polyline(pts), r.spans});
}

}  // namespace

TEST(Mapping, EgoAnchor) {
    const RenderConfig cfg;
    const Pose2D ego{12.0, -3.0, 0.7};
    EXPECT_EQ(world_to_pixel(ego, ego.position(), cfg), (PixelCoord{154, 96}));
    const auto [r, c] = local_to_pixel({0, 0}, cfg);
    EXPECT_NEAR(r, 153.6, 1e-9);
    EXPECT_NEAR(c, 96.0, 1e-9);
}

TEST(Mapping, AheadAndOutside) {
    const RenderConfig cfg;
    const Pose2D ego{12.0, -3.0, 0.7};
    EXPECT_EQ(world_to_pixel(ego, to_global(ego, {10, 0}), cfg), (PixelCoord{106, 96}));
    EXPECT_FALSE(world_to_pixel(ego, to_global(ego, {50, 0}), cfg));
    EXPECT_FALSE(world_to_pixel(ego, to_global(ego, {0, 25}), cfg));
    // left is left
    EXPECT_LT(world_to_pixel(ego, to_global(ego, {0, 5}), cfg)->col, 96);
}

TEST(Mapping, PixelRoundTrip) {
    const RenderConfig cfg;
    for (double x : {-7.3, 0.0, 4.4, 31.0})
        for (double y : {-19.0, 0.2, 11.0}) {
            const auto [r, c] = local_to_pixel({x, y}, cfg);
            const Vec2 back = pixel_to_local(r, c, cfg);
            EXPECT_NEAR(back.x, x, 1e-12);
            EXPECT_NEAR(back.y, y, 1e-12);
        }
}

TEST(Render, EmptyHistoryThrows) {
    const Route r{Polyline({{0, 0}, {1, 0}}), {}};
    EXPECT_THROW(render(std::span<const WorldState>{}, r), EmptyHistory);
}

TEST(Render, LoneEgoBoxArea) {
    WorldState w;
    w.ego.pose = {3.0, 4.0, 0.3};
    const Route r{Polyline({{-1000, -1000}, {-999, -1000}}), {}};
    const RasterImage img = render(std::span<const WorldState>(&w, 1), r);
    const RenderConfig cfg;
    const double expected = (2 * w.ego.half_length) * (2 * w.ego.half_width) * std::pow(cfg.pixels_per_meter(), 2);
    const auto red = static_cast<double>(count_color(img, cfg.ego_red));
    EXPECT_NEAR(red, expected, 0.15 * expected);
    EXPECT_EQ(red + count_color(img, {0, 0, 0}), static_cast<double>(192 * 192));
}

TEST(Render, Deterministic) {
    const Scene s = expert_scene("d", std::make_shared<const MapData>(MapData::load(repo_path("maps/roundabout.json"))),
                                 9, 30);
    EXPECT_EQ(render(s.history, *s.route), render(s.history, *s.route));
}

TEST(Render, RouteTurnsPurpleOnRed) {
    const RenderConfig cfg;
    for (const Scene& s : golden_scenes()) {
        if (s.name.rfind("straight_", 0) != 0) continue;
        const RasterImage img = render(s.history, *s.route);
        const bool red = s.name == "straight_red";
        EXPECT_EQ(count_color(img, cfg.route_blue) == 0, red) << s.name;
        EXPECT_EQ(count_color(img, cfg.route_purple) > 0, red) << s.name;
    }
}

TEST(Render, GoldenHashes) {
    const auto scenes = golden_scenes();
    const auto stored = golden_hashes();
    std::string actual;
    for (const Scene& s : scenes) {
        char line[128];
        std::snprintf(line, sizeof line, "%s %016" PRIx64 "\n", s.name.c_str(), raster_hash(render(s.history, *s.route)));
        actual += line;
    }
    ASSERT_EQ(stored.size(), scenes.size()) << "computed:\n" << actual;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        EXPECT_EQ(stored[i].first, scenes[i].name);
        EXPECT_EQ(stored[i].second, raster_hash(render(scenes[i].history, *scenes[i].route))) << scenes[i].name;
    }
}

TEST(Render, GoldenScenesFollowRecoloringRule) {
    const RenderConfig cfg;
    for (const Scene& s : golden_scenes()) {
        const WorldState& now = s.history.back();
        VehicleState probe = now.ego;
        probe.route = s.route;
        const auto light = next_light(now, probe);
        const bool red = light && light->phase == LightPhase::red;
        const RasterImage img = render(s.history, *s.route);
        EXPECT_EQ(count_color(img, cfg.route_purple) > 0, red) << s.name;
        EXPECT_EQ(count_color(img, cfg.route_blue) > 0, !red) << s.name;
    }
}

TEST(Render, RigidMotionEquivariance) {
    auto map = std::make_shared<const MapData>(MapData::load(repo_path("maps/intersection.json")));
    const Scene s = expert_scene("e", map, 5, 80, 12);
    for (const Pose2D t : {Pose2D{13.7, -42.1, 0.61}, Pose2D{-250.0, 91.3, -2.2}, Pose2D{0.3, 0.2, kPi}}) {
        auto map2 = moved_map(*map, t);
        auto route2 = moved_route(*s.route, t);
        std::vector<WorldState> hist2 = s.history;
        for (WorldState& w : hist2) {
            w.map = map2;
            w.ego.pose = move(w.ego.pose, t);
            w.ego.route = route2;
            for (auto& n : w.npcs) n.pose = move(n.pose, t);
        }
        const RasterImage a = render(s.history, *s.route);
        const RasterImage b = render(hist2, *route2);
        std::size_t same = 0;
        for (int r = 0; r < 192; ++r)
            for (int c = 0; c < 192; ++c) same += a.at(r, c) == b.at(r, c) ? 1 : 0;
        EXPECT_GE(static_cast<double>(same) / (192.0 * 192.0), 0.99);
    }
}

TEST(Render, VehiclesCoverMarkings) {
    auto map = straight_map(100);
    WorldState w = solo_world(map, {"main"}, 10.0, 0.0);
    VehicleState npc = lane_vehicle(*map, 1, "main", 25.0, 0.0);
    npc.pose.y = 1.75;  // straddles the left marking
    w.npcs.push_back(npc);
    const RenderConfig cfg;
    const RasterImage img = render(std::span<const WorldState>(&w, 1), *w.ego.route);
    ASSERT_GT(count_color(img, cfg.marking_yellow), 0u);
    std::size_t inside = 0;
    for (int r = 0; r < 192; ++r) {
        for (int c = 0; c < 192; ++c) {
            if (!npc.box().contains(to_global(w.ego.pose, pixel_to_local(r, c, cfg)))) continue;
            ++inside;
            EXPECT_EQ(img.at(r, c), cfg.npc_green) << r << "," << c;
        }
    }
    EXPECT_GT(inside, 100u);
}

TEST(Render, OlderStepsAreDimmer) {
    auto map = straight_map(200);
    WorldState w = solo_world(map, {"main"}, 10.0, 0.0);
    w.npcs.push_back(lane_vehicle(*map, 1, "main", 20.0, 6.0));
    std::vector<WorldState> hist{w};
    for (int k = 0; k < 8; ++k) {
        w = step_world(w, {0, 0});
        w.npcs[0].speed = 6.0;
        hist.push_back(w);
    }
    const RenderConfig cfg;
    const RasterImage img = render(hist, *w.ego.route);
    double prev = 1e9;
    for (int k = 0; k <= cfg.history_steps; ++k) {
        const VehicleState& v = hist[hist.size() - 1 - static_cast<std::size_t>(k * cfg.history_stride)].npcs[0];
        double sum = 0;
        int n = 0;
        for (int r = 0; r < 192; ++r) {
            for (int c = 0; c < 192; ++c) {
                const Vec2 g = to_global(w.ego.pose, pixel_to_local(r, c, cfg));
                if (!v.box().contains(g)) continue;
                bool newer = false;
                for (int j = 0; j < k; ++j)
                    newer = newer ||
                            hist[hist.size() - 1 - static_cast<std::size_t>(j * cfg.history_stride)].npcs[0].box().contains(g);
                if (newer) continue;
                const Rgb px = img.at(r, c);
                sum += px.r + px.g + px.b;
                ++n;
            }
        }
        ASSERT_GT(n, 0) << k;
        const double mean = sum / n;
        EXPECT_LT(mean, prev) << "step " << k;
        prev = mean;
    }
}

TEST(Png, WritesSignature) {
    const auto path = std::filesystem::temp_directory_path() / "safedrive_test.png";
    RasterImage img;
    img.set(5, 5, {1, 2, 3});
    write_png(img, path.string());
    std::ifstream in(path, std::ios::binary);
    char sig[8];
    in.read(sig, 8);
    EXPECT_EQ(std::string(sig + 1, 3), "PNG");
    std::filesystem::remove(path);
}
