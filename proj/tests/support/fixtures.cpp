#include "support/fixtures.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "safedrive/errors.hpp"
#include "safedrive/expert.hpp"
#include "safedrive/tracking.hpp"

namespace safedrive::testing {

std::string repo_path(const std::string& relative) { return std::string(SAFEDRIVE_SOURCE_DIR) + "/" + relative; }

namespace {

Lane make_lane(std::string id, std::vector<Vec2> pts, std::vector<std::string> succ = {}) {
    Lane l;
    l.id = std::move(id);
    l.centerline = Polyline(std::move(pts));
    l.marking_left = Marking::yellow;
    l.marking_right = Marking::white;
    l.successors = std::move(succ);
    return l;
}

std::vector<Vec2> line(Vec2 a, Vec2 b, double step = 1.0) {
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    std::vector<Vec2> out;
    for (int i = 0; i <= n; ++i) out.push_back(a + (b - a) * (static_cast<double>(i) / n));
    return out;
}

}  // namespace

std::shared_ptr<const MapData> straight_map(double length) {
    return std::make_shared<const MapData>(std::vector<Lane>{make_lane("main", line({0, 0}, {length, 0}))},
                                           std::vector<TrafficLight>{}, std::vector<YieldRule>{},
                                           std::vector<SpawnPoint>{});
}

std::shared_ptr<const MapData> light_map(double stop_x, std::array<double, 3> cycle, double phase_offset,
                                         double length) {
    TrafficLight l;
    l.id = "L";
    l.stop_point = {stop_x, 0.0};
    l.governed_lanes = {"main"};
    l.cycle = cycle;
    l.phase_offset = phase_offset;
    return std::make_shared<const MapData>(std::vector<Lane>{make_lane("main", line({0, 0}, {length, 0}))},
                                           std::vector<TrafficLight>{l}, std::vector<YieldRule>{},
                                           std::vector<SpawnPoint>{});
}

std::shared_ptr<const MapData> l_map() {
    auto pts = line({0, 0}, {50, 0});
    auto up = line({50, 0}, {50, 50});
    pts.insert(pts.end(), up.begin() + 1, up.end());
    return std::make_shared<const MapData>(std::vector<Lane>{make_lane("el", pts)}, std::vector<TrafficLight>{},
                                           std::vector<YieldRule>{}, std::vector<SpawnPoint>{});
}

std::shared_ptr<const MapData> diamond_map(double extra) {
    std::vector<Lane> lanes;
    lanes.push_back(make_lane("a", line({0, 0}, {20, 0}), {"b", "c"}));
    // b bulges upward so it is longer than c
    const double h = std::sqrt(std::pow((40.0 + extra) / 2.0, 2) - 400.0);
    auto b = line({20, 0}, {40, h});
    auto b2 = line({40, h}, {60, 0});
    b.insert(b.end(), b2.begin() + 1, b2.end());
    lanes.push_back(make_lane("b", b, {"d"}));
    lanes.push_back(make_lane("c", line({20, 0}, {60, 0}), {"d"}));
    lanes.push_back(make_lane("d", line({60, 0}, {100, 0})));
    std::vector<SpawnPoint> spawns{{"a", 2.0}, {"a", 15.0}, {"d", 10.0}, {"d", 30.0}};
    return std::make_shared<const MapData>(lanes, std::vector<TrafficLight>{}, std::vector<YieldRule>{}, spawns);
}

std::shared_ptr<const MapData> arc_map(double radius) {
    auto pts = line({-40, 0}, {0, 0});
    for (int i = 1; i <= 90; ++i) {
        const double a = i * kPi / 180.0;
        pts.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a))});
    }
    auto out = line({radius, radius}, {radius, radius + 40.0});
    pts.insert(pts.end(), out.begin() + 1, out.end());
    return std::make_shared<const MapData>(std::vector<Lane>{make_lane("arc", pts)}, std::vector<TrafficLight>{},
                                           std::vector<YieldRule>{}, std::vector<SpawnPoint>{});
}

WorldState solo_world(std::shared_ptr<const MapData> map, const std::vector<std::string>& lanes, double start_s,
                      double speed, double lateral, const WorldConfig& cfg) {
    std::vector<std::size_t> idx;
    for (const auto& l : lanes) idx.push_back(map->lane_index(l));
    auto route = std::make_shared<const Route>(build_route(*map, idx, start_s));
    VehicleState ego = spawn_on_route(route, 0, speed, lateral, cfg);
    return make_world(map, 0, cfg, ego, 0, 0.0);
}

VehicleState lane_vehicle(const MapData& map, int id, const std::string& lane, double s, double speed,
                          const WorldConfig& cfg) {
    return spawn_vehicle(map, id, {lane, s}, speed, cfg, 0, false);
}

std::vector<double> track_reference(const Polyline& reference, Pose2D start, double speed, double seconds) {
    TrackingController tracker;
    const double dt = tracker.config().dt;
    VehicleState v;
    v.pose = start;
    v.speed = speed;
    std::vector<double> err;
    const int ticks = static_cast<int>(std::lround(seconds / dt));
    for (int k = 0; k < ticks; ++k) {
        const LineProjection foot = reference.project(v.pose.position());
        err.push_back(foot.distance);
        Trajectory t;
        for (std::size_t i = 1; i <= kDefaultHorizon; ++i)
            t.points.push_back(to_local(v.pose, reference.point_at(foot.arclength + speed * dt * static_cast<double>(i))));
        v = step_vehicle(v, tracker.track(t, v.speed), dt, 2.5);
    }
    return err;
}

Scene expert_scene(const std::string& name, std::shared_ptr<const MapData> map, std::uint64_t seed, int ticks,
                   std::size_t npcs) {
    CollectConfig cc;
    cc.npc_count = npcs;
    WorldState w = collection_world(std::move(map), seed, cc);
    TrackingController tracker;
    std::deque<WorldState> hist{w};
    for (int k = 0; k < ticks; ++k) {
        Control u = cc.world.limits.full_brake();
        try {
            u = tracker.track(expert_plan(w, *w.ego.route), w.ego.speed);
        } catch (const OffRoute&) {
            tracker.reset();
        }
        w = step_world(w, u);
        hist.push_back(w);
        if (hist.size() > cc.render.history_needed()) hist.pop_front();
    }
    return {name, std::vector<WorldState>(hist.begin(), hist.end()), w.ego.route};
}

namespace {

Scene light_scene(const std::string& name, std::array<double, 3> cycle, double offset) {
    auto map = light_map(60.0, cycle, offset, 120.0);
    WorldState w = solo_world(map, {"main"}, 30.0, 5.0);
    w.npcs.push_back(lane_vehicle(*map, 1, "main", 45.0, 3.0));
    std::vector<WorldState> hist{w};
    for (int k = 0; k < 8; ++k) {
        w = step_world(w, {0, 0});
        hist.push_back(w);
    }
    return {name, hist, w.ego.route};
}

}  // namespace

std::vector<Scene> golden_scenes() {
    auto inter = std::make_shared<const MapData>(MapData::load(repo_path("maps/intersection.json")));
    auto round = std::make_shared<const MapData>(MapData::load(repo_path("maps/roundabout.json")));
    std::vector<Scene> out;
    out.push_back(expert_scene("intersection_s1_t0", inter, 1, 0));
    out.push_back(expert_scene("intersection_s2_t40", inter, 2, 40));
    out.push_back(expert_scene("intersection_s3_t120", inter, 3, 120, 12));
    out.push_back(expert_scene("intersection_s4_t250", inter, 4, 250));
    out.push_back(expert_scene("roundabout_s1_t0", round, 1, 0));
    out.push_back(expert_scene("roundabout_s2_t60", round, 2, 60));
    out.push_back(expert_scene("roundabout_s3_t150", round, 3, 150, 12));
    out.push_back(expert_scene("roundabout_s4_t300", round, 4, 300));
    out.push_back(light_scene("straight_red", {1, 1, 100}, 5.0));
    out.push_back(light_scene("straight_green", {100, 1, 1}, 0.0));
    return out;
}

std::vector<std::pair<std::string, std::uint64_t>> golden_hashes() {
    std::ifstream in(repo_path("tests/golden/raster_hashes.txt"));
    std::vector<std::pair<std::string, std::uint64_t>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string name, hex;
        ss >> name >> hex;
        out.emplace_back(name, std::stoull(hex, nullptr, 16));
    }
    return out;
}

}  // namespace safedrive::testing
