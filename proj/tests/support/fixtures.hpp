#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "safedrive/birdview.hpp"
#include "safedrive/map.hpp"
#include "safedrive/world.hpp"

namespace safedrive::testing {

/// Absolute path of a file inside the source tree.
std::string repo_path(const std::string& relative);

/// One straight lane "main" along +x from the origin.
std::shared_ptr<const MapData> straight_map(double length = 300.0);

/// Straight lane with light "L" at x = stop_x governing it.
std::shared_ptr<const MapData> light_map(double stop_x, std::array<double, 3> cycle, double phase_offset = 0.0,
                                         double length = 300.0);

/// Lane "el" running +x to (50, 0) then +y to (50, 50).
std::shared_ptr<const MapData> l_map();

/// a -> {b, c} -> d, where `b` is longer than `c` by `extra` meters.
std::shared_ptr<const MapData> diamond_map(double extra = 20.0);

/// Quarter-circle lane "arc" of the given radius turning left, preceded by 40 m straight.
std::shared_ptr<const MapData> arc_map(double radius = 20.0);

/// World with the ego on a fixed route over lanes of `map`, no surrounding vehicles.
WorldState solo_world(std::shared_ptr<const MapData> map, const std::vector<std::string>& lanes, double start_s,
                      double speed, double lateral = 0.0, const WorldConfig& cfg = {});

/// Surrounding vehicle following a fixed route from `start_s` on a single lane.
VehicleState lane_vehicle(const MapData& map, int id, const std::string& lane, double s, double speed,
                          const WorldConfig& cfg = {});

/// Closed-loop tracking of a reference polyline at constant speed: each tick the tracker
/// gets H points spaced speed * dt along the reference from the ego's foot point.
/// Returns |lateral error| per tick.
std::vector<double> track_reference(const Polyline& reference, Pose2D start, double speed, double seconds);

/// Rendered fixture: history window (oldest first) and the route drawn with it.
struct Scene {
    std::string name;
    std::vector<WorldState> history;
    std::shared_ptr<const Route> route;
};

/// History window after driving the expert for `ticks` ticks from a collection start.
Scene expert_scene(const std::string& name, std::shared_ptr<const MapData> map, std::uint64_t seed, int ticks,
                   std::size_t npcs = 8);

/// The ten scenes with stored raster hashes.
std::vector<Scene> golden_scenes();

/// "name hash" pairs from tests/golden/raster_hashes.txt.
std::vector<std::pair<std::string, std::uint64_t>> golden_hashes();

}  // namespace safedrive::testing
