#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "safedrive/geometry.hpp"

namespace safedrive {

enum class Marking { none, white, yellow };

struct Lane {
    std::string id;
    Polyline centerline;
    double width = 3.5;
    Marking marking_left = Marking::none;
    Marking marking_right = Marking::none;
    std::vector<std::string> successors;
};

enum class LightPhase { green, yellow, red };

struct TrafficLight {
    std::string id;
    Vec2 stop_point;
    std::vector<std::string> governed_lanes;
    std::array<double, 3> cycle{};  ///< green, yellow, red durations in seconds
    double phase_offset = 0.0;
};

/// Stretch of a lane, in lane arclength, that a yielding vehicle must see empty.
struct ConflictZone {
    std::string lane;
    double s_from = 0.0;
    double s_to = 0.0;
};

/// Give-way line: vehicles on `lane` hold at `stop_point` while any zone is occupied.
struct YieldRule {
    std::string id;
    std::string lane;
    Vec2 stop_point;
    std::vector<ConflictZone> zones;
};

struct SpawnPoint {
    std::string lane;
    double s = 0.0;
};

/// Position on the lane graph.
struct LanePosition {
    std::string lane;
    double s = 0.0;
};

/// Static road network. Lane, light and yield references are resolved to indices on load.
class MapData {
public:
    MapData() = default;
    MapData(std::vector<Lane> lanes, std::vector<TrafficLight> lights, std::vector<YieldRule> yields,
            std::vector<SpawnPoint> spawns);

    static MapData from_json(const nlohmann::json& j);
    static MapData load(const std::string& path);
    nlohmann::json to_json() const;

    const std::vector<Lane>& lanes() const { return lanes_; }
    const std::vector<TrafficLight>& lights() const { return lights_; }
    const std::vector<YieldRule>& yields() const { return yields_; }
    const std::vector<SpawnPoint>& spawn_points() const { return spawns_; }

    /// Throws MapError for unknown ids.
    std::size_t lane_index(const std::string& id) const;
    const Lane& lane(std::size_t index) const { return lanes_.at(index); }
    const std::vector<std::size_t>& successors(std::size_t lane) const { return successor_index_.at(lane); }
    /// Indices of lights governing the lane.
    const std::vector<std::size_t>& lights_on(std::size_t lane) const { return lights_by_lane_.at(lane); }
    const std::vector<std::size_t>& yields_on(std::size_t lane) const { return yields_by_lane_.at(lane); }
    std::size_t zone_lane(std::size_t yield, std::size_t zone) const { return zone_lanes_.at(yield).at(zone); }

    /// Lane marking polylines with their colors, for rendering.
    struct MarkingLine {
        Polyline line;
        Marking color;
    };
    const std::vector<MarkingLine>& marking_lines() const { return markings_; }

    std::string source_path;

private:
    void index();

    std::vector<Lane> lanes_;
    std::vector<TrafficLight> lights_;
    std::vector<YieldRule> yields_;
    std::vector<SpawnPoint> spawns_;
    std::unordered_map<std::string, std::size_t> lane_ids_;
    std::vector<std::vector<std::size_t>> successor_index_;
    std::vector<std::vector<std::size_t>> lights_by_lane_;
    std::vector<std::vector<std::size_t>> yields_by_lane_;
    std::vector<std::vector<std::size_t>> zone_lanes_;
    std::vector<MarkingLine> markings_;
};

LightPhase light_state(const TrafficLight& light, double time);
const char* to_string(LightPhase p);

/// One lane's contribution to a route. Lane arclength at route position s is
/// lane_begin + (s - route_begin).
struct RouteSpan {
    std::size_t lane = 0;
    double route_begin = 0.0;
    double route_end = 0.0;
    double lane_begin = 0.0;
};

/// Drivable path plus the lanes it was built from.
struct Route {
    Polyline path;
    std::vector<RouteSpan> spans;

    /// Span containing route arclength s (last span when s is past the end).
    const RouteSpan& span_at(double s) const;
};

/// Concatenates lane centerlines from `start` along `lanes` (lanes[0] is start.lane).
/// The last lane is clipped at `end_s` when given.
Route build_route(const MapData& map, const std::vector<std::size_t>& lanes, double start_s,
                  std::optional<double> end_s = std::nullopt);

/// Appends one successor lane to a route.
Route extend_route(const MapData& map, const Route& route, std::size_t next_lane);

/// Drops spans that end more than `keep_behind` meters before `progress`.
/// Returns the trimmed route and the arclength shift applied.
std::pair<Route, double> trim_route(const MapData& map, const Route& route, double progress, double keep_behind);

/// Lane sequence of the shortest path (by centerline length) from start to goal.
/// Throws NoRoute when the goal is unreachable.
std::vector<std::size_t> shortest_lane_path(const MapData& map, const LanePosition& start, const LanePosition& goal);

/// Shortest route as a waypoint sequence resampled at 1 m.
Route plan_route(const MapData& map, const LanePosition& start, const LanePosition& goal);

}  // namespace safedrive
