#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safedrive/birdview.hpp"
#include "safedrive/policy.hpp"
#include "safedrive/safety.hpp"
#include "safedrive/tracking.hpp"
#include "safedrive/world.hpp"

namespace safedrive {

/// One start/goal pair. `lateral` displaces the ego sideways at spawn (m, left positive).
struct RouteSpec {
    LanePosition start;
    LanePosition goal;
    double lateral = 0.0;
};

struct Scenario {
    std::string name;
    std::string map_path;
    std::shared_ptr<const MapData> map;
    std::uint64_t seed = 0;
    std::vector<RouteSpec> routes;  ///< episode i drives routes[i % size]
    std::size_t npc_count = 8;
    double npc_speed = 4.0;
    double start_speed = 0.0;
    double time_limit = 120.0;
    double success_window = 10.0;

    /// Relative map paths resolve against `base_dir`. Throws MapError when a route does not resolve.
    static Scenario from_json(const nlohmann::json& j, const std::string& base_dir = ".");
    static Scenario load(const std::string& path);
};

enum class Outcome { success, collision, out_of_lane, timeout };
enum class EventType { collision, out_of_lane };
const char* to_string(Outcome o);
const char* to_string(EventType e);

struct Event {
    std::int64_t tick = 0;
    double t = 0.0;
    EventType type = EventType::collision;
    bool operator==(const Event&) const = default;
};

struct InfractionParams {
    double margin = 1.0;       ///< beyond the lane half-width (m)
    int debounce_ticks = 5;    ///< consecutive ticks before an out-of-lane event
    int rearm_ticks = 10;      ///< clear ticks before the same event can fire again
};

/// Stateful per-episode event detector.
class InfractionDetector {
public:
    explicit InfractionDetector(InfractionParams p = {}) : p_(p) {}

    /// Feeds raw per-tick conditions; returns the events that fire on this tick.
    std::vector<Event> update(std::int64_t tick, double t, bool overlapping, bool outside);
    /// Evaluates the conditions on `world` against `route` and feeds them.
    std::vector<Event> update(const WorldState& world, const Route& route);

    const InfractionParams& params() const { return p_; }

private:
    struct Channel {
        bool armed = true;
        int on = 0;
        int off = 0;
    };
    static bool step(Channel& c, bool condition, int needed, int rearm);

    InfractionParams p_;
    Channel collision_;
    Channel lane_;
};

/// Ego lateral offset from the route near its progress and the allowed magnitude.
std::pair<double, double> route_deviation(const WorldState& world, const Route& route, double margin);
bool ego_collides(const WorldState& world);

struct TickRecord {
    std::int64_t tick = 0;
    std::uint64_t world_digest = 0;
    Trajectory plan;
    Control raw;
    Control filtered;
    double phi_max = -std::numeric_limits<double>::infinity();
    bool filter_active = false;
    bool infeasible = false;
    bool planner_fault = false;
};

struct EpisodeLog {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t route_index = 0;
    std::vector<TickRecord> ticks;
    std::vector<Event> events;
    Outcome outcome = Outcome::timeout;
    double distance_driven = 0.0;  ///< meters
    double route_length = 0.0;

    /// FNV-1a over every logged quantity.
    std::uint64_t digest() const;
    std::size_t count(EventType e) const;
};

struct EvalConfig {
    WorldConfig world;
    TrackerConfig tracker;
    SafetyParams safety;
    RenderConfig render;
    InfractionParams infractions;

    static EvalConfig from_json(const nlohmann::json& j);
    static EvalConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

/// Closed loop: render, plan, track, optionally filter, step; until success, the first
/// infraction, or the time limit. Planner failures become hold-brake ticks.
EpisodeLog run_episode(const Scenario& scenario, Planner& planner, const EvalConfig& cfg, bool safety_on,
                       std::size_t episode = 0);

using PlannerFactory = std::function<std::unique_ptr<Planner>(std::size_t episode)>;
std::vector<EpisodeLog> run_suite(const Scenario& scenario, const PlannerFactory& make, const EvalConfig& cfg,
                                  bool safety_on, std::size_t episodes);

/// successes / total. Throws std::invalid_argument on an empty list.
double success_rate(std::span<const EpisodeLog> logs);

struct InfractionDistance {
    double km_per_collision = std::numeric_limits<double>::infinity();
    double km_per_out_of_lane = std::numeric_limits<double>::infinity();
    double total_km = 0.0;
    std::size_t collisions = 0;
    std::size_t out_of_lane = 0;
};
/// Total distance over event count per type; infinity when a type never occurred.
InfractionDistance infraction_distance(std::span<const EpisodeLog> logs);

/// Per-episode outcomes plus aggregate metrics. Infinite distances are reported as "no-infraction".
nlohmann::json make_report(std::span<const EpisodeLog> logs);

}  // namespace safedrive
