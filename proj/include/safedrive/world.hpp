#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "safedrive/control.hpp"
#include "safedrive/geometry.hpp"
#include "safedrive/map.hpp"
#include "safedrive/rng.hpp"

namespace safedrive {

struct VehicleState {
    int id = 0;
    Pose2D pose;
    double speed = 0.0;
    double half_length = 2.25;
    double half_width = 0.9;
    std::shared_ptr<const Route> route;
    double route_progress = 0.0;
    /// Extend the route through randomly chosen successors as it runs out.
    bool auto_extend = false;
    /// Private branch-choice stream; per vehicle so results do not depend on list order.
    std::uint64_t rng_state = 0;

    OrientedBox box() const { return {pose.position(), pose.yaw, half_length, half_width}; }
};

/// Parameters of the rule-based driving law shared by surrounding vehicles and the expert.
struct DrivingParams {
    double v_cruise = 6.0;
    double kp_speed = 1.0;      ///< cruise speed regulation gain (1/s)
    double d_follow = 8.0;      ///< bumper gap under which car following engages (m)
    double standoff = 2.0;      ///< desired bumper gap to a leader (m)
    double k_gap = 0.5;         ///< gap error gain (1/s^2)
    double k_rel = 1.0;         ///< relative speed gain (1/s)
    double a_brake = 3.0;       ///< comfortable braking used for stop decisions (m/s^2)
    double stop_margin = 0.5;   ///< front bumper stops this far before a stop point (m)
    double steer_lookahead = 5.0;
    double steer_gain = 2.0;
    double leader_lateral = 2.0;    ///< lateral band around the route that counts as "on route" (m)
    double light_lookahead = 80.0;  ///< stop points further ahead are ignored (m)
};

struct WorldConfig {
    double dt = 0.1;
    double wheelbase = 2.5;
    ControlLimits limits;
    DrivingParams driving;
    double route_horizon = 60.0;  ///< auto-extended routes keep at least this much ahead (m)
    double keep_behind = 20.0;    ///< route kept behind the vehicle after trimming (m)
    double half_length = 2.25;
    double half_width = 0.9;
};

struct WorldState {
    std::int64_t tick = 0;
    VehicleState ego;
    std::vector<VehicleState> npcs;
    std::vector<LightPhase> light_states;
    std::shared_ptr<const MapData> map;
    std::uint64_t seed = 0;
    WorldConfig config;

    double time() const { return static_cast<double>(tick) * config.dt; }
};

/// Kinematic bicycle update. Speed is clamped at zero; yaw renormalized.
VehicleState step_vehicle(const VehicleState& state, const Control& u, double dt, double wheelbase);

/// Uniform successor draw from the vehicle's generator.
std::size_t choose_branch(Rng& rng, std::span<const std::size_t> successors);

/// Nearest vehicle ahead on the route.
struct Leader {
    int id = 0;
    double gap = 0.0;    ///< bumper-to-bumper distance along the route (m)
    double speed = 0.0;  ///< leader speed projected on the route tangent (m/s)
};

/// Next point on the route where the vehicle may have to stop.
struct StopTarget {
    double gap = 0.0;  ///< front bumper to stop point, along the route (m)
    bool yellow = false;
};

/// Nearest traffic light ahead that governs one of the route's lanes.
struct GoverningLight {
    std::size_t light = 0;
    double gap = 0.0;
    LightPhase phase = LightPhase::green;
};

std::optional<Leader> find_leader(const WorldState& world, const VehicleState& vehicle, double range);
std::optional<GoverningLight> next_light(const WorldState& world, const VehicleState& vehicle);
/// Nearest red/yellow light or occupied yield line ahead.
std::optional<StopTarget> stop_target(const WorldState& world, const VehicleState& vehicle);

/// Longitudinal law: cruise regulation, PD car following, braking envelope for stops.
double longitudinal_law(double speed, const std::optional<Leader>& leader, const std::optional<StopTarget>& stop,
                        const DrivingParams& p, const ControlLimits& limits);

/// Steering toward the route point `steer_lookahead` meters ahead.
double route_steering(const VehicleState& vehicle, const DrivingParams& p, const ControlLimits& limits);

/// Control for surrounding vehicle `npc_index`, computed from `world` only.
Control npc_control(const WorldState& world, std::size_t npc_index);

/// Builds a vehicle on the lane graph at `at` with heading along the lane.
VehicleState spawn_vehicle(const MapData& map, int id, const LanePosition& at, double speed, const WorldConfig& cfg,
                           std::uint64_t seed, bool auto_extend);
/// Builds a vehicle at the start of a fixed route, displaced laterally by `lateral` meters.
VehicleState spawn_on_route(std::shared_ptr<const Route> route, int id, double speed, double lateral,
                            const WorldConfig& cfg);

/// World with `npc_count` surrounding vehicles placed on seeded spawn points away from the ego.
WorldState make_world(std::shared_ptr<const MapData> map, std::uint64_t seed, const WorldConfig& cfg, VehicleState ego,
                      std::size_t npc_count, double npc_speed);

/// Advances every vehicle one tick from a common snapshot.
WorldState step_world(const WorldState& world, const Control& ego_u);

/// Updates progress along the route and extends/trims auto-extended routes.
void advance_route(const MapData& map, VehicleState& v, const WorldConfig& cfg);

/// FNV-1a digest over the dynamic world state (time, poses, speeds, progress, lights).
std::uint64_t digest(const WorldState& world);

}  // namespace safedrive
