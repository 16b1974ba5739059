#include "safedrive/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "safedrive/errors.hpp"
#include "safedrive/tracking.hpp"

namespace safedrive {

VehicleState step_vehicle(const VehicleState& state, const Control& u, double dt, double wheelbase) {
    VehicleState next = state;
    const double v = state.speed;
    const double th = state.pose.yaw;
    next.pose.x = state.pose.x + v * std::cos(th) * dt;
    next.pose.y = state.pose.y + v * std::sin(th) * dt;
    next.pose.yaw = normalize_angle(th + v * std::tan(u.steer) / wheelbase * dt);
    next.speed = std::max(0.0, v + u.accel * dt);
    return next;
}

std::size_t choose_branch(Rng& rng, std::span<const std::size_t> successors) {
    if (successors.empty()) throw std::invalid_argument("no successors to choose from");
    if (successors.size() == 1) return successors.front();
    return successors[rng.below(successors.size())];
}

namespace {

template <typename F>
void for_each_other(const WorldState& world, int self, F&& f) {
    if (world.ego.id != self) f(world.ego);
    for (const auto& n : world.npcs) {
        if (n.id != self) f(n);
    }
}

}  // namespace

std::optional<Leader> find_leader(const WorldState& world, const VehicleState& vehicle, double range) {
    if (!vehicle.route) return std::nullopt;
    const Polyline& path = vehicle.route->path;
    const double s0 = vehicle.route_progress;
    const double lat_band = world.config.driving.leader_lateral;
    std::optional<Leader> best;
    for_each_other(world, vehicle.id, [&](const VehicleState& o) {
        const Vec2 p = o.pose.position();
        // cheap reject before projecting
        if ((p - vehicle.pose.position()).norm() > range + vehicle.half_length + o.half_length + 5.0) return;
        const double hi = std::min(path.length(), s0 + range + vehicle.half_length + o.half_length + 2.0);
        if (hi <= s0) return;
        const LineProjection pr = path.project(p, s0, hi);
        if (pr.distance > lat_band || pr.arclength <= s0 + 1e-6) return;
        const double gap = pr.arclength - s0 - vehicle.half_length - o.half_length;
        if (gap > range) return;
        const double tangent = path.heading_at(pr.arclength);
        const double along = o.speed * std::cos(o.pose.yaw - tangent);
        if (!best || gap < best->gap || (gap == best->gap && o.id < best->id)) best = Leader{o.id, gap, along};
    });
    return best;
}

namespace {

/// Route arclength of `p` restricted to the given span, if it projects near the route.
std::optional<double> span_station(const Route& route, const RouteSpan& span, const Vec2& p) {
    const LineProjection pr = route.path.project(p, std::max(0.0, span.route_begin - 1.0), span.route_end + 1.0);
    if (pr.distance > 3.0) return std::nullopt;
    return pr.arclength;
}

template <typename F>
void for_each_span_ahead(const VehicleState& v, double lookahead, F&& f) {
    const Route& r = *v.route;
    for (const auto& sp : r.spans) {
        if (sp.route_end < v.route_progress) continue;
        if (sp.route_begin > v.route_progress + lookahead) break;
        if (!f(sp)) break;
    }
}

bool zone_occupied(const WorldState& world, std::size_t yield_index, int self) {
    const MapData& map = *world.map;
    const YieldRule& y = map.yields()[yield_index];
    bool occupied = false;
    for (std::size_t z = 0; z < y.zones.size() && !occupied; ++z) {
        const Lane& lane = map.lane(map.zone_lane(yield_index, z));
        const ConflictZone& zone = y.zones[z];
        for_each_other(world, self, [&](const VehicleState& o) {
            if (occupied) return;
            const LineProjection pr = lane.centerline.project(o.pose.position());
            if (pr.distance <= 0.5 * lane.width + 0.5 && pr.arclength >= zone.s_from && pr.arclength <= zone.s_to)
                occupied = true;
        });
    }
    return occupied;
}

}  // namespace

std::optional<GoverningLight> next_light(const WorldState& world, const VehicleState& vehicle) {
    if (!vehicle.route || !world.map) return std::nullopt;
    const MapData& map = *world.map;
    std::optional<GoverningLight> best;
    for_each_span_ahead(vehicle, world.config.driving.light_lookahead, [&](const RouteSpan& sp) {
        for (std::size_t li : map.lights_on(sp.lane)) {
            const auto st = span_station(*vehicle.route, sp, map.lights()[li].stop_point);
            if (!st || *st <= vehicle.route_progress) continue;
            const double gap = *st - vehicle.route_progress - vehicle.half_length;
            if (!best || gap < best->gap) best = GoverningLight{li, gap, world.light_states.at(li)};
        }
        return !best;
    });
    return best;
}

std::optional<StopTarget> stop_target(const WorldState& world, const VehicleState& vehicle) {
    if (!vehicle.route || !world.map) return std::nullopt;
    const MapData& map = *world.map;
    std::optional<StopTarget> best;
    auto offer = [&](double gap, bool yellow) {
        if (!best || gap < best->gap) best = StopTarget{gap, yellow};
    };
    for_each_span_ahead(vehicle, world.config.driving.light_lookahead, [&](const RouteSpan& sp) {
        for (std::size_t li : map.lights_on(sp.lane)) {
            const LightPhase ph = world.light_states.at(li);
            if (ph == LightPhase::green) continue;
            const auto st = span_station(*vehicle.route, sp, map.lights()[li].stop_point);
            if (!st || *st <= vehicle.route_progress) continue;
            offer(*st - vehicle.route_progress - vehicle.half_length, ph == LightPhase::yellow);
        }
        for (std::size_t yi : map.yields_on(sp.lane)) {
            const auto st = span_station(*vehicle.route, sp, map.yields()[yi].stop_point);
            if (!st || *st <= vehicle.route_progress) continue;
            if (!zone_occupied(world, yi, vehicle.id)) continue;
            offer(*st - vehicle.route_progress - vehicle.half_length, false);
        }
        return !best;
    });
    return best;
}

double longitudinal_law(double speed, const std::optional<Leader>& leader, const std::optional<StopTarget>& stop,
                        const DrivingParams& p, const ControlLimits& limits) {
    const double v = speed;
    double a = p.kp_speed * (p.v_cruise - v);
    if (leader && leader->gap <= p.d_follow) {
        const double vl = std::max(0.0, leader->speed);
        double af = p.k_gap * (leader->gap - p.standoff) + p.k_rel * (vl - v);
        if (v > vl) {
            const double room = std::max(leader->gap - p.standoff, 0.1);
            af = std::min(af, -(v * v - vl * vl) / (2.0 * room));
        }
        a = std::min(a, af);
    }
    if (stop) {
        const double room = stop->gap - p.stop_margin;
        const bool can_stop = room > 0.0 ? v * v / (2.0 * room) <= limits.accel_max : v < 0.5;
        if (!(stop->yellow && !can_stop) && room <= v * v / (2.0 * p.a_brake)) {
            a = std::min(a, room > 0.05 ? -v * v / (2.0 * room) : -limits.accel_max);
        }
    }
    return std::clamp(a, -limits.accel_max, limits.accel_max);
}

double route_steering(const VehicleState& vehicle, const DrivingParams& p, const ControlLimits& limits) {
    if (!vehicle.route) return 0.0;
    const Vec2 target = vehicle.route->path.point_at(vehicle.route_progress + p.steer_lookahead);
    try {
        const double e = signed_heading_error(to_local(vehicle.pose, target));
        return std::clamp(p.steer_gain * e, -limits.steer_max, limits.steer_max);
    } catch (const DegenerateTarget&) {
        return 0.0;
    }
}

Control npc_control(const WorldState& world, std::size_t npc_index) {
    const VehicleState& v = world.npcs.at(npc_index);
    const auto& p = world.config.driving;
    const auto leader = find_leader(world, v, p.d_follow);
    const auto stop = stop_target(world, v);
    return {longitudinal_law(v.speed, leader, stop, p, world.config.limits), route_steering(v, p, world.config.limits)};
}

void advance_route(const MapData& map, VehicleState& v, const WorldConfig& cfg) {
    if (!v.route) return;
    const Route& r = *v.route;
    const double lo = std::max(0.0, v.route_progress - 2.0);
    const double hi = std::min(r.path.length(), v.route_progress + v.speed * cfg.dt + 5.0);
    v.route_progress = std::max(v.route_progress, r.path.project(v.pose.position(), lo, hi).arclength);
    if (!v.auto_extend) return;

    Route next = r;
    bool changed = false;
    Rng rng(v.rng_state);
    while (next.path.length() - v.route_progress < cfg.route_horizon) {
        const auto& succ = map.successors(next.spans.back().lane);
        if (succ.empty()) break;
        next = extend_route(map, next, choose_branch(rng, succ));
        changed = true;
    }
    v.rng_state = rng.state();
    if (v.route_progress - cfg.keep_behind > next.spans.front().route_end) {
        auto [trimmed, shift] = trim_route(map, next, v.route_progress, cfg.keep_behind);
        next = std::move(trimmed);
        v.route_progress -= shift;
        changed = true;
    }
    if (changed) v.route = std::make_shared<const Route>(std::move(next));
}

VehicleState spawn_vehicle(const MapData& map, int id, const LanePosition& at, double speed, const WorldConfig& cfg,
                           std::uint64_t seed, bool auto_extend) {
    const std::size_t lane = map.lane_index(at.lane);
    const Polyline& c = map.lane(lane).centerline;
    VehicleState v;
    v.id = id;
    v.speed = speed;
    v.half_length = cfg.half_length;
    v.half_width = cfg.half_width;
    v.auto_extend = auto_extend;
    v.rng_state = mix64(seed, static_cast<std::uint64_t>(id) + 1);
    const double s = std::min(at.s, c.length() - 1e-3);
    const Vec2 p = c.point_at(s);
    v.pose = {p.x, p.y, c.heading_at(s)};
    v.route = std::make_shared<const Route>(build_route(map, {lane}, s));
    v.route_progress = 0.0;
    if (auto_extend) advance_route(map, v, cfg);
    return v;
}

VehicleState spawn_on_route(std::shared_ptr<const Route> route, int id, double speed, double lateral,
                            const WorldConfig& cfg) {
    VehicleState v;
    v.id = id;
    v.speed = speed;
    v.half_length = cfg.half_length;
    v.half_width = cfg.half_width;
    const double yaw = route->path.heading_at(0.0);
    const Vec2 p = route->path.point_at(0.0) + Vec2{-std::sin(yaw), std::cos(yaw)} * lateral;
    v.pose = {p.x, p.y, yaw};
    v.route = std::move(route);
    return v;
}

WorldState make_world(std::shared_ptr<const MapData> map, std::uint64_t seed, const WorldConfig& cfg, VehicleState ego,
                      std::size_t npc_count, double npc_speed) {
    WorldState w;
    w.map = map;
    w.seed = seed;
    w.config = cfg;
    w.ego = std::move(ego);
    w.ego.id = 0;

    std::vector<std::size_t> order(map->spawn_points().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix64(seed, 0x5eedULL));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::vector<Vec2> taken{w.ego.pose.position()};
    std::vector<double> clearance{15.0};  // keep spawns out of the ego's immediate surroundings
    for (std::size_t idx : order) {
        if (w.npcs.size() >= npc_count) break;
        const SpawnPoint& sp = map->spawn_points()[idx];
        const Lane& lane = map->lane(map->lane_index(sp.lane));
        const Vec2 p = lane.centerline.point_at(sp.s);
        bool free = true;
        for (std::size_t k = 0; k < taken.size(); ++k) free = free && (p - taken[k]).norm() >= clearance[k];
        if (!free) continue;
        taken.push_back(p);
        clearance.push_back(10.0);
        w.npcs.push_back(spawn_vehicle(*map, static_cast<int>(w.npcs.size()) + 1, {sp.lane, sp.s}, npc_speed, cfg,
                                       seed, true));
    }
    w.light_states.clear();
    for (const auto& l : map->lights()) w.light_states.push_back(light_state(l, w.time()));
    return w;
}

WorldState step_world(const WorldState& world, const Control& ego_u) {
    const WorldConfig& cfg = world.config;
    std::vector<Control> controls;
    controls.reserve(world.npcs.size());
    for (std::size_t i = 0; i < world.npcs.size(); ++i) controls.push_back(npc_control(world, i));

    WorldState next = world;
    next.ego = step_vehicle(world.ego, cfg.limits.clamp(ego_u), cfg.dt, cfg.wheelbase);
    advance_route(*world.map, next.ego, cfg);
    for (std::size_t i = 0; i < world.npcs.size(); ++i) {
        next.npcs[i] = step_vehicle(world.npcs[i], controls[i], cfg.dt, cfg.wheelbase);
        advance_route(*world.map, next.npcs[i], cfg);
    }
    next.tick = world.tick + 1;
    for (std::size_t i = 0; i < world.map->lights().size(); ++i)
        next.light_states[i] = light_state(world.map->lights()[i], next.time());
    return next;
}

namespace {

struct Fnv {
    std::uint64_t h = 1469598103934665603ULL;
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    }
    void f64(double d) {
        std::uint64_t u;
        std::memcpy(&u, &d, sizeof u);
        bytes(&u, sizeof u);
    }
    void vehicle(const VehicleState& v) {
        bytes(&v.id, sizeof v.id);
        f64(v.pose.x);
        f64(v.pose.y);
        f64(v.pose.yaw);
        f64(v.speed);
        f64(v.route_progress);
    }
};

}  // namespace

std::uint64_t digest(const WorldState& world) {
    Fnv f;
    f.bytes(&world.tick, sizeof world.tick);
    f.vehicle(world.ego);
    for (const auto& n : world.npcs) f.vehicle(n);
    for (LightPhase l : world.light_states) {
        const int v = static_cast<int>(l);
        f.bytes(&v, sizeof v);
    }
    return f.h;
}

}  // namespace safedrive
