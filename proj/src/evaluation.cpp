#include "safedrive/evaluation.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>

#include "safedrive/errors.hpp"

namespace safedrive {

namespace {

LanePosition lane_position(const nlohmann::json& j) { return {j.at("lane").get<std::string>(), j.at("s").get<double>()}; }

}  // namespace

Scenario Scenario::from_json(const nlohmann::json& j, const std::string& base_dir) {
    Scenario s;
    s.name = j.value("name", "scenario");
    std::filesystem::path mp = j.at("map").get<std::string>();
    if (mp.is_relative()) mp = std::filesystem::path(base_dir) / mp;
    s.map_path = mp.lexically_normal().string();
    s.map = std::make_shared<const MapData>(MapData::load(s.map_path));
    s.seed = j.value("seed", std::uint64_t{0});
    s.npc_count = j.value("npc_count", std::size_t{8});
    s.npc_speed = j.value("npc_speed", 4.0);
    s.start_speed = j.value("start_speed", 0.0);
    s.time_limit = j.value("time_limit", 120.0);
    s.success_window = j.value("success_window", 10.0);
    if (j.contains("routes")) {
        for (const auto& r : j.at("routes"))
            s.routes.push_back({lane_position(r.at("start")), lane_position(r.at("goal")), r.value("lateral", 0.0)});
    } else {
        s.routes.push_back({lane_position(j.at("start")), lane_position(j.at("goal")), j.value("lateral", 0.0)});
    }
    if (s.routes.empty()) throw MapError("scenario '" + s.name + "' has no routes");
    for (const auto& r : s.routes) plan_route(*s.map, r.start, r.goal);
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read scenario " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j, std::filesystem::path(path).parent_path().string());
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::success: return "success";
        case Outcome::collision: return "collision";
        case Outcome::out_of_lane: return "out_of_lane";
        case Outcome::timeout: return "timeout";
    }
    return "?";
}

const char* to_string(EventType e) { return e == EventType::collision ? "collision" : "out_of_lane"; }

bool InfractionDetector::step(Channel& c, bool condition, int needed, int rearm) {
    if (condition) {
        c.off = 0;
        ++c.on;
        if (c.armed && c.on >= needed) {
            c.armed = false;
            return true;
        }
        return false;
    }
    c.on = 0;
    if (!c.armed && ++c.off >= rearm) {
        c.armed = true;
        c.off = 0;
    }
    return false;
}

std::vector<Event> InfractionDetector::update(std::int64_t tick, double t, bool overlapping, bool outside) {
    std::vector<Event> out;
    if (step(collision_, overlapping, 1, p_.rearm_ticks)) out.push_back({tick, t, EventType::collision});
    if (step(lane_, outside, p_.debounce_ticks, p_.rearm_ticks)) out.push_back({tick, t, EventType::out_of_lane});
    return out;
}

std::pair<double, double> route_deviation(const WorldState& world, const Route& route, double margin) {
    const Vec2 p = world.ego.pose.position();
    const double s = world.ego.route.get() == &route ? world.ego.route_progress : route.path.project(p).arclength;
    const LineProjection pr = route.path.project(p, std::max(0.0, s - 5.0), s + 10.0);
    double half = 1.75;
    if (world.map && !route.spans.empty()) half = 0.5 * world.map->lane(route.span_at(pr.arclength).lane).width;
    return {pr.offset, half + margin};
}

bool ego_collides(const WorldState& world) {
    const OrientedBox ego = world.ego.box();
    for (const auto& n : world.npcs) {
        if (boxes_overlap(ego, n.box())) return true;
    }
    return false;
}

std::vector<Event> InfractionDetector::update(const WorldState& world, const Route& route) {
    const auto [offset, allowed] = route_deviation(world, route, p_.margin);
    return update(world.tick, world.time(), ego_collides(world), std::abs(offset) > allowed);
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
    template <typename T>
    void pod(const T& v) {
        bytes(&v, sizeof v);
    }
};

}  // namespace

std::uint64_t EpisodeLog::digest() const {
    Fnv f;
    f.pod(seed);
    f.pod(route_index);
    for (const auto& t : ticks) {
        f.pod(t.tick);
        f.pod(t.world_digest);
        for (const Vec2& p : t.plan.points) {
            f.pod(p.x);
            f.pod(p.y);
        }
        f.pod(t.raw.accel);
        f.pod(t.raw.steer);
        f.pod(t.filtered.accel);
        f.pod(t.filtered.steer);
        f.pod(t.phi_max);
        const std::uint8_t flags = (t.filter_active ? 1 : 0) | (t.infeasible ? 2 : 0) | (t.planner_fault ? 4 : 0);
        f.pod(flags);
    }
    for (const auto& e : events) {
        f.pod(e.tick);
        f.pod(e.type);
    }
    f.pod(outcome);
    f.pod(distance_driven);
    return f.h;
}

std::size_t EpisodeLog::count(EventType e) const {
    std::size_t n = 0;
    for (const auto& ev : events) n += ev.type == e ? 1 : 0;
    return n;
}

namespace {

PidGains gains_from(const nlohmann::json& j, PidGains def) {
    if (j.is_array()) return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
    return {j.value("kp", def.kp), j.value("ki", def.ki), j.value("kd", def.kd)};
}

nlohmann::json gains_json(const PidGains& g) { return {{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}}; }

}  // namespace

EvalConfig EvalConfig::from_json(const nlohmann::json& j) {
    EvalConfig c;
    if (j.contains("world")) {
        const auto& w = j["world"];
        c.world.dt = w.value("dt", c.world.dt);
        c.world.wheelbase = w.value("wheelbase", c.world.wheelbase);
        c.world.limits.accel_max = w.value("accel_max", c.world.limits.accel_max);
        c.world.limits.steer_max = w.value("steer_max", c.world.limits.steer_max);
        auto& d = c.world.driving;
        d.v_cruise = w.value("v_cruise", d.v_cruise);
        d.d_follow = w.value("d_follow", d.d_follow);
        d.standoff = w.value("standoff", d.standoff);
        d.a_brake = w.value("a_brake", d.a_brake);
    }
    if (j.contains("tracker")) {
        const auto& t = j["tracker"];
        c.tracker.m = t.value("m", c.tracker.m);
        if (t.contains("longitudinal")) c.tracker.longitudinal = gains_from(t["longitudinal"], c.tracker.longitudinal);
        if (t.contains("lateral")) c.tracker.lateral = gains_from(t["lateral"], c.tracker.lateral);
        c.tracker.integral_max = t.value("integral_max", c.tracker.integral_max);
        c.tracker.target_epsilon = t.value("target_epsilon", c.tracker.target_epsilon);
        c.tracker.hold_brake = t.value("hold_brake", c.tracker.hold_brake);
    }
    if (j.contains("safety")) {
        const auto& s = j["safety"];
        auto& p = c.safety;
        p.D = s.value("D", p.D);
        p.alpha = s.value("alpha", p.alpha);
        p.beta = s.value("beta", p.beta);
        p.ell = s.value("ell", p.ell);
        p.eta = s.value("eta", p.eta);
        if (s.contains("W")) {
            const auto& w = s["W"];
            p.W = {w.at(0).at(0).get<double>(), w.at(0).at(1).get<double>(), w.at(1).at(1).get<double>()};
            if (w.at(1).at(0).get<double>() != p.W.b) throw std::invalid_argument("safety.W must be symmetric");
        }
        p.sensing_radius = s.value("sensing_radius", p.sensing_radius);
        p.rear_ignore = s.value("rear_ignore", p.rear_ignore);
        if (!p.W.positive_definite()) throw std::invalid_argument("safety.W must be positive definite");
    }
    if (j.contains("infractions")) {
        const auto& i = j["infractions"];
        c.infractions.margin = i.value("margin", c.infractions.margin);
        c.infractions.debounce_ticks = i.value("debounce_ticks", c.infractions.debounce_ticks);
        c.infractions.rearm_ticks = i.value("rearm_ticks", c.infractions.rearm_ticks);
    }
    c.tracker.dt = c.world.dt;
    c.tracker.limits = c.world.limits;
    c.safety.wheelbase = c.world.wheelbase;
    c.safety.limits = c.world.limits;
    return c;
}

EvalConfig EvalConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

nlohmann::json EvalConfig::to_json() const {
    return {{"world",
             {{"dt", world.dt},
              {"wheelbase", world.wheelbase},
              {"accel_max", world.limits.accel_max},
              {"steer_max", world.limits.steer_max},
              {"v_cruise", world.driving.v_cruise},
              {"d_follow", world.driving.d_follow},
              {"standoff", world.driving.standoff},
              {"a_brake", world.driving.a_brake}}},
            {"tracker",
             {{"m", tracker.m},
              {"longitudinal", gains_json(tracker.longitudinal)},
              {"lateral", gains_json(tracker.lateral)},
              {"integral_max", tracker.integral_max},
              {"target_epsilon", tracker.target_epsilon},
              {"hold_brake", tracker.hold_brake}}},
            {"safety",
             {{"D", safety.D},
              {"alpha", safety.alpha},
              {"beta", safety.beta},
              {"ell", safety.ell},
              {"eta", safety.eta},
              {"W", {{safety.W.a, safety.W.b}, {safety.W.b, safety.W.c}}},
              {"sensing_radius", safety.sensing_radius},
              {"rear_ignore", safety.rear_ignore}}},
            {"infractions",
             {{"margin", infractions.margin},
              {"debounce_ticks", infractions.debounce_ticks},
              {"rearm_ticks", infractions.rearm_ticks}}}};
}

EpisodeLog run_episode(const Scenario& scenario, Planner& planner, const EvalConfig& cfg, bool safety_on,
                       std::size_t episode) {
    const std::size_t ri = episode % scenario.routes.size();
    const RouteSpec& spec = scenario.routes[ri];
    const MapData& map = *scenario.map;
    auto route = std::make_shared<const Route>(plan_route(map, spec.start, spec.goal));
    const std::uint64_t seed = scenario.seed + episode;

    VehicleState ego = spawn_on_route(route, 0, scenario.start_speed, spec.lateral, cfg.world);
    WorldState world = make_world(scenario.map, seed, cfg.world, std::move(ego), scenario.npc_count,
                                  scenario.npc_speed);
    advance_route(map, world.ego, cfg.world);

    EpisodeLog log;
    log.scenario = scenario.name;
    log.seed = seed;
    log.route_index = ri;
    log.route_length = route->path.length();

    TrackingController tracker(cfg.tracker);
    InfractionDetector detector(cfg.infractions);
    std::deque<WorldState> history;
    const auto max_ticks = static_cast<std::int64_t>(std::llround(scenario.time_limit / cfg.world.dt));
    const double goal_s = route->path.length() - scenario.success_window;

    while (world.tick < max_ticks) {
        TickRecord rec;
        rec.tick = world.tick;
        rec.world_digest = digest(world);

        Observation obs;
        obs.ego_speed = world.ego.speed;
        obs.world = &world;
        obs.route = route.get();
        std::optional<RasterImage> raster;
        if (planner.needs_raster()) {
            history.push_back(world);
            if (history.size() > cfg.render.history_needed()) history.pop_front();
            const std::vector<WorldState> window(history.begin(), history.end());
            raster = render(window, *route, cfg.render);
            obs.raster = &*raster;
        }
        try {
            rec.plan = planner.plan(obs);
            if (rec.plan.horizon() < cfg.tracker.m + 1 || !rec.plan.finite())
                throw MalformedResponse("planner returned an unusable trajectory");
            rec.raw = tracker.track(rec.plan, world.ego.speed);
        } catch (const PlannerTimeout&) {
            rec.planner_fault = true;
        } catch (const MalformedResponse&) {
            rec.planner_fault = true;
        } catch (const OffRoute&) {
            rec.planner_fault = true;
        }
        if (rec.planner_fault) {
            tracker.reset();
            rec.raw = cfg.world.limits.clamp({cfg.tracker.hold_brake, 0.0});
        }

        rec.filtered = rec.raw;
        if (safety_on) {
            const SafeControl sc = safe_control(world, rec.raw, cfg.safety);
            rec.filtered = sc.u;
            rec.filter_active = sc.active;
            rec.infeasible = sc.infeasible;
            rec.phi_max = sc.phi_max;
        }
        log.ticks.push_back(std::move(rec));

        const Vec2 before = world.ego.pose.position();
        world = step_world(world, log.ticks.back().filtered);
        log.distance_driven += (world.ego.pose.position() - before).norm();

        const auto events = detector.update(world, *route);
        log.events.insert(log.events.end(), events.begin(), events.end());
        if (!events.empty()) {
            log.outcome = events.front().type == EventType::collision ? Outcome::collision : Outcome::out_of_lane;
            return log;
        }
        if (world.ego.route_progress >= goal_s) {
            log.outcome = Outcome::success;
            return log;
        }
    }
    log.outcome = Outcome::timeout;
    return log;
}

std::vector<EpisodeLog> run_suite(const Scenario& scenario, const PlannerFactory& make, const EvalConfig& cfg,
                                  bool safety_on, std::size_t episodes) {
    std::vector<EpisodeLog> logs;
    logs.reserve(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        auto planner = make(i);
        logs.push_back(run_episode(scenario, *planner, cfg, safety_on, i));
    }
    return logs;
}

double success_rate(std::span<const EpisodeLog> logs) {
    if (logs.empty()) throw std::invalid_argument("success rate of an empty list");
    std::size_t ok = 0;
    for (const auto& l : logs) ok += l.outcome == Outcome::success ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(logs.size());
}

InfractionDistance infraction_distance(std::span<const EpisodeLog> logs) {
    if (logs.empty()) throw std::invalid_argument("infraction distance of an empty list");
    InfractionDistance out;
    for (const auto& l : logs) {
        out.total_km += l.distance_driven / 1000.0;
        out.collisions += l.count(EventType::collision);
        out.out_of_lane += l.count(EventType::out_of_lane);
    }
    if (out.collisions > 0) out.km_per_collision = out.total_km / static_cast<double>(out.collisions);
    if (out.out_of_lane > 0) out.km_per_out_of_lane = out.total_km / static_cast<double>(out.out_of_lane);
    return out;
}

namespace {

nlohmann::json distance_json(double km) {
    if (std::isinf(km)) return "no-infraction";
    return km;
}

}  // namespace

nlohmann::json make_report(std::span<const EpisodeLog> logs) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& l : logs) {
        nlohmann::json events = nlohmann::json::array();
        for (const auto& e : l.events) events.push_back({{"tick", e.tick}, {"t", e.t}, {"type", to_string(e.type)}});
        std::size_t active = 0, infeasible = 0, faults = 0;
        for (const auto& t : l.ticks) {
            active += t.filter_active ? 1 : 0;
            infeasible += t.infeasible ? 1 : 0;
            faults += t.planner_fault ? 1 : 0;
        }
        eps.push_back({{"scenario", l.scenario},
                       {"seed", l.seed},
                       {"route", l.route_index},
                       {"outcome", to_string(l.outcome)},
                       {"distance_m", l.distance_driven},
                       {"ticks", l.ticks.size()},
                       {"events", events},
                       {"filter_active_ticks", active},
                       {"infeasible_ticks", infeasible},
                       {"planner_fault_ticks", faults},
                       {"digest", l.digest()}});
    }
    nlohmann::json agg = {{"episodes", logs.size()}};
    if (!logs.empty()) {
        const InfractionDistance d = infraction_distance(logs);
        agg["success_rate"] = success_rate(logs);
        agg["collisions"] = d.collisions;
        agg["out_of_lane"] = d.out_of_lane;
        agg["total_km"] = d.total_km;
        agg["km_per_collision"] = distance_json(d.km_per_collision);
        agg["km_per_out_of_lane"] = distance_json(d.km_per_out_of_lane);
    }
    return {{"episodes", eps}, {"aggregate", agg}};
}

}  // namespace safedrive
