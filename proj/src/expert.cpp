#include "safedrive/expert.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "safedrive/errors.hpp"
#include "safedrive/tracking.hpp"

namespace safedrive {

Trajectory expert_plan(const WorldState& world, const Route& route, const ExpertConfig& cfg) {
    const VehicleState& ego = world.ego;
    const Vec2 pos = ego.pose.position();
    LineProjection foot;
    if (ego.route.get() == &route) {
        foot = route.path.project(pos, std::max(0.0, ego.route_progress - 2.0), ego.route_progress + 10.0);
        if (foot.distance > cfg.max_offset) foot = route.path.project(pos);
    } else {
        foot = route.path.project(pos);
    }
    if (!(foot.distance < cfg.max_offset)) throw OffRoute("ego is " + std::to_string(foot.distance) + " m off route");

    VehicleState probe = ego;
    probe.route = std::shared_ptr<const Route>(std::shared_ptr<const Route>{}, &route);
    probe.route_progress = foot.arclength;

    const DrivingParams& p = world.config.driving;
    const ControlLimits& lim = world.config.limits;
    const double dt = world.config.dt;
    const double look = p.d_follow + p.v_cruise * dt * static_cast<double>(cfg.horizon) + 5.0;
    const auto leader = cfg.obstacle_aware ? find_leader(world, probe, look) : std::nullopt;
    const auto stop = cfg.light_aware ? stop_target(world, probe) : std::nullopt;

    Trajectory out;
    out.points.reserve(cfg.horizon);
    double v = ego.speed;
    double travelled = 0.0;
    for (std::size_t k = 1; k <= cfg.horizon; ++k) {
        std::optional<Leader> lk;
        if (leader) {
            lk = *leader;
            lk->gap = leader->gap - travelled + std::max(0.0, leader->speed) * dt * static_cast<double>(k - 1);
        }
        std::optional<StopTarget> sk;
        if (stop) {
            sk = *stop;
            sk->gap = stop->gap - travelled;
        }
        const double a = longitudinal_law(v, lk, sk, p, lim);
        v = std::max(0.0, v + a * dt);
        travelled += v * dt;
        out.points.push_back(to_local(ego.pose, route.path.point_at(foot.arclength + travelled)));
    }
    return out;
}

std::int64_t NoiseSchedule::window(double t) const {
    return static_cast<std::int64_t>(std::floor((t + 1e-9) / period));
}

bool NoiseSchedule::active(double t) const {
    if (!enabled()) return false;
    const std::int64_t k = window(t);
    if (k < 1) return false;
    return t - static_cast<double>(k) * period < duration - 1e-9;
}

Perturbation perturb(const Control& u, double t, const NoiseSchedule& sched, std::uint64_t seed,
                     const ControlLimits& limits) {
    if (!sched.active(t)) return {u, false};
    Rng rng(mix64(seed ^ 0x6e6f697365ULL, static_cast<std::uint64_t>(sched.window(t))));
    const double da = rng.uniform(-sched.accel_amplitude, sched.accel_amplitude);
    const double ds = rng.uniform(-sched.steer_amplitude, sched.steer_amplitude);
    return {limits.clamp({u.accel + da, u.steer + ds}), true};
}

Trajectory make_label(std::span<const Pose2D> future, const Pose2D& current, std::size_t horizon) {
    if (future.size() < horizon) throw InsufficientFuture("label needs " + std::to_string(horizon) + " future poses");
    Trajectory t;
    t.points.reserve(horizon);
    for (std::size_t k = 0; k < horizon; ++k) t.points.push_back(to_local(current, future[k].position()));
    return t;
}

std::vector<bool> noise_mask(const NoiseSchedule& sched, std::size_t ticks, double dt) {
    std::vector<bool> m(ticks);
    for (std::size_t i = 0; i < ticks; ++i) m[i] = sched.active(static_cast<double>(i) * dt);
    return m;
}

std::vector<const DatasetFrame*> Dataset::exported() const {
    std::vector<const DatasetFrame*> out;
    for (const auto& f : frames) {
        if (!f.noise_tainted) out.push_back(&f);
    }
    return out;
}

WorldState collection_world(std::shared_ptr<const MapData> map, std::uint64_t seed, const CollectConfig& cfg) {
    if (map->spawn_points().empty()) throw MapError("map has no spawn points");
    Rng pick(mix64(seed, 0xe90ULL));
    const SpawnPoint& sp = map->spawn_points()[pick.below(map->spawn_points().size())];
    VehicleState ego = spawn_vehicle(*map, 0, {sp.lane, sp.s}, cfg.world.driving.v_cruise, cfg.world, seed, true);
    return make_world(map, seed, cfg.world, std::move(ego), cfg.npc_count, cfg.npc_speed);
}

Dataset collect(std::shared_ptr<const MapData> map, std::uint64_t seed, double duration, const CollectConfig& cfg) {
    const WorldConfig& wc = cfg.world;
    const auto ticks = static_cast<std::size_t>(std::llround(duration / wc.dt));
    if (ticks < cfg.horizon + 1) throw std::invalid_argument("collection shorter than the label horizon");
    WorldState world = collection_world(map, seed, cfg);

    TrackerConfig tc;
    tc.dt = wc.dt;
    tc.limits = wc.limits;
    TrackingController tracker(tc);
    ExpertConfig ec;
    ec.horizon = cfg.horizon;

    Dataset data;
    data.meta.horizon = cfg.horizon;
    data.meta.dt = wc.dt;
    data.meta.map_path = map->source_path;
    data.meta.seed = seed;
    data.meta.duration = duration;
    data.meta.schedule = cfg.schedule;
    data.meta.ticks = ticks;

    std::deque<WorldState> history;
    std::vector<RasterImage> rasters;
    std::vector<double> speeds;
    rasters.reserve(ticks);
    for (std::size_t i = 0; i < ticks; ++i) {
        history.push_back(world);
        if (history.size() > cfg.render.history_needed()) history.pop_front();
        const std::vector<WorldState> window(history.begin(), history.end());
        rasters.push_back(render(window, *world.ego.route, cfg.render));
        speeds.push_back(world.ego.speed);
        data.ego_trace.push_back(world.ego.pose);

        Control u;
        try {
            u = tracker.track(expert_plan(world, *world.ego.route, ec), world.ego.speed);
        } catch (const OffRoute&) {
            tracker.reset();
            u = wc.limits.full_brake();
        }
        u = perturb(u, world.time(), cfg.schedule, seed, wc.limits).u;
        world = step_world(world, u);
    }

    const auto mask = noise_mask(cfg.schedule, ticks, wc.dt);
    const std::size_t H = cfg.horizon;
    for (std::size_t i = 0; i + H < ticks; ++i) {
        DatasetFrame f;
        f.raster = std::move(rasters[i]);
        f.ego_speed = speeds[i];
        f.t = static_cast<double>(i) * wc.dt;
        f.label = make_label(std::span<const Pose2D>(data.ego_trace).subspan(i + 1, H), data.ego_trace[i], H);
        f.noise_tainted = std::any_of(mask.begin() + static_cast<std::ptrdiff_t>(i),
                                      mask.begin() + static_cast<std::ptrdiff_t>(i + H + 1), [](bool b) { return b; });
        data.meta.tainted += f.noise_tainted ? 1 : 0;
        data.frames.push_back(std::move(f));
    }
    data.meta.recorded = data.frames.size();
    data.meta.exported = data.meta.recorded - data.meta.tainted;
    return data;
}

}  // namespace safedrive
