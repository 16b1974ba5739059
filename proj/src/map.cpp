#include "safedrive/map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>

#include "safedrive/errors.hpp"

namespace safedrive {

namespace {

Marking parse_marking(const std::string& s) {
    if (s == "white") return Marking::white;
    if (s == "yellow") return Marking::yellow;
    if (s == "none") return Marking::none;
    throw MapError("unknown marking '" + s + "'");
}

const char* marking_name(Marking m) {
    switch (m) {
        case Marking::white: return "white";
        case Marking::yellow: return "yellow";
        case Marking::none: break;
    }
    return "none";
}

Vec2 parse_point(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

nlohmann::json point_json(const Vec2& p) { return nlohmann::json::array({p.x, p.y}); }

void append_points(std::vector<Vec2>& out, std::span<const Vec2> pts) {
    for (const Vec2& p : pts) {
        if (!out.empty() && (p - out.back()).norm() < 1e-6) continue;
        out.push_back(p);
    }
}

}  // namespace

MapData::MapData(std::vector<Lane> lanes, std::vector<TrafficLight> lights, std::vector<YieldRule> yields,
                 std::vector<SpawnPoint> spawns)
    : lanes_(std::move(lanes)), lights_(std::move(lights)), yields_(std::move(yields)), spawns_(std::move(spawns)) {
    index();
}

void MapData::index() {
    lane_ids_.clear();
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        if (!lane_ids_.emplace(lanes_[i].id, i).second) throw MapError("duplicate lane id '" + lanes_[i].id + "'");
        if (!(lanes_[i].width > 0.0)) throw MapError("lane '" + lanes_[i].id + "' has non-positive width");
    }
    successor_index_.assign(lanes_.size(), {});
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        for (const auto& s : lanes_[i].successors) successor_index_[i].push_back(lane_index(s));
    }
    lights_by_lane_.assign(lanes_.size(), {});
    for (std::size_t i = 0; i < lights_.size(); ++i) {
        const auto& c = lights_[i].cycle;
        if (!(c[0] > 0.0 && c[1] > 0.0 && c[2] > 0.0)) throw MapError("light '" + lights_[i].id + "' has bad cycle");
        for (const auto& l : lights_[i].governed_lanes) lights_by_lane_[lane_index(l)].push_back(i);
    }
    yields_by_lane_.assign(lanes_.size(), {});
    zone_lanes_.assign(yields_.size(), {});
    for (std::size_t i = 0; i < yields_.size(); ++i) {
        yields_by_lane_[lane_index(yields_[i].lane)].push_back(i);
        for (const auto& z : yields_[i].zones) zone_lanes_[i].push_back(lane_index(z.lane));
    }
    for (const auto& sp : spawns_) {
        const Lane& l = lanes_[lane_index(sp.lane)];
        if (sp.s < 0.0 || sp.s > l.centerline.length()) throw MapError("spawn point outside lane '" + sp.lane + "'");
    }
    markings_.clear();
    for (const Lane& l : lanes_) {
        if (l.marking_left != Marking::none) markings_.push_back({l.centerline.offset(0.5 * l.width), l.marking_left});
        if (l.marking_right != Marking::none)
            markings_.push_back({l.centerline.offset(-0.5 * l.width), l.marking_right});
    }
}

std::size_t MapData::lane_index(const std::string& id) const {
    auto it = lane_ids_.find(id);
    if (it == lane_ids_.end()) throw MapError("unknown lane id '" + id + "'");
    return it->second;
}

MapData MapData::from_json(const nlohmann::json& j) {
    try {
        std::vector<Lane> lanes;
        for (const auto& jl : j.at("lanes")) {
            Lane l;
            l.id = jl.at("id").get<std::string>();
            std::vector<Vec2> pts;
            for (const auto& p : jl.at("centerline")) pts.push_back(parse_point(p));
            l.centerline = Polyline(std::move(pts));
            l.width = jl.at("width").get<double>();
            l.marking_left = parse_marking(jl.value("marking_left", "none"));
            l.marking_right = parse_marking(jl.value("marking_right", "none"));
            l.successors = jl.value("successors", std::vector<std::string>{});
            lanes.push_back(std::move(l));
        }
        std::vector<TrafficLight> lights;
        for (const auto& jt : j.value("traffic_lights", nlohmann::json::array())) {
            TrafficLight t;
            t.id = jt.at("id").get<std::string>();
            t.stop_point = parse_point(jt.at("stop_point"));
            t.governed_lanes = jt.at("governed_lanes").get<std::vector<std::string>>();
            const auto& c = jt.at("cycle");
            t.cycle = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
            t.phase_offset = jt.value("phase_offset", 0.0);
            lights.push_back(std::move(t));
        }
        std::vector<YieldRule> yields;
        for (const auto& jy : j.value("yields", nlohmann::json::array())) {
            YieldRule y;
            y.id = jy.at("id").get<std::string>();
            y.lane = jy.at("lane").get<std::string>();
            y.stop_point = parse_point(jy.at("stop_point"));
            for (const auto& jz : jy.at("zones")) {
                y.zones.push_back({jz.at("lane").get<std::string>(), jz.at("s_from").get<double>(),
                                   jz.at("s_to").get<double>()});
            }
            yields.push_back(std::move(y));
        }
        std::vector<SpawnPoint> spawns;
        for (const auto& js : j.value("spawn_points", nlohmann::json::array())) {
            spawns.push_back({js.at("lane").get<std::string>(), js.at("s").get<double>()});
        }
        return MapData(std::move(lanes), std::move(lights), std::move(yields), std::move(spawns));
    } catch (const nlohmann::json::exception& e) {
        throw MapError(std::string("malformed map: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw MapError(std::string("malformed map: ") + e.what());
    }
}

MapData MapData::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MapError("cannot open map file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MapError("cannot parse map file '" + path + "': " + e.what());
    }
    MapData m = from_json(j);
    m.source_path = path;
    return m;
}

nlohmann::json MapData::to_json() const {
    nlohmann::json j;
    j["lanes"] = nlohmann::json::array();
    for (const Lane& l : lanes_) {
        nlohmann::json pts = nlohmann::json::array();
        for (const Vec2& p : l.centerline.points()) pts.push_back(point_json(p));
        j["lanes"].push_back({{"id", l.id},
                              {"centerline", pts},
                              {"width", l.width},
                              {"marking_left", marking_name(l.marking_left)},
                              {"marking_right", marking_name(l.marking_right)},
                              {"successors", l.successors}});
    }
    j["traffic_lights"] = nlohmann::json::array();
    for (const auto& t : lights_) {
        j["traffic_lights"].push_back({{"id", t.id},
                                       {"stop_point", point_json(t.stop_point)},
                                       {"governed_lanes", t.governed_lanes},
                                       {"cycle", t.cycle},
                                       {"phase_offset", t.phase_offset}});
    }
    j["yields"] = nlohmann::json::array();
    for (const auto& y : yields_) {
        nlohmann::json zones = nlohmann::json::array();
        for (const auto& z : y.zones) zones.push_back({{"lane", z.lane}, {"s_from", z.s_from}, {"s_to", z.s_to}});
        j["yields"].push_back({{"id", y.id}, {"lane", y.lane}, {"stop_point", point_json(y.stop_point)}, {"zones", zones}});
    }
    j["spawn_points"] = nlohmann::json::array();
    for (const auto& s : spawns_) j["spawn_points"].push_back({{"lane", s.lane}, {"s", s.s}});
    return j;
}

LightPhase light_state(const TrafficLight& light, double time) {
    const double total = light.cycle[0] + light.cycle[1] + light.cycle[2];
    // the epsilon keeps exact cycle boundaries (t = k * total) from landing at total - ulp
    double phase = std::fmod(time + light.phase_offset + 1e-9, total);
    if (phase < 0.0) phase += total;
    if (phase < light.cycle[0]) return LightPhase::green;
    if (phase < light.cycle[0] + light.cycle[1]) return LightPhase::yellow;
    return LightPhase::red;
}

const char* to_string(LightPhase p) {
    switch (p) {
        case LightPhase::green: return "green";
        case LightPhase::yellow: return "yellow";
        case LightPhase::red: break;
    }
    return "red";
}

const RouteSpan& Route::span_at(double s) const {
    for (const auto& sp : spans) {
        if (s < sp.route_end) return sp;
    }
    return spans.back();
}

Route build_route(const MapData& map, const std::vector<std::size_t>& lanes, double start_s, std::optional<double> end_s) {
    if (lanes.empty()) throw NoRoute("empty lane sequence");
    std::vector<Vec2> pts;
    Route r;
    double acc = 0.0;
    for (std::size_t k = 0; k < lanes.size(); ++k) {
        const Polyline& c = map.lane(lanes[k]).centerline;
        const double b = k == 0 ? start_s : 0.0;
        const double e = (k + 1 == lanes.size() && end_s) ? *end_s : c.length();
        if (e - b < 1e-6) continue;
        const Polyline piece = (b > 0.0 || e < c.length()) ? c.clipped(b, e) : c;
        append_points(pts, piece.points());
        r.spans.push_back({lanes[k], acc, acc + piece.length(), b});
        acc += piece.length();
    }
    if (r.spans.empty()) throw NoRoute("route has zero length");
    r.path = Polyline(std::move(pts));
    return r;
}

Route extend_route(const MapData& map, const Route& route, std::size_t next_lane) {
    const Polyline& c = map.lane(next_lane).centerline;
    std::vector<Vec2> pts(route.path.points().begin(), route.path.points().end());
    append_points(pts, c.points());
    Route r;
    r.spans = route.spans;
    const double begin = route.path.length();
    r.path = Polyline(std::move(pts));
    r.spans.push_back({next_lane, begin, r.path.length(), 0.0});
    return r;
}

std::pair<Route, double> trim_route(const MapData& map, const Route& route, double progress, double keep_behind) {
    (void)map;
    std::size_t first = 0;
    while (first + 1 < route.spans.size() && route.spans[first].route_end < progress - keep_behind) ++first;
    if (first == 0) return {route, 0.0};
    const double shift = route.spans[first].route_begin;
    Route r;
    r.path = route.path.clipped(shift, route.path.length());
    for (std::size_t i = first; i < route.spans.size(); ++i) {
        RouteSpan sp = route.spans[i];
        sp.route_begin -= shift;
        sp.route_end -= shift;
        r.spans.push_back(sp);
    }
    return {std::move(r), shift};
}

std::vector<std::size_t> shortest_lane_path(const MapData& map, const LanePosition& start, const LanePosition& goal) {
    const std::size_t s_lane = map.lane_index(start.lane);
    const std::size_t g_lane = map.lane_index(goal.lane);
    const double s_len = map.lane(s_lane).centerline.length();
    if (start.s < 0.0 || start.s > s_len) throw MapError("start arclength outside lane");
    if (goal.s < 0.0 || goal.s > map.lane(g_lane).centerline.length()) throw MapError("goal arclength outside lane");
    if (s_lane == g_lane && start.s <= goal.s) return {s_lane};

    // Dijkstra over "lane entered at its start" nodes.
    const std::size_t n = map.lanes().size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<std::size_t> prev(n, n);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (std::size_t nx : map.successors(s_lane)) {
        const double d = s_len - start.s;
        if (d < dist[nx]) {
            dist[nx] = d;
            prev[nx] = n;  // reached directly from the start lane
            pq.push({d, nx});
        }
    }
    std::vector<bool> done(n, false);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = true;
        if (u == g_lane) {
            std::vector<std::size_t> path{u};
            for (std::size_t p = prev[u]; p != n; p = prev[p]) path.push_back(p);
            path.push_back(s_lane);
            std::reverse(path.begin(), path.end());
            return path;
        }
        const double len = map.lane(u).centerline.length();
        for (std::size_t nx : map.successors(u)) {
            if (d + len < dist[nx]) {
                dist[nx] = d + len;
                prev[nx] = u;
                pq.push({dist[nx], nx});
            }
        }
    }
    throw NoRoute("goal lane '" + goal.lane + "' unreachable from '" + start.lane + "'");
}

Route plan_route(const MapData& map, const LanePosition& start, const LanePosition& goal) {
    const auto lanes = shortest_lane_path(map, start, goal);
    Route raw = build_route(map, lanes, start.s, goal.s);
    const double raw_len = raw.path.length();
    Route r;
    r.path = raw.path.resampled(1.0);
    // rescale span bounds onto the resampled arclength
    const double k = r.path.length() / raw_len;
    for (RouteSpan sp : raw.spans) {
        sp.route_begin *= k;
        sp.route_end *= k;
        r.spans.push_back(sp);
    }
    return r;
}

}  // namespace safedrive
