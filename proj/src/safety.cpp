#include "safedrive/safety.hpp"

#include <cmath>
#include <limits>

#include "safedrive/errors.hpp"

namespace safedrive {

Sym2 shape_matrix(double yaw, const SafetyParams& p) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double l1 = 1.0 / (p.ell * p.ell);
    const double l2 = p.beta * p.beta / (p.ell * p.ell);
    return {l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
}

namespace {

/// dQ/dyaw.
Sym2 shape_matrix_dyaw(double yaw, const SafetyParams& p) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double l1 = 1.0 / (p.ell * p.ell);
    const double l2 = p.beta * p.beta / (p.ell * p.ell);
    return {2.0 * (l2 - l1) * c * s, (l1 - l2) * (c * c - s * s), 2.0 * (l1 - l2) * c * s};
}

constexpr double kCoincident = 1e-12;

}  // namespace

double shaped_distance(const AgentState& ego, const AgentState& obs, const SafetyParams& p) {
    const Vec2 r = ego.position() - obs.position();
    const double d2 = shape_matrix(obs.yaw, p).quad(r, r);
    if (!(d2 > kCoincident)) throw CoincidentPositions("ego and obstacle positions coincide");
    return std::sqrt(d2);
}

double shaped_distance(const VehicleState& ego, const VehicleState& obs, const SafetyParams& p) {
    return shaped_distance(AgentState::of(ego), AgentState::of(obs), p);
}

double shaped_distance_rate(const AgentState& ego, const AgentState& obs, const SafetyParams& p) {
    const Vec2 r = ego.position() - obs.position();
    const Vec2 w = ego.velocity() - obs.velocity();
    const Sym2 Q = shape_matrix(obs.yaw, p);
    return Q.quad(r, w) / shaped_distance(ego, obs, p);
}

double safety_index(const AgentState& ego, const AgentState& obs, const SafetyParams& p) {
    try {
        const double d = shaped_distance(ego, obs, p);
        return p.D - d * d - p.alpha * shaped_distance_rate(ego, obs, p);
    } catch (const CoincidentPositions&) {
        return std::numeric_limits<double>::infinity();
    }
}

double safety_index(const VehicleState& ego, const VehicleState& obs, const SafetyParams& p) {
    return safety_index(AgentState::of(ego), AgentState::of(obs), p);
}

SafetyGradient safety_gradient(const AgentState& ego, const AgentState& obs, const SafetyParams& p) {
    const Vec2 r = ego.position() - obs.position();
    const Vec2 w = ego.velocity() - obs.velocity();
    const Sym2 Q = shape_matrix(obs.yaw, p);
    const Sym2 Qd = shape_matrix_dyaw(obs.yaw, p);
    const Vec2 Qr = Q * r;
    const Vec2 Qw = Q * w;
    const double d2 = r.dot(Qr);
    if (!(d2 > kCoincident)) throw CoincidentPositions("ego and obstacle positions coincide");
    const double d = std::sqrt(d2);
    const double g = r.dot(Qw);
    const double a = p.alpha;

    SafetyGradient out;
    out.phi = p.D - d2 - a * g / d;

    // phi as a function of r and w
    const Vec2 dphi_dr = Qr * -2.0 - (Qw * (1.0 / d) - Qr * (g / (d * d * d))) * a;
    const Vec2 dphi_dw = Qr * (-a / d);

    const Vec2 h0{std::cos(ego.yaw), std::sin(ego.yaw)};
    const Vec2 h0p{-std::sin(ego.yaw), std::cos(ego.yaw)};
    out.ego = {dphi_dr.x, dphi_dr.y, dphi_dw.dot(h0p) * ego.v, dphi_dw.dot(h0)};

    const Vec2 hj{std::cos(obs.yaw), std::sin(obs.yaw)};
    const Vec2 hjp{-std::sin(obs.yaw), std::cos(obs.yaw)};
    const double rQdr = Qd.quad(r, r);
    const double rQdw = Qd.quad(r, w);
    const double dphi_dQyaw = -rQdr - a * (rQdw / d - g * rQdr / (2.0 * d * d * d));
    out.obs = {-dphi_dr.x, -dphi_dr.y, -dphi_dw.dot(hjp) * obs.v + dphi_dQyaw, -dphi_dw.dot(hj)};
    return out;
}

std::array<double, 4> affine_dynamics(const AgentState& s, const Control& u, double wheelbase) {
    return {s.v * std::cos(s.yaw), s.v * std::sin(s.yaw), s.v * u.steer / wheelbase, u.accel};
}

std::optional<HalfPlane> constraint(const AgentState& ego, const AgentState& obs, const SafetyParams& p) {
    SafetyGradient gr;
    try {
        gr = safety_gradient(ego, obs, p);
    } catch (const CoincidentPositions&) {
        return HalfPlane{{1.0, 0.0}, -p.limits.accel_max};
    }
    if (gr.phi < 0.0) return std::nullopt;

    const Vec2 L{gr.ego[3], gr.ego[2] * ego.v / p.wheelbase};
    const double drift_obs = gr.obs[0] * obs.v * std::cos(obs.yaw) + gr.obs[1] * obs.v * std::sin(obs.yaw);
    const double drift_ego = gr.ego[0] * ego.v * std::cos(ego.yaw) + gr.ego[1] * ego.v * std::sin(ego.yaw);
    const double S = -p.eta - drift_obs - drift_ego;
    if (L.norm() < 1e-9) {
        if (S >= 0.0) return std::nullopt;
        return HalfPlane{{1.0, 0.0}, -p.limits.accel_max};
    }
    return HalfPlane{L, S};
}

std::optional<HalfPlane> constraint(const VehicleState& ego, const VehicleState& obs, const SafetyParams& p) {
    return constraint(AgentState::of(ego), AgentState::of(obs), p);
}

namespace {

double objective(const Control& u, const Control& u0, const Sym2& W) {
    const Vec2 e{u.accel - u0.accel, u.steer - u0.steer};
    return 0.5 * W.quad(e, e);
}

}  // namespace

Projection qp_project(const Control& u, std::span<const HalfPlane> constraints, const Sym2& W,
                      const ControlLimits& limits) {
    std::vector<HalfPlane> rows(constraints.begin(), constraints.end());
    rows.push_back({{1.0, 0.0}, limits.accel_max});
    rows.push_back({{-1.0, 0.0}, limits.accel_max});
    rows.push_back({{0.0, 1.0}, limits.steer_max});
    rows.push_back({{0.0, -1.0}, limits.steer_max});

    auto feasible = [&](const Control& c) {
        for (const auto& h : rows) {
            const double tol = 1e-9 * std::max({1.0, std::abs(h.S), h.L.norm()});
            if (!h.satisfied(c, tol)) return false;
        }
        return true;
    };
    if (feasible(u)) return {u, true};

    const Sym2 Wi = W.inverse();
    std::optional<Control> best;
    double best_obj = 0.0;
    auto offer = [&](const Control& c) {
        if (!std::isfinite(c.accel) || !std::isfinite(c.steer) || !feasible(c)) return;
        const double o = objective(c, u, W);
        if (!best || o < best_obj) {
            best = c;
            best_obj = o;
        }
    };

    for (const auto& h : rows) {
        const Vec2 WiL = Wi * h.L;
        const double den = h.L.dot(WiL);
        if (!(den > 0.0)) continue;
        const double t = (h.value(u) - h.S) / den;
        offer({u.accel - t * WiL.x, u.steer - t * WiL.y});
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const Vec2& a = rows[i].L;
            const Vec2& b = rows[j].L;
            const double det = a.cross(b);
            if (std::abs(det) < 1e-12 * a.norm() * b.norm()) continue;
            offer({(rows[i].S * b.y - rows[j].S * a.y) / det, (a.x * rows[j].S - b.x * rows[i].S) / det});
        }
    }
    if (!best) return {limits.full_brake(), false};
    return {limits.clamp(*best), true};
}

SafeControl safe_control(const WorldState& world, const Control& u, const SafetyParams& p) {
    SafeControl out{u, false, false, -std::numeric_limits<double>::infinity()};
    const AgentState ego = AgentState::of(world.ego);
    std::vector<HalfPlane> rows;
    for (const auto& npc : world.npcs) {
        const Vec2 rel = npc.pose.position() - world.ego.pose.position();
        if (rel.norm() > p.sensing_radius) continue;
        if (p.rear_ignore >= 0.0 && to_local(world.ego.pose, npc.pose.position()).x < -p.rear_ignore) continue;
        const AgentState obs = AgentState::of(npc);
        out.phi_max = std::max(out.phi_max, safety_index(ego, obs, p));
        if (auto row = constraint(ego, obs, p)) rows.push_back(*row);
    }
    if (rows.empty()) return out;
    const Projection pr = qp_project(u, rows, p.W, p.limits);
    out.u = pr.u;
    out.active = true;
    out.infeasible = !pr.feasible;
    // braking, but keep following the lane
    if (out.infeasible) out.u.steer = p.limits.clamp(u).steer;
    return out;
}

}  // namespace safedrive
