#pragma once

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "safedrive/control.hpp"
#include "safedrive/geometry.hpp"
#include "safedrive/world.hpp"

namespace safedrive {

/// Symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
    double a = 1.0;
    double b = 0.0;
    double c = 1.0;

    Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, b * v.x + c * v.y}; }
    double quad(const Vec2& u, const Vec2& v) const { return u.dot((*this) * v); }
    double det() const { return a * c - b * b; }
    bool positive_definite() const { return a > 0.0 && det() > 0.0; }
    Sym2 inverse() const {
        const double d = det();
        return {c / d, -b / d, a / d};
    }
};

struct SafetyParams {
    double D = 2.0;
    double alpha = 0.5;
    double beta = 2.0;
    double ell = 5.0;
    double eta = 0.1;
    Sym2 W{1.0, 0.0, 10.0};
    double wheelbase = 2.5;
    double sensing_radius = 30.0;
    /// Obstacles whose center lies more than `rear_ignore` meters behind the ego's center
    /// are not constrained against. Negative disables the cut.
    double rear_ignore = 4.5;
    ControlLimits limits;
};

/// Linear control constraint L . (accel, steer) <= S.
struct HalfPlane {
    Vec2 L;
    double S = 0.0;

    double value(const Control& u) const { return L.x * u.accel + L.y * u.steer; }
    bool satisfied(const Control& u, double slack = 0.0) const { return value(u) <= S + slack; }
};

/// Kinematic state (x, y, yaw, speed) with velocity along the heading.
struct AgentState {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double v = 0.0;

    static AgentState of(const VehicleState& s) { return {s.pose.x, s.pose.y, s.pose.yaw, s.speed}; }
    Vec2 position() const { return {x, y}; }
    Vec2 velocity() const { return {v * std::cos(yaw), v * std::sin(yaw)}; }
};

/// Q = R(yaw) diag(1/ell^2, beta^2/ell^2) R(yaw)^T.
Sym2 shape_matrix(double obstacle_yaw, const SafetyParams& p);

/// Ellipse-metric distance sqrt(r^T Q r), r = p_ego - p_obs. Throws CoincidentPositions.
double shaped_distance(const AgentState& ego, const AgentState& obs, const SafetyParams& p);
double shaped_distance(const VehicleState& ego, const VehicleState& obs, const SafetyParams& p);

/// Rate of change of the shaped distance under both agents' current velocities.
double shaped_distance_rate(const AgentState& ego, const AgentState& obs, const SafetyParams& p);

/// phi = D - d^2 - alpha * d_dot. Coincident positions give +infinity.
double safety_index(const AgentState& ego, const AgentState& obs, const SafetyParams& p);
double safety_index(const VehicleState& ego, const VehicleState& obs, const SafetyParams& p);

/// Partials of phi with respect to (x, y, yaw, v) of the ego and of the obstacle.
struct SafetyGradient {
    double phi = 0.0;
    std::array<double, 4> ego{};
    std::array<double, 4> obs{};
};
SafetyGradient safety_gradient(const AgentState& ego, const AgentState& obs, const SafetyParams& p);

/// Constraint keeping phi_dot <= -eta under the control-affine model, or nullopt when
/// phi < 0. A row without control authority becomes a full-brake row when it cannot
/// be satisfied passively.
std::optional<HalfPlane> constraint(const AgentState& ego, const AgentState& obs, const SafetyParams& p);
std::optional<HalfPlane> constraint(const VehicleState& ego, const VehicleState& obs, const SafetyParams& p);

struct Projection {
    Control u;
    bool feasible = true;
};

/// Exact W-weighted projection of u onto the control box intersected with the half-planes.
/// An empty feasible set returns full braking with feasible = false.
Projection qp_project(const Control& u, std::span<const HalfPlane> constraints, const Sym2& W,
                      const ControlLimits& limits = {});

struct SafeControl {
    Control u;
    bool active = false;      ///< at least one constraint was emitted
    bool infeasible = false;  ///< the constrained set was empty
    double phi_max = -std::numeric_limits<double>::infinity();  ///< largest index among sensed obstacles
};

/// Filters the ego command against every sensed surrounding vehicle. An empty
/// constrained set brakes fully with the nominal steering kept.
SafeControl safe_control(const WorldState& world, const Control& u, const SafetyParams& p);

/// Time derivative of the ego state under the control-affine model (tan(steer) ~ steer).
std::array<double, 4> affine_dynamics(const AgentState& s, const Control& u, double wheelbase);

}  // namespace safedrive
