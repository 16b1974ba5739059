#include "safedrive/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "safedrive/errors.hpp"

namespace safedrive {

double Pid::update(double error, double dt) {
    integral_ = std::clamp(integral_ + error * dt, -integral_max_, integral_max_);
    const double derivative = has_prev_ ? (error - prev_error_) / dt : 0.0;
    prev_error_ = error;
    has_prev_ = true;
    const double out = gains_.kp * error + gains_.ki * integral_ + gains_.kd * derivative;
    return std::clamp(out, out_min_, out_max_);
}

void Pid::reset() {
    integral_ = 0.0;
    prev_error_ = 0.0;
    has_prev_ = false;
}

double target_speed(const Trajectory& traj, std::size_t m, double dt) {
    if (m < 1 || m + 1 > traj.horizon()) throw std::invalid_argument("target index out of range");
    return (traj.points[m] - traj.points[m - 1]).norm() / dt;
}

double signed_heading_error(const Vec2& target, double yaw_local, double eps) {
    const double n = target.norm();
    if (!(n > eps)) throw DegenerateTarget("target waypoint within epsilon of the ego");
    const Vec2 dir = target * (1.0 / n);
    const Vec2 ego{std::cos(yaw_local), std::sin(yaw_local)};
    const double mag = std::acos(std::clamp(ego.dot(dir), -1.0, 1.0));
    return ego.cross(dir) < 0.0 ? -mag : mag;
}

double heading_error(const Trajectory& traj, std::size_t m, double yaw_local, double eps) {
    if (m < 1 || m > traj.horizon()) throw std::invalid_argument("target index out of range");
    return signed_heading_error(traj.points[m - 1], yaw_local, eps);
}

TrackingController::TrackingController(TrackerConfig cfg)
    : cfg_(cfg),
      lon_(cfg.longitudinal, cfg.integral_max, -cfg.limits.accel_max, cfg.limits.accel_max),
      lat_(cfg.lateral, cfg.integral_max, -cfg.limits.steer_max, cfg.limits.steer_max) {}

double TrackingController::longitudinal(double v_d, double v) { return lon_.update(v_d - v, cfg_.dt); }

double TrackingController::lateral(double e) { return lat_.update(e, cfg_.dt); }

Control TrackingController::track(const Trajectory& traj, double ego_speed) {
    if (cfg_.m < 1 || cfg_.m + 1 > traj.horizon()) throw std::invalid_argument("trajectory shorter than m + 1");
    double e_yaw = 0.0;
    try {
        e_yaw = heading_error(traj, cfg_.m, 0.0, cfg_.target_epsilon);
    } catch (const DegenerateTarget&) {
        lon_.reset();
        lat_.reset();
        return cfg_.limits.clamp({cfg_.hold_brake, 0.0});
    }
    const double a = longitudinal(target_speed(traj, cfg_.m, cfg_.dt), ego_speed);
    const double d = lateral(e_yaw);
    return cfg_.limits.clamp({a, d});
}

void TrackingController::reset() {
    lon_.reset();
    lat_.reset();
}

}  // namespace safedrive
