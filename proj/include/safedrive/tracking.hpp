#pragma once

#include <cstddef>

#include "safedrive/control.hpp"
#include "safedrive/geometry.hpp"
#include "safedrive/trajectory.hpp"

namespace safedrive {

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

/// PID with integral clamping (anti-windup) and output saturation.
class Pid {
public:
    Pid() = default;
    Pid(PidGains gains, double integral_max, double out_min, double out_max)
        : gains_(gains), integral_max_(integral_max), out_min_(out_min), out_max_(out_max) {}

    double update(double error, double dt);
    void reset();

    const PidGains& gains() const { return gains_; }
    double integral() const { return integral_; }
    double prev_error() const { return prev_error_; }

private:
    PidGains gains_;
    double integral_max_ = 2.0;
    double out_min_ = -1e300;
    double out_max_ = 1e300;
    double integral_ = 0.0;
    double prev_error_ = 0.0;
    bool has_prev_ = false;
};

struct TrackerConfig {
    std::size_t m = 5;  ///< 1-based index of the target waypoint
    double dt = 0.1;
    PidGains longitudinal{1.5, 0.2, 0.0};
    PidGains lateral{2.0, 0.0, 0.3};
    double integral_max = 2.0;
    double target_epsilon = 0.05;  ///< targets closer than this are degenerate (m)
    double hold_brake = -1.0;      ///< accel commanded on a degenerate target (m/s^2)
    ControlLimits limits;
};

/// Speed implied by waypoints m and m+1: |p[m+1] - p[m]| / dt. Requires m + 1 <= H.
double target_speed(const Trajectory& traj, std::size_t m, double dt);

/// Signed angle between the local heading (cos yaw, sin yaw) and the direction to
/// `target`; magnitude from arccos of the unit-vector dot product, positive to the left.
/// Throws DegenerateTarget when |target| <= eps.
double signed_heading_error(const Vec2& target, double yaw_local = 0.0, double eps = 0.05);

/// Heading error toward waypoint m (1-based).
double heading_error(const Trajectory& traj, std::size_t m, double yaw_local = 0.0, double eps = 0.05);

/// Decoupled longitudinal/lateral trajectory tracker. One instance per vehicle.
class TrackingController {
public:
    explicit TrackingController(TrackerConfig cfg = {});

    /// Speed PID on v_d - v.
    double longitudinal(double v_d, double v);
    /// Steering PID on the heading error.
    double lateral(double heading_error);
    /// Full command; a degenerate target yields the hold-brake command.
    Control track(const Trajectory& traj, double ego_speed);

    const TrackerConfig& config() const { return cfg_; }
    void reset();

private:
    TrackerConfig cfg_;
    Pid lon_;
    Pid lat_;
};

}  // namespace safedrive
