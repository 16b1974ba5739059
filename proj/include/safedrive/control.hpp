#pragma once

#include <algorithm>

namespace safedrive {

/// Acceleration (m/s^2) and front-wheel steering angle (rad).
struct Control {
    double accel = 0.0;
    double steer = 0.0;

    bool operator==(const Control&) const = default;
};

/// The admissible control box.
struct ControlLimits {
    double accel_max = 4.0;
    double steer_max = 0.6;

    Control clamp(const Control& u) const {
        return {std::clamp(u.accel, -accel_max, accel_max), std::clamp(u.steer, -steer_max, steer_max)};
    }
    bool contains(const Control& u, double slack = 0.0) const {
        return u.accel >= -accel_max - slack && u.accel <= accel_max + slack && u.steer >= -steer_max - slack &&
               u.steer <= steer_max + slack;
    }
    Control full_brake() const { return {-accel_max, 0.0}; }
};

}  // namespace safedrive
