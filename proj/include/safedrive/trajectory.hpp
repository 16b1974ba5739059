#pragma once

#include <cmath>
#include <vector>

#include "safedrive/geometry.hpp"

namespace safedrive {

inline constexpr std::size_t kDefaultHorizon = 10;

/// H future ego positions in the ego local frame, one per tick.
struct Trajectory {
    std::vector<Vec2> points;

    std::size_t horizon() const { return points.size(); }
    bool finite() const {
        for (const Vec2& p : points) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
        }
        return true;
    }
    bool operator==(const Trajectory&) const = default;
};

}  // namespace safedrive
