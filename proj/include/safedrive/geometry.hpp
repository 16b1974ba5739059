#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace safedrive {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    bool operator==(const Vec2&) const = default;

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    Vec2 position() const { return {x, y}; }
    Vec2 heading() const { return {std::cos(yaw), std::sin(yaw)}; }
};

/// Expresses a global point in the frame of `ref` (+x forward, +y left).
Vec2 to_local(const Pose2D& ref, const Vec2& p);
/// Inverse of to_local.
Vec2 to_global(const Pose2D& ref, const Vec2& p);

/// Result of projecting a point onto a polyline.
struct LineProjection {
    double offset = 0.0;     ///< signed perpendicular distance, positive to the left
    double arclength = 0.0;  ///< arclength of the foot point
    double distance = 0.0;   ///< |offset|
};

/// Ordered list of >= 2 distinct points with cached cumulative arclength.
class Polyline {
public:
    Polyline() = default;
    /// Throws std::invalid_argument on fewer than 2 points or repeated consecutive points.
    explicit Polyline(std::vector<Vec2> points);

    std::span<const Vec2> points() const { return points_; }
    std::span<const double> arclengths() const { return cumulative_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

    /// Point at arclength s, clamped to [0, length()].
    Vec2 point_at(double s) const;
    /// Tangent heading (radians) of the segment containing s.
    double heading_at(double s) const;
    /// Index of the segment containing arclength s.
    std::size_t segment_at(double s) const;

    /// Nearest-segment projection over the whole line.
    LineProjection project(const Vec2& p) const;
    /// Projection restricted to segments overlapping [s_lo, s_hi].
    LineProjection project(const Vec2& p, double s_lo, double s_hi) const;

    /// Uniform resampling at `spacing` meters; always keeps both endpoints.
    Polyline resampled(double spacing) const;
    /// Sub-line between two arclengths.
    Polyline clipped(double s_begin, double s_end) const;
    Polyline reversed() const;
    /// Parallel curve at signed lateral distance (positive = left).
    Polyline offset(double lateral) const;

private:
    std::vector<Vec2> points_;
    std::vector<double> cumulative_;
};

/// Signed lateral offset of `p` from `line` and the arclength of its foot point.
/// Equidistant segments resolve toward the lower arclength.
LineProjection lateral_offset(const Polyline& line, const Vec2& p);

struct OrientedBox {
    Vec2 center;
    double yaw = 0.0;
    double half_length = 0.0;
    double half_width = 0.0;

    /// Corners in counter-clockwise order starting front-left.
    std::array<Vec2, 4> corners() const;
    bool contains(const Vec2& p) const;
};

/// Separating-axis test over the four edge normals of the two rectangles.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

}  // namespace safedrive
