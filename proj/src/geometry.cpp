#include "safedrive/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace safedrive {

double normalize_angle(double a) {
    double r = std::atan2(std::sin(a), std::cos(a));
    if (r <= -kPi) r = kPi;
    return r;
}

Vec2 to_local(const Pose2D& ref, const Vec2& p) {
    const double c = std::cos(ref.yaw);
    const double s = std::sin(ref.yaw);
    const double dx = p.x - ref.x;
    const double dy = p.y - ref.y;
    return {c * dx + s * dy, -s * dx + c * dy};
}

Vec2 to_global(const Pose2D& ref, const Vec2& p) {
    const double c = std::cos(ref.yaw);
    const double s = std::sin(ref.yaw);
    return {ref.x + c * p.x - s * p.y, ref.y + s * p.x + c * p.y};
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
    cumulative_.reserve(points_.size());
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const double seg = (points_[i] - points_[i - 1]).norm();
        if (!(seg > 0.0)) throw std::invalid_argument("polyline has repeated consecutive points");
        cumulative_.push_back(cumulative_.back() + seg);
    }
}

std::size_t Polyline::segment_at(double s) const {
    if (s <= 0.0) return 0;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
    if (idx == 0) return 0;
    return std::min(idx - 1, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
    s = std::clamp(s, 0.0, length());
    const std::size_t i = segment_at(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double t = (s - cumulative_[i]) / seg;
    return points_[i] + (points_[i + 1] - points_[i]) * t;
}

double Polyline::heading_at(double s) const {
    const std::size_t i = segment_at(s);
    const Vec2 d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
}

namespace {

LineProjection project_range(std::span<const Vec2> pts, std::span<const double> cum, const Vec2& p,
                             std::size_t first, std::size_t last) {
    LineProjection best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i <= last; ++i) {
        const Vec2 a = pts[i];
        const Vec2 d = pts[i + 1] - a;
        const double len2 = d.dot(d);
        const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
        const Vec2 foot = a + d * t;
        const Vec2 r = p - foot;
        const double d2 = r.dot(r);
        // strict comparison keeps the lower-arclength segment on ties
        if (d2 < best_d2) {
            best_d2 = d2;
            const double dist = std::sqrt(d2);
            const double side = d.cross(p - a);
            best.distance = dist;
            best.offset = side >= 0.0 ? dist : -dist;
            best.arclength = cum[i] + t * std::sqrt(len2);
        }
    }
    return best;
}

}  // namespace

LineProjection Polyline::project(const Vec2& p) const {
    return project_range(points_, cumulative_, p, 0, points_.size() - 2);
}

LineProjection Polyline::project(const Vec2& p, double s_lo, double s_hi) const {
    const std::size_t first = segment_at(s_lo);
    const std::size_t last = std::max(first, segment_at(s_hi));
    return project_range(points_, cumulative_, p, first, last);
}

Polyline Polyline::resampled(double spacing) const {
    const double total = length();
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(total / spacing - 1e-9)));
    std::vector<Vec2> out;
    out.reserve(n + 1);
    for (std::size_t k = 0; k < n; ++k) out.push_back(point_at(static_cast<double>(k) * spacing));
    if ((out.back() - points_.back()).norm() < 1e-6) out.pop_back();
    out.push_back(points_.back());
    return Polyline(std::move(out));
}

Polyline Polyline::clipped(double s_begin, double s_end) const {
    s_begin = std::clamp(s_begin, 0.0, length());
    s_end = std::clamp(s_end, 0.0, length());
    if (s_end - s_begin < 1e-9) throw std::invalid_argument("empty polyline clip");
    std::vector<Vec2> out{point_at(s_begin)};
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (cumulative_[i] > s_begin + 1e-9 && cumulative_[i] < s_end - 1e-9) out.push_back(points_[i]);
    }
    out.push_back(point_at(s_end));
    return Polyline(std::move(out));
}

Polyline Polyline::reversed() const {
    std::vector<Vec2> out(points_.rbegin(), points_.rend());
    return Polyline(std::move(out));
}

Polyline Polyline::offset(double lateral) const {
    std::vector<Vec2> out;
    out.reserve(points_.size());
    const std::size_t n = points_.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 t;
        if (i == 0) {
            t = points_[1] - points_[0];
        } else if (i + 1 == n) {
            t = points_[n - 1] - points_[n - 2];
        } else {
            const Vec2 a = points_[i] - points_[i - 1];
            const Vec2 b = points_[i + 1] - points_[i];
            t = a * (1.0 / a.norm()) + b * (1.0 / b.norm());
        }
        t = t * (1.0 / t.norm());
        out.push_back(points_[i] + Vec2{-t.y, t.x} * lateral);
    }
    return Polyline(std::move(out));
}

LineProjection lateral_offset(const Polyline& line, const Vec2& p) { return line.project(p); }

std::array<Vec2, 4> OrientedBox::corners() const {
    const Vec2 f{std::cos(yaw), std::sin(yaw)};
    const Vec2 l{-f.y, f.x};
    const Vec2 fl = f * half_length;
    const Vec2 lw = l * half_width;
    return {center + fl + lw, center - fl + lw, center - fl - lw, center + fl - lw};
}

bool OrientedBox::contains(const Vec2& p) const {
    const Vec2 d = p - center;
    const Vec2 f{std::cos(yaw), std::sin(yaw)};
    const double lon = d.dot(f);
    const double lat = d.cross(f);
    return std::abs(lon) <= half_length && std::abs(lat) <= half_width;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::array<Vec2, 4> axes{Vec2{std::cos(a.yaw), std::sin(a.yaw)}, Vec2{-std::sin(a.yaw), std::cos(a.yaw)},
                                   Vec2{std::cos(b.yaw), std::sin(b.yaw)}, Vec2{-std::sin(b.yaw), std::cos(b.yaw)}};
    for (const Vec2& ax : axes) {
        double amin = std::numeric_limits<double>::infinity(), amax = -amin;
        double bmin = amin, bmax = -amin;
        for (const Vec2& c : ca) {
            const double v = c.dot(ax);
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        for (const Vec2& c : cb) {
            const double v = c.dot(ax);
            bmin = std::min(bmin, v);
            bmax = std::max(bmax, v);
        }
        if (amax < bmin || bmax < amin) return false;
    }
    return true;
}

}  // namespace safedrive
