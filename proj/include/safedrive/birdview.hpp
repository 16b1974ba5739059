#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safedrive/geometry.hpp"
#include "safedrive/map.hpp"
#include "safedrive/world.hpp"

namespace safedrive {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Bird-view layout. The canvas is ego-aligned: forward is up, left is left.
struct RenderConfig {
    int px = 192;                 ///< pixels per side
    double fov = 40.0;            ///< meters per side
    double anchor_lateral = 20.0; ///< ego distance from the left edge (m)
    double anchor_back = 8.0;     ///< ego distance from the bottom edge (m)
    int history_steps = 4;        ///< past snapshots drawn in addition to the current one
    int history_stride = 2;       ///< ticks between drawn snapshots
    double brightness_decay = 0.75;
    Rgb marking_white{255, 255, 255};
    Rgb marking_yellow{255, 255, 0};
    Rgb route_blue{0, 0, 255};
    Rgb route_purple{160, 32, 240};
    Rgb npc_green{0, 255, 0};
    Rgb ego_red{255, 0, 0};

    double pixels_per_meter() const { return px / fov; }
    /// Number of history frames render() reads (current included).
    std::size_t history_needed() const { return static_cast<std::size_t>(history_steps * history_stride + 1); }
};

inline constexpr int kRasterSide = 192;
inline constexpr std::size_t kRasterBytes = 192 * 192 * 3;

/// Row-major RGB image.
class RasterImage {
public:
    explicit RasterImage(int width = kRasterSide, int height = kRasterSide)
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3, 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::span<const std::uint8_t> bytes() const { return data_; }
    std::span<std::uint8_t> bytes() { return data_; }

    Rgb at(int row, int col) const {
        const std::size_t i = index(row, col);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int row, int col, Rgb c) {
        if (row < 0 || col < 0 || row >= height_ || col >= width_) return;
        const std::size_t i = index(row, col);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }
    bool operator==(const RasterImage&) const = default;

private:
    std::size_t index(int row, int col) const {
        return (static_cast<std::size_t>(row) * width_ + static_cast<std::size_t>(col)) * 3;
    }
    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

struct PixelCoord {
    int row = 0;
    int col = 0;
    bool operator==(const PixelCoord&) const = default;
};

/// Continuous (row, col) of a local-frame point; no bounds check.
std::pair<double, double> local_to_pixel(const Vec2& local, const RenderConfig& cfg);
/// Local-frame point at the given pixel coordinates.
Vec2 pixel_to_local(double row, double col, const RenderConfig& cfg);

/// Pixel of a global point in the ego-aligned canvas, or nullopt when off-canvas.
/// Coordinates round half away from zero.
std::optional<PixelCoord> world_to_pixel(const Pose2D& ego, const Vec2& point, const RenderConfig& cfg);

/// Paints map markings, the route (purple when the ego's next light is red), surrounding
/// vehicles and the ego over a history window. `history` is oldest first; the last
/// element is the current state. Throws EmptyHistory.
RasterImage render(std::span<const WorldState> history, const Route& route, const RenderConfig& cfg = {});

/// Writes an 8-bit RGB PNG.
void write_png(const RasterImage& image, const std::string& path);

/// FNV-1a over the raw bytes, for golden comparisons.
std::uint64_t raster_hash(const RasterImage& image);

}  // namespace safedrive
