#include "safedrive/birdview.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "safedrive/errors.hpp"

namespace safedrive {

std::pair<double, double> local_to_pixel(const Vec2& local, const RenderConfig& cfg) {
    const double k = cfg.pixels_per_meter();
    return {(cfg.fov - cfg.anchor_back - local.x) * k, (cfg.anchor_lateral - local.y) * k};
}

Vec2 pixel_to_local(double row, double col, const RenderConfig& cfg) {
    const double k = cfg.pixels_per_meter();
    return {cfg.fov - cfg.anchor_back - row / k, cfg.anchor_lateral - col / k};
}

namespace {

// std::lround rounds half away from zero on every conforming platform.
int round_px(double v) { return static_cast<int>(std::lround(v)); }

PixelCoord to_pixel(const Pose2D& ego, const Vec2& p, const RenderConfig& cfg) {
    const auto [r, c] = local_to_pixel(to_local(ego, p), cfg);
    return {round_px(r), round_px(c)};
}

Rgb dim(Rgb c, double factor) {
    auto ch = [factor](std::uint8_t v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v * factor), 0L, 255L));
    };
    return {ch(c.r), ch(c.g), ch(c.b)};
}

/// Bresenham line; `brush` is the half-size of the square stamp.
void draw_segment(RasterImage& img, PixelCoord a, PixelCoord b, Rgb color, int brush) {
    const int margin = brush + 1;
    if ((a.row < -margin && b.row < -margin) || (a.col < -margin && b.col < -margin) ||
        (a.row >= img.height() + margin && b.row >= img.height() + margin) ||
        (a.col >= img.width() + margin && b.col >= img.width() + margin))
        return;
    int r = a.row, c = a.col;
    const int dr = std::abs(b.row - a.row), dc = -std::abs(b.col - a.col);
    const int sr = a.row < b.row ? 1 : -1, sc = a.col < b.col ? 1 : -1;
    int err = dr + dc;
    while (true) {
        for (int i = -brush; i <= brush; ++i)
            for (int j = -brush; j <= brush; ++j) img.set(r + i, c + j, color);
        if (r == b.row && c == b.col) break;
        const int e2 = 2 * err;
        if (e2 >= dc) {
            err += dc;
            r += sr;
        }
        if (e2 <= dr) {
            err += dr;
            c += sc;
        }
    }
}

void draw_polyline(RasterImage& img, const Pose2D& ego, const Polyline& line, Rgb color, int brush,
                   const RenderConfig& cfg) {
    const auto pts = line.points();
    PixelCoord prev = to_pixel(ego, pts[0], cfg);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const PixelCoord cur = to_pixel(ego, pts[i], cfg);
        draw_segment(img, prev, cur, color, brush);
        prev = cur;
    }
}

/// Fills pixels whose coordinates fall inside the box.
void fill_box(RasterImage& img, const Pose2D& ego, const OrientedBox& box, Rgb color, const RenderConfig& cfg) {
    OrientedBox local = box;
    local.center = to_local(ego, box.center);
    local.yaw = box.yaw - ego.yaw;
    double rmin = 1e300, rmax = -1e300, cmin = 1e300, cmax = -1e300;
    for (const Vec2& corner : local.corners()) {
        const auto [r, c] = local_to_pixel(corner, cfg);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    const int r0 = std::max(0, static_cast<int>(std::floor(rmin)));
    const int r1 = std::min(img.height() - 1, static_cast<int>(std::ceil(rmax)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cmin)));
    const int c1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cmax)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            if (local.contains(pixel_to_local(r, c, cfg))) img.set(r, c, color);
        }
    }
}

}  // namespace

std::optional<PixelCoord> world_to_pixel(const Pose2D& ego, const Vec2& point, const RenderConfig& cfg) {
    const PixelCoord p = to_pixel(ego, point, cfg);
    if (p.row < 0 || p.col < 0 || p.row >= cfg.px || p.col >= cfg.px) return std::nullopt;
    return p;
}

RasterImage render(std::span<const WorldState> history, const Route& route, const RenderConfig& cfg) {
    if (history.empty()) throw EmptyHistory("render needs at least the current state");
    const WorldState& now = history.back();
    const Pose2D& ego = now.ego.pose;
    RasterImage img(cfg.px, cfg.px);

    if (now.map) {
        for (const auto& m : now.map->marking_lines()) {
            draw_polyline(img, ego, m.line, m.color == Marking::yellow ? cfg.marking_yellow : cfg.marking_white, 0, cfg);
        }
    }

    // the light decision uses the ego's position along the rendered route
    VehicleState probe = now.ego;
    if (probe.route.get() != &route) {
        probe.route = std::shared_ptr<const Route>(std::shared_ptr<const Route>{}, &route);
        probe.route_progress = route.path.project(ego.position()).arclength;
    }
    bool red = false;
    if (now.map) {
        const auto light = next_light(now, probe);
        red = light && light->phase == LightPhase::red;
    }
    draw_polyline(img, ego, route.path, red ? cfg.route_purple : cfg.route_blue, 1, cfg);

    const auto n = static_cast<std::ptrdiff_t>(history.size());
    auto frame = [&](int k) -> const WorldState* {
        const std::ptrdiff_t idx = n - 1 - static_cast<std::ptrdiff_t>(k) * cfg.history_stride;
        return idx >= 0 ? &history[static_cast<std::size_t>(idx)] : nullptr;
    };
    for (int k = cfg.history_steps; k >= 0; --k) {
        const WorldState* w = frame(k);
        if (!w) continue;
        const Rgb c = dim(cfg.npc_green, std::pow(cfg.brightness_decay, k));
        for (const auto& npc : w->npcs) fill_box(img, ego, npc.box(), c, cfg);
    }
    for (int k = cfg.history_steps; k >= 0; --k) {
        const WorldState* w = frame(k);
        if (!w) continue;
        fill_box(img, ego, w->ego.box(), dim(cfg.ego_red, std::pow(cfg.brightness_decay, k)), cfg);
    }
    return img;
}

void write_png(const RasterImage& image, const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng error while writing '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const auto bytes = image.bytes();
    for (int r = 0; r < image.height(); ++r) {
        png_write_row(png, bytes.data() + static_cast<std::size_t>(r) * image.width() * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint64_t raster_hash(const RasterImage& image) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint8_t b : image.bytes()) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace safedrive
