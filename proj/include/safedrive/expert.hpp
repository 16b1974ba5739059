#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "safedrive/birdview.hpp"
#include "safedrive/control.hpp"
#include "safedrive/trajectory.hpp"
#include "safedrive/world.hpp"

namespace safedrive {

struct ExpertConfig {
    std::size_t horizon = kDefaultHorizon;
    double max_offset = 5.0;     ///< route deviation beyond which planning fails (m)
    bool obstacle_aware = true;  ///< react to leading vehicles
    bool light_aware = true;     ///< react to lights and yield lines
};

/// Rolls the route forward from the ego's foot point under the shared driving law and
/// returns H local-frame points spaced v_k * dt. Throws OffRoute.
Trajectory expert_plan(const WorldState& world, const Route& route, const ExpertConfig& cfg = {});

struct NoiseSchedule {
    double period = 8.0;
    double duration = 1.0;
    double steer_amplitude = 0.25;
    double accel_amplitude = 1.0;

    /// Window index of time t; window k covers [k * period, k * period + duration).
    std::int64_t window(double t) const;
    /// The first window opens after one full period.
    bool active(double t) const;
    bool enabled() const { return period > 0.0 && duration > 0.0 && (steer_amplitude > 0.0 || accel_amplitude > 0.0); }
    static NoiseSchedule disabled() { return {8.0, 1.0, 0.0, 0.0}; }
};

struct Perturbation {
    Control u;
    bool active = false;
};

/// Adds the window's constant offset while a window is open, then clamps to the box.
/// The offset is a deterministic function of (seed, window).
Perturbation perturb(const Control& u, double t, const NoiseSchedule& sched, std::uint64_t seed,
                     const ControlLimits& limits);

/// Positions of `future` in the frame of `current`. Throws InsufficientFuture when fewer
/// than `horizon` poses are supplied.
Trajectory make_label(std::span<const Pose2D> future, const Pose2D& current, std::size_t horizon = kDefaultHorizon);

struct DatasetFrame {
    RasterImage raster;
    double ego_speed = 0.0;
    Trajectory label;
    double t = 0.0;
    bool noise_tainted = false;
};

struct DatasetMeta {
    std::size_t horizon = kDefaultHorizon;
    double dt = 0.1;
    std::string map_path;
    std::uint64_t seed = 0;
    double duration = 0.0;
    NoiseSchedule schedule;
    std::size_t ticks = 0;     ///< simulated ticks
    std::size_t recorded = 0;  ///< frames with a complete label
    std::size_t tainted = 0;
    std::size_t exported = 0;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<DatasetFrame> frames;  ///< every recorded frame, tainted ones flagged
    std::vector<Pose2D> ego_trace;     ///< ego pose at every tick

    /// Frames usable for training.
    std::vector<const DatasetFrame*> exported() const;
};

struct CollectConfig {
    NoiseSchedule schedule;
    std::size_t horizon = kDefaultHorizon;
    std::size_t npc_count = 8;
    double npc_speed = 4.0;
    WorldConfig world;
    RenderConfig render;
};

/// Initial world of a collection run: ego on a seeded spawn point with an open-ended route.
WorldState collection_world(std::shared_ptr<const MapData> map, std::uint64_t seed, const CollectConfig& cfg);

/// Drives the expert with injected noise and records one frame per tick.
/// A frame is tainted when its own tick or any of its label ticks is inside a noise window.
Dataset collect(std::shared_ptr<const MapData> map, std::uint64_t seed, double duration,
                const CollectConfig& cfg = {});

/// Ticks t_i = i * dt with i in [0, ticks) that are inside a noise window.
std::vector<bool> noise_mask(const NoiseSchedule& sched, std::size_t ticks, double dt);

/// Writes meta.json and frames.bin into `dir` (created if missing).
void save_dataset(const Dataset& data, const std::string& dir);
DatasetMeta load_meta(const std::string& dir);
/// Reads frames.bin; tainted frames are skipped unless asked for.
std::vector<DatasetFrame> load_frames(const std::string& dir, bool include_tainted = false);

/// Bytes in one frames.bin record.
std::size_t frame_record_size(std::size_t horizon);

}  // namespace safedrive
