#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "safedrive/birdview.hpp"
#include "safedrive/expert.hpp"
#include "safedrive/trajectory.hpp"

namespace safedrive {

/// What a planner sees at one tick. `world` and `route` are privileged ground truth,
/// used only by model-based planners.
struct Observation {
    const RasterImage* raster = nullptr;
    double ego_speed = 0.0;
    const WorldState* world = nullptr;
    const Route* route = nullptr;
};

class Planner {
public:
    virtual ~Planner() = default;
    virtual Trajectory plan(const Observation& obs) = 0;
    virtual bool needs_raster() const { return true; }
    virtual std::string name() const = 0;
};

/// Euclidean error at 1-based index i.
double displacement_error(const Trajectory& pred, const Trajectory& truth, std::size_t i);
/// Mean squared displacement over the horizon.
double loss(const Trajectory& pred, const Trajectory& truth);
/// Mean displacement over the horizon.
double mean_displacement(const Trajectory& pred, const Trajectory& truth);

/// Mean over frames of the mean displacement error. Throws EmptyDataset.
double average_displacement(Planner& planner, std::span<const DatasetFrame> frames);
double average_displacement(Planner& planner, std::span<const DatasetFrame* const> frames);

inline constexpr int kPoolBlock = 8;
inline constexpr std::size_t kPooledSide = 192 / kPoolBlock;
inline constexpr std::size_t kFeatureDim = kPooledSide * kPooledSide * 3 + 2;  ///< pooled colors, speed, bias

/// 8x8 block-mean pooling scaled to [0, 1], then speed, then a constant 1.
std::vector<double> downsample_features(const RasterImage& raster, double ego_speed);

/// Linear trajectory model: output = W^T features, reshaped to H points.
class ToyPolicy : public Planner {
public:
    ToyPolicy() = default;
    ToyPolicy(std::size_t horizon, std::vector<double> weights);

    Trajectory predict(std::span<const double> features) const;
    Trajectory plan(const Observation& obs) override;
    std::string name() const override { return "toy"; }

    std::size_t horizon() const { return horizon_; }
    /// Row-major (kFeatureDim x 2H).
    const std::vector<double>& weights() const { return weights_; }

    void save(const std::string& path) const;
    static ToyPolicy load(const std::string& path);

private:
    std::size_t horizon_ = kDefaultHorizon;
    std::vector<double> weights_;
};

/// Ridge regression minimizing mean ||W^T f - y||^2 + l2 ||W||^2 over weighted samples.
/// `features` is N x d row-major, `targets` N x k, `counts` N multiplicities.
std::vector<double> fit_ridge(std::span<const double> features, std::span<const double> targets,
                              std::span<const double> counts, std::size_t d, std::size_t k, double l2);

/// Closed-form toy policy. Frames are canonically ordered and duplicates merged first,
/// so the result does not depend on frame order.
ToyPolicy train_toy(std::span<const DatasetFrame* const> frames, double l2 = 1e-3);
ToyPolicy train_toy(std::span<const DatasetFrame> frames, double l2 = 1e-3);

/// Straight-ahead extrapolation at the current speed.
class ConstantVelocityPlanner : public Planner {
public:
    explicit ConstantVelocityPlanner(std::size_t horizon = kDefaultHorizon, double dt = 0.1)
        : horizon_(horizon), dt_(dt) {}
    Trajectory plan(const Observation& obs) override;
    bool needs_raster() const override { return false; }
    std::string name() const override { return "constant-velocity"; }

private:
    std::size_t horizon_;
    double dt_;
};

/// Model-based expert on ground truth.
class ExpertPlanner : public Planner {
public:
    explicit ExpertPlanner(ExpertConfig cfg = {}) : cfg_(cfg) {}
    Trajectory plan(const Observation& obs) override;
    bool needs_raster() const override { return false; }
    std::string name() const override { return "expert"; }

private:
    ExpertConfig cfg_;
};

/// Expert whose planned points get seeded Gaussian noise on the lateral (local y) coordinate.
class DegradedPlanner : public Planner {
public:
    DegradedPlanner(std::uint64_t seed, double point_sigma = 0.3, ExpertConfig cfg = {});
    Trajectory plan(const Observation& obs) override;
    bool needs_raster() const override { return false; }
    std::string name() const override { return "degraded"; }

private:
    ExpertConfig cfg_;
    Rng rng_;
    double sigma_;
};

/// Returns the same trajectory every tick.
class FixedPlanner : public Planner {
public:
    explicit FixedPlanner(Trajectory t) : traj_(std::move(t)) {}
    Trajectory plan(const Observation&) override { return traj_; }
    bool needs_raster() const override { return false; }
    std::string name() const override { return "fixed"; }

private:
    Trajectory traj_;
};

}  // namespace safedrive
