#include "safedrive/policy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "safedrive/errors.hpp"

namespace safedrive {

double displacement_error(const Trajectory& pred, const Trajectory& truth, std::size_t i) {
    if (i < 1 || i > pred.horizon() || i > truth.horizon()) throw std::invalid_argument("index out of horizon");
    return (pred.points[i - 1] - truth.points[i - 1]).norm();
}

double loss(const Trajectory& pred, const Trajectory& truth) {
    if (pred.horizon() != truth.horizon() || pred.horizon() == 0) throw std::invalid_argument("horizon mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.horizon(); ++i) {
        const Vec2 e = pred.points[i] - truth.points[i];
        acc += e.dot(e);
    }
    return acc / static_cast<double>(pred.horizon());
}

double mean_displacement(const Trajectory& pred, const Trajectory& truth) {
    if (pred.horizon() != truth.horizon() || pred.horizon() == 0) throw std::invalid_argument("horizon mismatch");
    double acc = 0.0;
    for (std::size_t i = 1; i <= pred.horizon(); ++i) acc += displacement_error(pred, truth, i);
    return acc / static_cast<double>(pred.horizon());
}

double average_displacement(Planner& planner, std::span<const DatasetFrame* const> frames) {
    if (frames.empty()) throw EmptyDataset("no frames to evaluate");
    double acc = 0.0;
    for (const DatasetFrame* f : frames) {
        Observation obs;
        obs.raster = &f->raster;
        obs.ego_speed = f->ego_speed;
        acc += mean_displacement(planner.plan(obs), f->label);
    }
    return acc / static_cast<double>(frames.size());
}

double average_displacement(Planner& planner, std::span<const DatasetFrame> frames) {
    std::vector<const DatasetFrame*> ptrs;
    for (const auto& f : frames) ptrs.push_back(&f);
    return average_displacement(planner, std::span<const DatasetFrame* const>(ptrs));
}

std::vector<double> downsample_features(const RasterImage& raster, double ego_speed) {
    if (raster.width() != kRasterSide || raster.height() != kRasterSide)
        throw std::invalid_argument("features need a 192x192 raster");
    std::vector<double> f(kFeatureDim, 0.0);
    const auto px = raster.bytes();
    for (int r = 0; r < kRasterSide; ++r) {
        const std::size_t br = static_cast<std::size_t>(r / kPoolBlock);
        for (int c = 0; c < kRasterSide; ++c) {
            const std::size_t bc = static_cast<std::size_t>(c / kPoolBlock);
            const std::size_t src = (static_cast<std::size_t>(r) * kRasterSide + static_cast<std::size_t>(c)) * 3;
            const std::size_t dst = (br * kPooledSide + bc) * 3;
            for (int ch = 0; ch < 3; ++ch) f[dst + ch] += px[src + ch];
        }
    }
    constexpr double scale = 1.0 / (kPoolBlock * kPoolBlock * 255.0);
    for (std::size_t i = 0; i + 2 < kFeatureDim; ++i) f[i] *= scale;
    f[kFeatureDim - 2] = ego_speed;
    f[kFeatureDim - 1] = 1.0;
    return f;
}

ToyPolicy::ToyPolicy(std::size_t horizon, std::vector<double> weights)
    : horizon_(horizon), weights_(std::move(weights)) {
    if (weights_.size() != kFeatureDim * 2 * horizon_) throw std::invalid_argument("weight matrix has wrong size");
}

Trajectory ToyPolicy::predict(std::span<const double> features) const {
    const std::size_t k = 2 * horizon_;
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        const double fi = features[i];
        if (fi == 0.0) continue;
        const double* row = weights_.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) out[j] += fi * row[j];
    }
    Trajectory t;
    for (std::size_t h = 0; h < horizon_; ++h) t.points.push_back({out[2 * h], out[2 * h + 1]});
    return t;
}

Trajectory ToyPolicy::plan(const Observation& obs) {
    if (!obs.raster) throw std::invalid_argument("toy policy needs a raster");
    return predict(downsample_features(*obs.raster, obs.ego_speed));
}

void ToyPolicy::save(const std::string& path) const {
    nlohmann::json j = {{"format", "safedrive-toy-v1"},
                        {"H", horizon_},
                        {"feature_dim", kFeatureDim},
                        {"pool", kPoolBlock},
                        {"weights", weights_}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump() << '\n';
}

ToyPolicy ToyPolicy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("feature_dim").get<std::size_t>() != kFeatureDim) throw std::runtime_error("feature size mismatch");
    return ToyPolicy(j.at("H").get<std::size_t>(), j.at("weights").get<std::vector<double>>());
}

std::vector<double> fit_ridge(std::span<const double> features, std::span<const double> targets,
                              std::span<const double> counts, std::size_t d, std::size_t k, double l2) {
    const std::size_t n = counts.size();
    if (n == 0) throw EmptyDataset("ridge regression needs samples");
    if (features.size() != n * d || targets.size() != n * k) throw std::invalid_argument("ridge input sizes");
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> F(features.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const Eigen::Map<const RowMat> Y(targets.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    Eigen::VectorXd c(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) c[static_cast<Eigen::Index>(i)] = counts[i] / total;

    Eigen::MatrixXd W;
    if (n < d) {
        // dual form: W = F^T (C F F^T + l2 I)^-1 C Y
        Eigen::MatrixXd G = c.asDiagonal() * (F * F.transpose());
        G.diagonal().array() += l2;
        const Eigen::MatrixXd CY = c.asDiagonal() * Y;
        W = F.transpose() * G.partialPivLu().solve(CY);
    } else {
        Eigen::MatrixXd G = F.transpose() * c.asDiagonal() * F;
        G.diagonal().array() += l2;
        const Eigen::MatrixXd rhs = F.transpose() * c.asDiagonal() * Y;
        W = G.ldlt().solve(rhs);
    }
    std::vector<double> out(d * k);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < k; ++j)
            out[i * k + j] = W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

namespace {

int compare_frames(const DatasetFrame& a, const DatasetFrame& b) {
    const auto pa = a.raster.bytes(), pb = b.raster.bytes();
    if (const int r = std::memcmp(pa.data(), pb.data(), pa.size()); r != 0) return r;
    if (a.ego_speed != b.ego_speed) return a.ego_speed < b.ego_speed ? -1 : 1;
    for (std::size_t i = 0; i < a.label.horizon(); ++i) {
        const Vec2 &u = a.label.points[i], &v = b.label.points[i];
        if (u.x != v.x) return u.x < v.x ? -1 : 1;
        if (u.y != v.y) return u.y < v.y ? -1 : 1;
    }
    return 0;
}

}  // namespace

ToyPolicy train_toy(std::span<const DatasetFrame* const> frames, double l2) {
    if (frames.empty()) throw EmptyDataset("no frames to train on");
    const std::size_t H = frames.front()->label.horizon();
    for (const DatasetFrame* f : frames) {
        if (f->label.horizon() != H) throw DatasetError("frames disagree on H");
    }
    std::vector<const DatasetFrame*> order(frames.begin(), frames.end());
    std::sort(order.begin(), order.end(),
              [](const DatasetFrame* a, const DatasetFrame* b) { return compare_frames(*a, *b) < 0; });

    std::vector<double> X, Y, counts;
    const DatasetFrame* prev = nullptr;
    for (const DatasetFrame* f : order) {
        if (prev && compare_frames(*prev, *f) == 0) {
            counts.back() += 1.0;
            continue;
        }
        prev = f;
        const auto feat = downsample_features(f->raster, f->ego_speed);
        X.insert(X.end(), feat.begin(), feat.end());
        for (const Vec2& p : f->label.points) {
            Y.push_back(p.x);
            Y.push_back(p.y);
        }
        counts.push_back(1.0);
    }
    return ToyPolicy(H, fit_ridge(X, Y, counts, kFeatureDim, 2 * H, l2));
}

ToyPolicy train_toy(std::span<const DatasetFrame> frames, double l2) {
    std::vector<const DatasetFrame*> ptrs;
    for (const auto& f : frames) ptrs.push_back(&f);
    return train_toy(std::span<const DatasetFrame* const>(ptrs), l2);
}

Trajectory ConstantVelocityPlanner::plan(const Observation& obs) {
    Trajectory t;
    for (std::size_t k = 1; k <= horizon_; ++k) t.points.push_back({obs.ego_speed * dt_ * static_cast<double>(k), 0.0});
    return t;
}

Trajectory ExpertPlanner::plan(const Observation& obs) {
    if (!obs.world || !obs.route) throw std::invalid_argument("expert planner needs the world state");
    return expert_plan(*obs.world, *obs.route, cfg_);
}

DegradedPlanner::DegradedPlanner(std::uint64_t seed, double point_sigma, ExpertConfig cfg)
    : cfg_(cfg), rng_(mix64(seed, 0xde9ULL)), sigma_(point_sigma) {}

Trajectory DegradedPlanner::plan(const Observation& obs) {
    if (!obs.world || !obs.route) throw std::invalid_argument("degraded planner needs the world state");
    Trajectory t = expert_plan(*obs.world, *obs.route, cfg_);
    for (Vec2& p : t.points) p.y += sigma_ * rng_.normal();
    return t;
}

}  // namespace safedrive
