// safedrive command line: dataset collection, toy training, open/closed-loop evaluation, rendering.

#include <CLI11.hpp>

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "safedrive/birdview.hpp"
#include "safedrive/errors.hpp"
#include "safedrive/evaluation.hpp"
#include "safedrive/expert.hpp"
#include "safedrive/policy.hpp"
#include "safedrive/tracking.hpp"
#include "safedrive/wire.hpp"

using namespace safedrive;

namespace {

EvalConfig load_config(const std::string& path) { return path.empty() ? EvalConfig{} : EvalConfig::load(path); }

std::shared_ptr<const MapData> load_map(const std::string& path) {
    return std::make_shared<const MapData>(MapData::load(path));
}

/// Builds a planner from "toy:FILE", "remote:HOST:PORT", "expert", "cv" or "degraded[:SIGMA]".
std::unique_ptr<Planner> make_planner(const std::string& spec, std::size_t episode, std::uint64_t seed) {
    if (spec == "expert") return std::make_unique<ExpertPlanner>();
    if (spec == "cv") return std::make_unique<ConstantVelocityPlanner>();
    if (spec.rfind("toy:", 0) == 0) return std::make_unique<ToyPolicy>(ToyPolicy::load(spec.substr(4)));
    if (spec.rfind("remote:", 0) == 0) {
        const auto [host, port] = wire::RemotePlanner::parse_endpoint(spec.substr(7));
        return std::make_unique<wire::RemotePlanner>(host, port);
    }
    if (spec == "degraded" || spec.rfind("degraded:", 0) == 0) {
        const double sigma = spec.size() > 9 ? std::stod(spec.substr(9)) : 0.3;
        return std::make_unique<DegradedPlanner>(seed + episode, sigma);
    }
    throw CLI::ValidationError("--policy", "unknown policy '" + spec + "'");
}

/// Replays dataset labels; the open-loop reference for "expert".
class LabelReplay : public Planner {
public:
    explicit LabelReplay(const std::vector<const DatasetFrame*>& frames) : frames_(frames) {}
    Trajectory plan(const Observation&) override { return frames_.at(next_++)->label; }
    std::string name() const override { return "label-replay"; }

private:
    const std::vector<const DatasetFrame*>& frames_;
    std::size_t next_ = 0;
};

void write_json(const nlohmann::json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"safedrive: 2D driving simulation, data pipeline and safe-set control"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with world/tracker/safety parameters")->check(CLI::ExistingFile);

    // collect
    auto* collect_cmd = app.add_subcommand("collect", "Record an expert dataset with noise augmentation");
    std::string c_map, c_out;
    std::uint64_t c_seed = 0;
    double c_duration = 60.0;
    std::size_t c_npcs = 8;
    bool c_clean = false;
    collect_cmd->add_option("--map", c_map, "Map JSON")->required()->check(CLI::ExistingFile);
    collect_cmd->add_option("--seed", c_seed, "World seed");
    collect_cmd->add_option("--duration", c_duration, "Seconds to simulate");
    collect_cmd->add_option("--out", c_out, "Output directory")->required();
    collect_cmd->add_option("--npcs", c_npcs, "Surrounding vehicles");
    collect_cmd->add_flag("--no-noise", c_clean, "Disable noise injection");

    // train-toy
    auto* train_cmd = app.add_subcommand("train-toy", "Fit the linear toy policy on one or more datasets");
    std::vector<std::string> t_data;
    std::string t_out;
    double t_l2 = 1e-3;
    train_cmd->add_option("--data", t_data, "Dataset directory (repeatable)")->required();
    train_cmd->add_option("--out", t_out, "Model file (JSON)")->required();
    train_cmd->add_option("--l2", t_l2, "Ridge regularizer");

    // eval-open
    auto* open_cmd = app.add_subcommand("eval-open", "Average displacement error on a dataset");
    std::string o_policy, o_data;
    open_cmd->add_option("--policy", o_policy, "toy:FILE | remote:HOST:PORT | expert | cv")->required();
    open_cmd->add_option("--data", o_data, "Dataset directory")->required();

    // eval-closed
    auto* closed_cmd = app.add_subcommand("eval-closed", "Closed-loop episodes on a scenario");
    std::string e_scenario, e_policy, e_report;
    bool e_no_safety = false;
    std::size_t e_episodes = 1;
    closed_cmd->add_option("--scenario", e_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    closed_cmd->add_option("--policy", e_policy, "toy:FILE | remote:HOST:PORT | expert | degraded[:SIGMA]")
        ->required();
    closed_cmd->add_flag("--no-safety", e_no_safety, "Bypass the safety filter");
    closed_cmd->add_option("--episodes", e_episodes, "Episode count");
    closed_cmd->add_option("--report", e_report, "Report JSON path ('-' for stdout)");

    // render
    auto* render_cmd = app.add_subcommand("render", "Render the bird view after K expert ticks");
    std::string r_map, r_out;
    std::uint64_t r_seed = 0;
    std::int64_t r_tick = 0;
    std::size_t r_npcs = 8;
    render_cmd->add_option("--map", r_map, "Map JSON")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--seed", r_seed, "World seed");
    render_cmd->add_option("--tick", r_tick, "Tick to render")->check(CLI::NonNegativeNumber);
    render_cmd->add_option("--out", r_out, "PNG path")->required();
    render_cmd->add_option("--npcs", r_npcs, "Surrounding vehicles");

    CLI11_PARSE(app, argc, argv);

    try {
        const EvalConfig cfg = load_config(config_path);

        if (*collect_cmd) {
            CollectConfig cc;
            cc.world = cfg.world;
            cc.render = cfg.render;
            cc.npc_count = c_npcs;
            if (c_clean) cc.schedule = NoiseSchedule::disabled();
            const Dataset data = collect(load_map(c_map), c_seed, c_duration, cc);
            save_dataset(data, c_out);
            std::printf("recorded %zu frames, %zu tainted, %zu exported -> %s\n", data.meta.recorded,
                        data.meta.tainted, data.meta.exported, c_out.c_str());
        } else if (*train_cmd) {
            std::vector<DatasetFrame> frames;
            for (const auto& d : t_data) {
                auto part = load_frames(d);
                for (auto& f : part) frames.push_back(std::move(f));
            }
            const ToyPolicy model = train_toy(frames, t_l2);
            model.save(t_out);
            std::printf("trained on %zu frames -> %s\n", frames.size(), t_out.c_str());
        } else if (*open_cmd) {
            const auto frames = load_frames(o_data);
            std::vector<const DatasetFrame*> ptrs;
            for (const auto& f : frames) ptrs.push_back(&f);
            std::unique_ptr<Planner> planner;
            if (o_policy == "expert") {
                planner = std::make_unique<LabelReplay>(ptrs);
            } else {
                planner = make_planner(o_policy, 0, 0);
            }
            const double ade = average_displacement(*planner, std::span<const DatasetFrame* const>(ptrs));
            write_json({{"policy", o_policy}, {"frames", ptrs.size()}, {"ade_m", ade}}, "-");
        } else if (*closed_cmd) {
            const Scenario sc = Scenario::load(e_scenario);
            const auto logs = run_suite(
                sc, [&](std::size_t i) { return make_planner(e_policy, i, sc.seed); }, cfg, !e_no_safety,
                e_episodes);
            nlohmann::json report = make_report(logs);
            report["scenario"] = e_scenario;
            report["policy"] = e_policy;
            report["safety"] = !e_no_safety;
            write_json(report, e_report);
            if (!e_report.empty() && e_report != "-") {
                const auto& a = report["aggregate"];
                std::printf("%zu episodes, success rate %.3f, collisions %zu, out-of-lane %zu\n", logs.size(),
                            a["success_rate"].get<double>(), a["collisions"].get<std::size_t>(),
                            a["out_of_lane"].get<std::size_t>());
            }
        } else if (*render_cmd) {
            CollectConfig cc;
            cc.world = cfg.world;
            cc.render = cfg.render;
            cc.npc_count = r_npcs;
            WorldState world = collection_world(load_map(r_map), r_seed, cc);
            TrackingController tracker(cfg.tracker);
            std::deque<WorldState> history{world};
            for (std::int64_t k = 0; k < r_tick; ++k) {
                Control u = cfg.world.limits.full_brake();
                try {
                    u = tracker.track(expert_plan(world, *world.ego.route), world.ego.speed);
                } catch (const OffRoute&) {
                    tracker.reset();
                }
                world = step_world(world, u);
                history.push_back(world);
                if (history.size() > cfg.render.history_needed()) history.pop_front();
            }
            const std::vector<WorldState> window(history.begin(), history.end());
            const RasterImage img = render(window, *world.ego.route, cfg.render);
            write_png(img, r_out);
            std::printf("tick %lld -> %s (hash %016llx)\n", static_cast<long long>(r_tick), r_out.c_str(),
                        static_cast<unsigned long long>(raster_hash(img)));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
