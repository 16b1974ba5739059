#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "safedrive/errors.hpp"
#include "safedrive/expert.hpp"

namespace safedrive {

namespace {

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) u = (u << 8) | p[i];
    return std::bit_cast<double>(u);
}

nlohmann::json schedule_json(const NoiseSchedule& s) {
    return {{"period", s.period},
            {"duration", s.duration},
            {"steer_amplitude", s.steer_amplitude},
            {"accel_amplitude", s.accel_amplitude}};
}

}  // namespace

std::size_t frame_record_size(std::size_t horizon) { return kRasterBytes + 8 + 16 * horizon + 8 + 1; }

void save_dataset(const Dataset& data, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const DatasetMeta& m = data.meta;
    nlohmann::json meta = {{"format", "safedrive-frames-v1"},
                           {"H", m.horizon},
                           {"dt", m.dt},
                           {"map", m.map_path},
                           {"seed", m.seed},
                           {"duration", m.duration},
                           {"schedule", schedule_json(m.schedule)},
                           {"raster", {{"width", kRasterSide}, {"height", kRasterSide}, {"channels", 3}}},
                           {"record_bytes", frame_record_size(m.horizon)},
                           {"counts",
                            {{"ticks", m.ticks},
                             {"recorded", m.recorded},
                             {"tainted", m.tainted},
                             {"exported", m.exported}}}};
    std::ofstream(fs::path(dir) / "meta.json") << meta.dump(2) << '\n';

    std::ofstream out(fs::path(dir) / "frames.bin", std::ios::binary);
    if (!out) throw DatasetError("cannot write frames.bin in " + dir);
    std::vector<std::uint8_t> rec;
    for (const DatasetFrame& f : data.frames) {
        if (f.label.horizon() != m.horizon) throw DatasetError("label horizon does not match dataset H");
        rec.clear();
        const auto px = f.raster.bytes();
        if (px.size() != kRasterBytes) throw DatasetError("raster must be 192x192x3");
        rec.insert(rec.end(), px.begin(), px.end());
        put_f64(rec, f.ego_speed);
        for (const Vec2& p : f.label.points) {
            put_f64(rec, p.x);
            put_f64(rec, p.y);
        }
        put_f64(rec, f.t);
        rec.push_back(f.noise_tainted ? 1 : 0);
        out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
}

DatasetMeta load_meta(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / "meta.json");
    if (!in) throw DatasetError("missing meta.json in " + dir);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("meta.json: ") + e.what());
    }
    DatasetMeta m;
    m.horizon = j.at("H").get<std::size_t>();
    m.dt = j.at("dt").get<double>();
    m.map_path = j.value("map", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.duration = j.value("duration", 0.0);
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        m.schedule = {s.at("period").get<double>(), s.at("duration").get<double>(),
                      s.at("steer_amplitude").get<double>(), s.at("accel_amplitude").get<double>()};
    }
    if (j.contains("counts")) {
        const auto& c = j["counts"];
        m.ticks = c.value("ticks", std::size_t{0});
        m.recorded = c.value("recorded", std::size_t{0});
        m.tainted = c.value("tainted", std::size_t{0});
        m.exported = c.value("exported", std::size_t{0});
    }
    return m;
}

std::vector<DatasetFrame> load_frames(const std::string& dir, bool include_tainted) {
    const DatasetMeta meta = load_meta(dir);
    const std::size_t H = meta.horizon;
    const std::size_t size = frame_record_size(H);
    std::ifstream in(std::filesystem::path(dir) / "frames.bin", std::ios::binary);
    if (!in) throw DatasetError("missing frames.bin in " + dir);
    std::vector<std::uint8_t> rec(size);
    std::vector<DatasetFrame> out;
    while (in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(size))) {
        const std::uint8_t* p = rec.data();
        const bool tainted = p[size - 1] != 0;
        if (tainted && !include_tainted) continue;
        DatasetFrame f;
        std::memcpy(f.raster.bytes().data(), p, kRasterBytes);
        p += kRasterBytes;
        f.ego_speed = get_f64(p);
        p += 8;
        f.label.points.resize(H);
        for (std::size_t k = 0; k < H; ++k, p += 16) f.label.points[k] = {get_f64(p), get_f64(p + 8)};
        f.t = get_f64(p);
        f.noise_tainted = tainted;
        out.push_back(std::move(f));
    }
    if (in.gcount() != 0) throw DatasetError("frames.bin ends with a partial record");
    return out;
}

}  // namespace safedrive
