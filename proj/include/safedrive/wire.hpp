#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "safedrive/birdview.hpp"
#include "safedrive/policy.hpp"
#include "safedrive/trajectory.hpp"

namespace safedrive::wire {

// Little-endian framing.
//   request:  "BVP1" | ego_speed f64 | raster 110592 bytes
//   response: "BVT1" | H u32 | 2H f64 (x1, y1, ..., xH, yH)

inline constexpr char kRequestMagic[4] = {'B', 'V', 'P', '1'};
inline constexpr char kResponseMagic[4] = {'B', 'V', 'T', '1'};
inline constexpr std::size_t kRequestBytes = 4 + 8 + kRasterBytes;
inline constexpr std::uint32_t kMaxHorizon = 1024;

struct Request {
    double ego_speed = 0.0;
    RasterImage raster;
};

std::vector<std::uint8_t> encode_request(double ego_speed, const RasterImage& raster);
/// Throws MalformedResponse on bad magic or size.
Request decode_request(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_response(const Trajectory& traj);
/// Throws MalformedResponse on bad magic, size, or non-finite values.
Trajectory decode_response(std::span<const std::uint8_t> bytes);

/// Blocking socket helpers. Return false on EOF or error.
bool write_all(int fd, std::span<const std::uint8_t> bytes);
bool read_exact(int fd, std::span<std::uint8_t> out);

/// Client for an external planner speaking the protocol over one persistent TCP connection.
class RemotePlanner : public Planner {
public:
    /// Connects lazily on the first plan() call.
    RemotePlanner(std::string host, std::uint16_t port, std::size_t horizon = kDefaultHorizon,
                  std::chrono::milliseconds timeout = std::chrono::milliseconds(1000));
    ~RemotePlanner() override;
    RemotePlanner(const RemotePlanner&) = delete;
    RemotePlanner& operator=(const RemotePlanner&) = delete;

    /// Throws PlannerTimeout or MalformedResponse; the connection is dropped on either.
    Trajectory plan(const Observation& obs) override;
    std::string name() const override { return "remote:" + host_ + ":" + std::to_string(port_); }

    /// Parses "HOST:PORT".
    static std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& spec);

private:
    void connect_now();
    void close_now();

    std::string host_;
    std::uint16_t port_;
    std::size_t horizon_;
    std::chrono::milliseconds timeout_;
    int fd_ = -1;
};

}  // namespace safedrive::wire
