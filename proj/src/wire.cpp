#include "safedrive/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>

#include "safedrive/errors.hpp"

namespace safedrive::wire {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) u = (u << 8) | p[i];
    return std::bit_cast<double>(u);
}

}  // namespace

std::vector<std::uint8_t> encode_request(double ego_speed, const RasterImage& raster) {
    if (raster.bytes().size() != kRasterBytes) throw std::invalid_argument("raster must be 192x192x3");
    std::vector<std::uint8_t> out(kRequestMagic, kRequestMagic + 4);
    out.reserve(kRequestBytes);
    put_f64(out, ego_speed);
    out.insert(out.end(), raster.bytes().begin(), raster.bytes().end());
    return out;
}

Request decode_request(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kRequestBytes) throw MalformedResponse("request has wrong size");
    if (std::memcmp(bytes.data(), kRequestMagic, 4) != 0) throw MalformedResponse("bad request magic");
    Request r;
    r.ego_speed = get_f64(bytes.data() + 4);
    std::memcpy(r.raster.bytes().data(), bytes.data() + 12, kRasterBytes);
    return r;
}

std::vector<std::uint8_t> encode_response(const Trajectory& traj) {
    std::vector<std::uint8_t> out(kResponseMagic, kResponseMagic + 4);
    put_u32(out, static_cast<std::uint32_t>(traj.horizon()));
    for (const Vec2& p : traj.points) {
        put_f64(out, p.x);
        put_f64(out, p.y);
    }
    return out;
}

Trajectory decode_response(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw MalformedResponse("response shorter than its header");
    if (std::memcmp(bytes.data(), kResponseMagic, 4) != 0) throw MalformedResponse("bad response magic");
    const std::uint32_t h = get_u32(bytes.data() + 4);
    if (bytes.size() != 8 + 16 * static_cast<std::size_t>(h)) throw MalformedResponse("response has wrong size");
    Trajectory t;
    for (std::uint32_t k = 0; k < h; ++k) {
        const std::uint8_t* p = bytes.data() + 8 + 16 * static_cast<std::size_t>(k);
        t.points.push_back({get_f64(p), get_f64(p + 8)});
    }
    if (!t.finite()) throw MalformedResponse("response has non-finite coordinates");
    return t;
}

bool write_all(int fd, std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        done += static_cast<std::size_t>(n);
    }
    return true;
}

bool read_exact(int fd, std::span<std::uint8_t> out) {
    std::size_t done = 0;
    while (done < out.size()) {
        const ssize_t n = ::recv(fd, out.data() + done, out.size() - done, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        done += static_cast<std::size_t>(n);
    }
    return true;
}

RemotePlanner::RemotePlanner(std::string host, std::uint16_t port, std::size_t horizon,
                             std::chrono::milliseconds timeout)
    : host_(std::move(host)), port_(port), horizon_(horizon), timeout_(timeout) {}

RemotePlanner::~RemotePlanner() { close_now(); }

std::pair<std::string, std::uint16_t> RemotePlanner::parse_endpoint(const std::string& spec) {
    const auto colon = spec.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
        throw std::invalid_argument("endpoint must be HOST:PORT, got '" + spec + "'");
    int port = 0;
    const char* first = spec.data() + colon + 1;
    const char* last = spec.data() + spec.size();
    const auto [end, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || end != last || port <= 0 || port > 65535) throw std::invalid_argument("port out of range in '" + spec + "'");
    return {spec.substr(0, colon), static_cast<std::uint16_t>(port)};
}

void RemotePlanner::close_now() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void RemotePlanner::connect_now() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0 || !res)
        throw PlannerTimeout("cannot resolve " + host_);
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw PlannerTimeout("cannot connect to " + host_ + ":" + std::to_string(port_));
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Trajectory RemotePlanner::plan(const Observation& obs) {
    if (!obs.raster) throw std::invalid_argument("remote planner needs a raster");
    if (fd_ < 0) connect_now();
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    if (!write_all(fd_, encode_request(obs.ego_speed, *obs.raster))) {
        close_now();
        throw MalformedResponse("connection closed while sending");
    }

    auto recv_until = [&](std::uint8_t* dst, std::size_t n) {
        std::size_t done = 0;
        while (done < n) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                                    std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                close_now();
                throw PlannerTimeout("planner did not answer in time");
            }
            pollfd pfd{fd_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (rc < 0 && errno == EINTR) continue;
            if (rc == 0) {
                close_now();
                throw PlannerTimeout("planner did not answer in time");
            }
            const ssize_t got = ::recv(fd_, dst + done, n - done, 0);
            if (got < 0 && errno == EINTR) continue;
            if (got <= 0) {
                close_now();
                throw MalformedResponse("connection closed before a full response");
            }
            done += static_cast<std::size_t>(got);
        }
    };

    std::vector<std::uint8_t> buf(8);
    recv_until(buf.data(), 8);
    if (std::memcmp(buf.data(), kResponseMagic, 4) != 0) {
        close_now();
        throw MalformedResponse("bad response magic");
    }
    const std::uint32_t h = get_u32(buf.data() + 4);
    if (h != horizon_ || h > kMaxHorizon) {
        close_now();
        throw MalformedResponse("response horizon " + std::to_string(h) + " != " + std::to_string(horizon_));
    }
    buf.resize(8 + 16 * static_cast<std::size_t>(h));
    recv_until(buf.data() + 8, buf.size() - 8);
    try {
        return decode_response(buf);
    } catch (const MalformedResponse&) {
        close_now();
        throw;
    }
}

}  // namespace safedrive::wire
