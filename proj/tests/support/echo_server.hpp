#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <thread>

#include "safedrive/trajectory.hpp"
#include "safedrive/wire.hpp"

namespace safedrive::testing {

/// Loopback planner server on an ephemeral port, serving one connection at a time.
class EchoServer {
public:
    enum class Mode {
        answer,      ///< reply with respond(request)
        close,       ///< read a request, then drop the connection
        silent,      ///< read a request, never answer
        bad_magic,   ///< reply with a wrong magic
        truncated,   ///< reply with a header and half the payload, then close
    };

    using Responder = std::function<Trajectory(const wire::Request&)>;

    explicit EchoServer(Responder respond, Mode mode = Mode::answer,
                        std::chrono::milliseconds delay = std::chrono::milliseconds(0));
    ~EchoServer();
    EchoServer(const EchoServer&) = delete;
    EchoServer& operator=(const EchoServer&) = delete;

    std::uint16_t port() const { return port_; }
    std::size_t requests() const { return requests_.load(); }

    static Responder fixed(Trajectory t);

private:
    void serve();
    void handle(int fd);

    Responder respond_;
    Mode mode_;
    std::chrono::milliseconds delay_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stop_{false};
    std::atomic<std::size_t> requests_{0};
    std::thread thread_;
};

}  // namespace safedrive::testing
