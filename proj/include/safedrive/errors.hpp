#pragma once

#include <stdexcept>
#include <string>

namespace safedrive {

// Error types raised across the stack. Each wraps a human-readable message.

struct MapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoRoute : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OffRoute : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientFuture : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyHistory : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoincidentPositions : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Planner did not answer within its deadline.
struct PlannerTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Planner answered with bytes that do not decode to a valid trajectory.
struct MalformedResponse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace safedrive
