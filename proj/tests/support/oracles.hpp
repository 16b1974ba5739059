#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "safedrive/rng.hpp"
#include "safedrive/safety.hpp"

namespace safedrive::testing {

/// Largest component error of the analytic phi gradient against central differences,
/// relative to max(1, |gradient|_inf), over `states` random configurations with d >= 0.1.
double max_gradient_error(std::uint64_t seed, int states, const SafetyParams& p = {});

/// Outcome of one random projection instance checked against a 401x401 grid search.
struct QpCheck {
    bool qp_feasible = false;
    bool grid_feasible = false;
    double qp_objective = 0.0;
    double grid_objective = 0.0;
    double cell_tolerance = 0.0;  ///< objective change across one grid cell at the optimum
    bool kkt = false;             ///< first-order optimality at the returned point
    bool near_cell = false;       ///< a feasible grid point lies within one cell of the optimum
    bool gap_ok = true;           ///< grid objective within cell_tolerance when near_cell
    bool ok = false;
};
QpCheck check_qp_instance(Rng& rng, int grid = 401);

/// One adversarial pursuit scenario on the control-affine model.
struct InvarianceRun {
    double phi0 = 0.0;
    double phi_max = 0.0;
    /// Largest phi while every filtered command so far was feasible.
    double phi_max_feasible = 0.0;
    int active_ticks = 0;
    int infeasible_ticks = 0;
    double first_infeasible_s = -1.0;
    bool first_activation_infeasible = false;
    /// Largest one-step change of phi over ticks where a feasible constraint was enforced.
    double max_active_rise = -std::numeric_limits<double>::infinity();
};
/// Ego chases a constant-velocity obstacle for `seconds` at step dt, filtered by safe_control.
InvarianceRun run_invariance(std::uint64_t seed, double seconds = 60.0, double dt = 0.01,
                             const SafetyParams& p = {});

}  // namespace safedrive::testing
