#pragma once

// Configuration and result bookkeeping shared by the symbolic and
// explicit solvers. Both engines implement the same sweeps with the same
// stopping rule so their iterates coincide step for step.

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tsg {

struct SolverConfig {
    double epsilon = 1e-6;   // convergence threshold for the sup-norm test
    int max_iters = 100000;
    bool relative = true;    // maximum relative difference by default
    bool tie_lexicographic = false;  // deterministic strategy export filter
};

struct NonConvergenceError : std::runtime_error {
    double last_norm;
    int iterations;
    NonConvergenceError(double norm, int iters)
        : std::runtime_error("value iteration did not converge after " + std::to_string(iters) +
                             " iterations (sup-norm " + std::to_string(norm) + ")"),
          last_norm(norm),
          iterations(iters) {}
};

struct CheckStats {
    int iterations = 0;
    double final_norm = 0.0;
    std::size_t prob0_states = 0;
    std::size_t prob1_states = 0;
    std::size_t inf_states = 0;
    double qual_seconds = 0.0;   // precomputation
    double quant_seconds = 0.0;  // numerical iteration
    std::size_t value_nodes = 0;     // symbolic engine only
    std::size_t strategy_size = 0;   // nodes (symbolic) or entries (explicit)
};

// Pointwise distance used by convergence tests and the approximate
// equality operator; the second argument is the reference value. Equal
// infinities are at distance 0.
inline double value_distance(double a, double b, bool relative) {
    if (a == b) return 0.0;
    if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
    double d = std::fabs(a - b);
    return relative ? d / std::max(std::fabs(b), 1e-12) : d;
}

namespace detail {
inline double now_seconds() {
    using namespace std::chrono;
    return duration_cast<duration<double>>(steady_clock::now().time_since_epoch()).count();
}
}  // namespace detail

}  // namespace tsg
