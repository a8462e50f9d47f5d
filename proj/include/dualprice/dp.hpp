#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualprice/model.hpp"
#include "dualprice/quadrature.hpp"

namespace dualprice {

/// Uniform inventory grid. The lattice is anchored at 0 so that 0 is always
/// a grid point; requested bounds are widened outward to the lattice.
struct InventoryGrid {
    double I_min = 0.0;
    double I_max = 0.0;
    double step = 0.0;
    int n = 0;

    InventoryGrid() = default;
    InventoryGrid(double lo, double hi, double step_);

    double point(int k) const { return I_min + step * k; }
    /// Index of the cell [point(k), point(k+1)] containing I, clamped.
    int cell(double I) const;
};

/// Piecewise-linear read of a table over the grid, with boundary-slope
/// extrapolation outside.
double interp_on_grid(const InventoryGrid& g, const std::vector<double>& table,
                      double I);

struct Solution {
    InventoryGrid grid;
    int T = 0;
    /// V[t-1] holds V_t over the grid, t = 1..T+1 (V[T] is the terminal).
    std::vector<std::vector<double>> V;
    /// d_s[t-1], d_l[t-1] hold the period-t policy over the grid, t = 1..T.
    std::vector<std::vector<double>> d_s;
    std::vector<std::vector<double>> d_l;
};

struct SolveOptions {
    int nodes = 32;             // quadrature nodes per nondegenerate component
    double tol_opt = 1e-7;      // relative stage-objective tolerance
    int max_sweeps = 200;
    int threads = 0;            // 0: DUALPRICE_THREADS env or hardware
};

/// Optimizer non-convergence, carrying the best iterate found.
struct SolverError : std::runtime_error {
    int t;
    double I;
    double best_d_s, best_d_l, best_J;
    SolverError(int t_, double I_, double ds, double dl, double J)
        : std::runtime_error("stage optimizer failed to converge at t=" +
                             std::to_string(t_) + ", I=" + std::to_string(I_)),
          t(t_), I(I_), best_d_s(ds), best_d_l(dl), best_J(J) {}
};

/// V_{T+1}(I) = c_e * min{0, I}.
double terminal_value(double I, const CostSpec& costs);

/// Discretized per-period noise, shared by the solver, the benchmarks and
/// the oracles.
struct PeriodNoise {
    JointNoise eps;    // (eps_s, eps_l) pairs
    JointNoise omega;  // (omega_s, omega_l) pairs, always independent
};

PeriodNoise discretize_period(const ProblemSpec& spec, int t, int nodes);

/// J_t(I, d_s, d_l) with next_V read by piecewise-linear interpolation.
/// Holding/backorder cost is charged on I + q_t - D_s only; the next-period
/// inventory subtracts both markets' demand.
double stage_objective(double I, double d_s, double d_l, int t,
                       const std::vector<double>& next_V,
                       const ProblemSpec& spec, const InventoryGrid& grid,
                       const PeriodNoise& noise);

struct StageOptimum {
    double d_s = 0.0;
    double d_l = 0.0;
    double J = 0.0;
};

/// Concave 2-D maximization on a box: coordinate ascent with golden-section
/// line searches, a line search along the trade direction (x + z, y - z), a
/// deterministic compass polish, and a final shrink to the smallest x + y
/// among tolerance-equivalent optima. slice_x / slice_y may supply cached
/// restrictions (fix the other coordinate); pass nullptr to derive them
/// from J. pin_y fixes y = 0. Throws SolverError (with the given t, I
/// context) after max_sweeps without convergence.
struct BoxProblem {
    std::function<double(double, double)> J;
    std::function<std::function<double(double)>(double)> slice_x;  // given y
    std::function<std::function<double(double)>(double)> slice_y;  // given x
};

StageOptimum maximize_concave_box(const BoxProblem& pb, double x_lo,
                                  double x_hi, double y_lo, double y_hi,
                                  bool pin_y, const SolveOptions& opt, int t_ctx,
                                  double I_ctx);

/// Coordinate ascent with a golden-section line search per coordinate.
/// Among tolerance-equivalent optima the smallest d_s + d_l is returned;
/// last_period_rule pins d_l = 0 at t = T. Throws SolverError after
/// max_sweeps without convergence.
StageOptimum optimize_stage(double I, int t, const std::vector<double>& next_V,
                            const ProblemSpec& spec, const InventoryGrid& grid,
                            const PeriodNoise& noise, const SolveOptions& opt);

/// Backward induction over t = T..1. Grid points within a period are solved
/// in parallel; the result is independent of the thread count.
Solution solve(const ProblemSpec& spec, const InventoryGrid& grid,
               const SolveOptions& opt = {});

/// Interpolated value read; t in 1..T+1. For t = T+1 the terminal condition
/// is evaluated exactly instead of the stored table.
double value_at(const Solution& sol, int t, double I, const CostSpec& costs);

/// Interpolated policy read, clamped to the demand bounds; t in 1..T.
double policy_at(const Solution& sol, int t, double I, Market m,
                 const ProblemSpec& spec);

/// Golden-section maximizer of a unimodal f on [lo, hi] to |interval| < xtol.
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double xtol);

/// Runs fn(i) for i in [0, n) on worker threads (DUALPRICE_THREADS caps the
/// pool). Exceptions are rethrown on the caller.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace dualprice
