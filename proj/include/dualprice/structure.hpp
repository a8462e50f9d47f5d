#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualprice/dp.hpp"
#include "dualprice/model.hpp"

namespace dualprice {

constexpr double kTieTol = 1e-4;  // a market counts as open above this

enum class Preference { OnSiteFirst, LongDistanceFirst, Ambiguous };

const char* preference_name(Preference p);

struct MarketThreshold {
    bool found = false;
    bool closed_by_rule = false;  // long-distance in the last period
    double I_star = 0.0;          // midpoint of the bracketing cell
    double residual = 0.0;        // marginal-condition residual at I_star
    /// Distance from the condition target to the interval of value slopes
    /// across the threshold. Zero when the target sits inside the
    /// (sub)gradient there, which is the form the condition takes when the
    /// threshold rides a cost kink.
    double bracket_gap = 0.0;
    double condition_target = 0.0;  // right-hand side of that condition
    int first_open = -1;          // grid index of the first open point
};

struct ThresholdReport {
    // Entry t-1 describes period t.
    std::vector<MarketThreshold> s;
    std::vector<MarketThreshold> l;
    std::vector<Preference> preference;
};

/// Detects per-period market-opening thresholds and the marginal-condition
/// residuals at them. Requires a multiplicative-noise problem (omega
/// degenerate in both markets). Throws if a free market never opens on the
/// grid.
ThresholdReport find_thresholds(const Solution& sol, const ProblemSpec& spec,
                                int nodes = 32, double tie_tol = kTieTol);

enum class Benchmark { B_l, B_s };

struct BenchmarkPolicy {
    std::vector<double> d_s;
    std::vector<double> d_l;
};

/// One-period benchmark relaxation: B_l replaces the long-distance
/// withdrawal eps_l*d_l + omega_l by d_l; B_s replaces the on-site one by
/// d_s (in the cost term as well). next_V is the original V_{t+1} table.
BenchmarkPolicy solve_benchmark(Benchmark which, int t,
                                const std::vector<double>& next_V,
                                const ProblemSpec& spec,
                                const InventoryGrid& grid,
                                const SolveOptions& opt = {});

struct PreferenceVerdict {
    int t = 0;
    bool theorem3_i = false;   // R'_s(0) > R'_l(0) + c_p  => I*_s < I*_l
    bool theorem3_ii = false;  // R'_l(0) > R'_s(0) + c_h  => I*_s > I*_l
    bool theorem4_gate = false;  // (R'_l,t(0) - a R'_l,t+1(0))/a > c_p
    bool theorem4_i = false;
    bool theorem4_ii = false;  // gate and R'_s(0) < R'_l(0) + c_p => I*_s > I*_l
    std::optional<bool> implied_s_first;  // expected I*_s < I*_l?
    double observed_gap = 0.0;            // I*_s - I*_l
    Preference observed = Preference::Ambiguous;
    bool applicable = false;
    bool pass = true;  // vacuously true when no hypothesis applies
    std::string note;
};

/// Evaluates which market-preference theorem hypotheses hold and checks the
/// implied threshold ordering against the report (one-grid-step slack).
PreferenceVerdict classify_preference(const ProblemSpec& spec, int t,
                                      const ThresholdReport& th,
                                      const InventoryGrid& grid);

struct CrossingReport {
    int t = 0;
    int checked = 0;
    int violations = 0;
    double worst_violation = 0.0;
    /// Inventory where E[eps_s H'(.)] changes sign, if it does.
    std::optional<double> sign_change_I;
    /// Inventory where d*_s - d*_l changes sign, if it does.
    std::optional<double> policy_cross_I;
    bool pass = false;
};

/// Equal-markets preference crossing: requires identical revenue curves,
/// noise laws and demand bounds across markets. Checks, per grid point,
/// that sign(E[eps_s H'(I + q_t - eps_s d*_s)]) implies the corresponding
/// ordering of d*_s and d*_l within tie_tol.
CrossingReport preference_crossing(const Solution& sol, const ProblemSpec& spec,
                                   int t, int nodes = 32,
                                   double tie_tol = kTieTol);

struct UnifiedSolution {
    InventoryGrid grid;
    int T = 0;
    std::vector<std::vector<double>> V;    // V[t-1] = V^u_t, t = 1..T+1
    std::vector<std::vector<double>> p_u;  // p_u[t-1], t = 1..T
    std::vector<double> I_u_star;          // per period, -inf if never closed
    double p_bar = 0.0;                    // shared price ceiling
};

/// Single-price variant: both markets must carry LinearDemand curves with a
/// common price ceiling (d_i = beta_i (1 - p / p_bar)). Maximizes over
/// p in [p_lower, p_bar] per period/state; ties resolve to the largest p
/// (the smallest total demand).
UnifiedSolution solve_unified(const ProblemSpec& spec, const InventoryGrid& grid,
                              const SolveOptions& opt = {});

struct CorrelationPointCheck {
    double I = 0.0;
    double v_slope = 0.0;
    double bound = 0.0;
    bool ok = false;
};

struct CorrelationReport {
    double a = 0.0;
    // Proposition: d*_s(I) > 0 implies V'_t(I) < R'_s(0), all periods.
    int prop1_checked = 0;
    int prop1_violations = 0;
    double prop1_worst_margin = 0.0;
    // Negative correlation: on-site threshold with marginal condition.
    bool threshold_found = false;
    double I_star_s = 0.0;
    double residual_s = 0.0;
    bool dichotomy_ok = false;
    bool pass = false;
};

/// Correlated-demand checks; requires PerfectLinear correlation.
CorrelationReport check_correlated(const Solution& sol, const ProblemSpec& spec,
                                   double tie_tol = kTieTol);

struct Remark3Report {
    int case_id = 0;      // 1: c_p=c_h=0, 2: c_p=0<c_h, 3: c_h=0<c_p
    double threshold_gap = 0.0;  // I*_s - I*_l at t=1
    int policy_violations = 0;
    double worst_violation = 0.0;
    bool pass = false;
    std::string note;
};

/// Special cost cases for identical markets: equal thresholds when both
/// unit costs vanish, and pointwise policy dominance when exactly one does.
Remark3Report remark3_case(const Solution& sol, const ProblemSpec& spec,
                           int nodes = 32, double tie_tol = kTieTol);

/// V'_t by central differences on the value table (interior), one-sided at
/// the ends.
double value_slope(const Solution& sol, int t, int k);

}  // namespace dualprice
