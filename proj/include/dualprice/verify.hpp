#pragma once

#include <string>
#include <vector>

#include "dualprice/dp.hpp"
#include "dualprice/model.hpp"
#include "dualprice/structure.hpp"

namespace dualprice {

enum class CheckStatus { Pass, Fail, Skip };

struct CheckResult {
    std::string check_id;
    std::string scope;       // periods / inventory range covered
    std::string expected;
    std::string observed;    // numeric summary
    double tolerance = 0.0;
    CheckStatus status = CheckStatus::Skip;
    std::string reason;      // unmet hypothesis for skips

    bool passed() const { return status == CheckStatus::Pass; }
    bool failed() const { return status == CheckStatus::Fail; }
};

struct BatteryOptions {
    double tie_tol = kTieTol;
    int nodes = 32;
    /// Extra solves (q_t bump, benchmarks, unified) are enabled by default.
    bool with_resolves = true;
    SolveOptions solve;
};

/// Runs every applicable structural check on a solved instance; checks whose
/// hypotheses are unmet come back as Skip with the reason, never as silent
/// passes. Results are sorted by check_id.
std::vector<CheckResult> run_battery(const ProblemSpec& spec,
                                     const Solution& sol,
                                     const BatteryOptions& opt = {});

struct BruteForceOptions {
    int demand_points_s = 201;
    int demand_points_l = 201;
    int nodes = 5;
                               // size guards
    int max_states = 101;
    int max_demand_points = 201;
    int max_nodes = 7;
    int max_T = 3;
};

/// Exhaustive demand-grid dynamic program over the same inventory grid and
/// interpolation rules as solve(). Ties resolve to the smallest d_s + d_l,
/// then the smallest d_l. Guarded against oversized instances.
Solution brute_force_dp(const ProblemSpec& spec, const InventoryGrid& grid,
                        const BruteForceOptions& opt = {});

/// Noise taxonomy row for an instance (per market: additive, multiplicative,
/// mixed or deterministic), as used by the selling-strategy table.
enum class NoiseType { Deterministic, Additive, Multiplicative, Mixed };
NoiseType classify_noise(const ProblemSpec& spec, Market m);
const char* noise_type_name(NoiseType t);

}  // namespace dualprice
