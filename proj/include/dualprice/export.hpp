#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dualprice/dp.hpp"
#include "dualprice/sim.hpp"
#include "dualprice/structure.hpp"
#include "dualprice/verify.hpp"

#include "json.hpp"

namespace dualprice {

/// Settings stamped into every artifact so a CSV is reproducible from its
/// header alone.
struct ArtifactMeta {
    uint64_t spec_hash = 0;
    double grid_min = 0.0, grid_max = 0.0, grid_step = 0.0;
    int nodes = 0;
    uint64_t seed = 0;
    std::string command;
};

std::string meta_header(const ArtifactMeta& meta);
nlohmann::json meta_json(const ArtifactMeta& meta);

/// Columns: t, I, V, d_s_star, d_l_star; '.' decimals, LF endings.
void write_policy_csv(std::ostream& os, const Solution& sol,
                      const ArtifactMeta& meta);

/// Period slice over [I_lo, I_hi]: columns I, d_s_star, d_l_star.
void write_policy_slice_csv(std::ostream& os, const Solution& sol, int t,
                            double I_lo, double I_hi, const ProblemSpec& spec,
                            const ArtifactMeta& meta);

nlohmann::json solution_json(const ProblemSpec& spec, const Solution& sol,
                             const ArtifactMeta& meta);
nlohmann::json thresholds_json(const ThresholdReport& th, int T,
                               const ArtifactMeta& meta);
nlohmann::json battery_json(const std::vector<CheckResult>& results,
                            const ArtifactMeta& meta);
nlohmann::json simstats_json(const SimStats& stats, double I0,
                             const SimOptions& opt, const ArtifactMeta& meta);
nlohmann::json unified_json(const UnifiedSolution& us, const ArtifactMeta& meta);

void write_unified_csv(std::ostream& os, const UnifiedSolution& us,
                       const ArtifactMeta& meta);

/// Columns: path, t, I, d_s, d_l, D_s, D_l, cash.
void write_trace_csv(std::ostream& os, const std::vector<PathTrace>& traces,
                     const ArtifactMeta& meta);

}  // namespace dualprice
