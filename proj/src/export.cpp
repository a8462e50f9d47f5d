#include "dualprice/export.hpp"

#include <cinttypes>
#include <cstdio>
#include <iomanip>

namespace dualprice {

namespace {

// Shortest round-trip decimal, '.' separator regardless of locale.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

}  // namespace

std::string meta_header(const ArtifactMeta& meta) {
    std::string s;
    s += "# dualprice artifact";
    if (!meta.command.empty()) s += " (" + meta.command + ")";
    s += "\n# spec_hash=" + hash_hex(meta.spec_hash) + " grid=[" +
         num(meta.grid_min) + "," + num(meta.grid_max) + "," +
         num(meta.grid_step) + "] nodes=" + std::to_string(meta.nodes) +
         " seed=" + std::to_string(meta.seed) + "\n";
    return s;
}

nlohmann::json meta_json(const ArtifactMeta& meta) {
    return {{"spec_hash", hash_hex(meta.spec_hash)},
            {"grid", {meta.grid_min, meta.grid_max, meta.grid_step}},
            {"nodes", meta.nodes},
            {"seed", meta.seed},
            {"command", meta.command}};
}

void write_policy_csv(std::ostream& os, const Solution& sol,
                      const ArtifactMeta& meta) {
    os << meta_header(meta) << "t,I,V,d_s_star,d_l_star\n";
    for (int t = 1; t <= sol.T; ++t)
        for (int k = 0; k < sol.grid.n; ++k)
            os << t << ',' << num(sol.grid.point(k)) << ','
               << num(sol.V[t - 1][k]) << ',' << num(sol.d_s[t - 1][k]) << ','
               << num(sol.d_l[t - 1][k]) << '\n';
}

void write_policy_slice_csv(std::ostream& os, const Solution& sol, int t,
                            double I_lo, double I_hi, const ProblemSpec& spec,
                            const ArtifactMeta& meta) {
    os << meta_header(meta) << "I,d_s_star,d_l_star\n";
    for (int k = 0; k < sol.grid.n; ++k) {
        const double I = sol.grid.point(k);
        if (I < I_lo - 1e-12 || I > I_hi + 1e-12) continue;
        os << num(I) << ',' << num(sol.d_s[t - 1][k]) << ','
           << num(sol.d_l[t - 1][k]) << '\n';
    }
    (void)spec;
}

nlohmann::json solution_json(const ProblemSpec& spec, const Solution& sol,
                             const ArtifactMeta& meta) {
    nlohmann::json j;
    j["meta"] = meta_json(meta);
    j["T"] = sol.T;
    j["q"] = spec.q;
    j["costs"] = {{"c_h", spec.costs.c_h},
                  {"c_p", spec.costs.c_p},
                  {"c_e", spec.costs.c_e},
                  {"alpha", spec.costs.alpha}};
    j["grid"] = {{"I_min", sol.grid.I_min},
                 {"I_max", sol.grid.I_max},
                 {"step", sol.grid.step},
                 {"points", sol.grid.n}};
    j["V1_at_zero"] = interp_on_grid(sol.grid, sol.V[0], 0.0);
    return j;
}

nlohmann::json thresholds_json(const ThresholdReport& th, int T,
                               const ArtifactMeta& meta) {
    nlohmann::json j;
    j["meta"] = meta_json(meta);
    auto dump = [](const MarketThreshold& m) {
        nlohmann::json e;
        e["found"] = m.found;
        e["closed_by_rule"] = m.closed_by_rule;
        if (m.found) {
            e["I_star"] = m.I_star;
            e["residual"] = m.residual;
            e["condition_target"] = m.condition_target;
        }
        return e;
    };
    for (int t = 1; t <= T; ++t) {
        nlohmann::json e;
        e["t"] = t;
        e["on_site"] = dump(th.s[t - 1]);
        e["long_distance"] = dump(th.l[t - 1]);
        e["preference"] = preference_name(th.preference[t - 1]);
        j["periods"].push_back(std::move(e));
    }
    return j;
}

nlohmann::json battery_json(const std::vector<CheckResult>& results,
                            const ArtifactMeta& meta) {
    nlohmann::json j;
    j["meta"] = meta_json(meta);
    int passed = 0, failed = 0, skipped = 0;
    for (const auto& r : results) {
        nlohmann::json e;
        e["name"] = r.check_id;
        e["scope"] = r.scope;
        e["hypothesis"] = r.reason.empty() ? "met" : r.reason;
        e["expected"] = r.expected;
        e["observed"] = r.observed;
        e["tolerance"] = r.tolerance;
        switch (r.status) {
            case CheckStatus::Pass:
                e["pass"] = true;
                ++passed;
                break;
            case CheckStatus::Fail:
                e["pass"] = false;
                ++failed;
                break;
            case CheckStatus::Skip:
                e["pass"] = nullptr;
                e["skipped"] = true;
                ++skipped;
                break;
        }
        j["checks"].push_back(std::move(e));
    }
    j["summary"] = {{"passed", passed}, {"failed", failed}, {"skipped", skipped}};
    return j;
}

nlohmann::json simstats_json(const SimStats& stats, double I0,
                             const SimOptions& opt, const ArtifactMeta& meta) {
    nlohmann::json j;
    j["meta"] = meta_json(meta);
    j["I0"] = I0;
    j["n_paths"] = stats.n_paths;
    j["mean_profit"] = stats.mean_profit;
    j["std_error"] = stats.std_error;
    j["terminal_backlog_rate"] = stats.terminal_backlog_rate;
    j["grid_escape"] = stats.grid_escape;
    j["accounting"] =
        opt.mode == Accounting::Expectation ? "expectation" : "realized";
    return j;
}

nlohmann::json unified_json(const UnifiedSolution& us,
                            const ArtifactMeta& meta) {
    nlohmann::json j;
    j["meta"] = meta_json(meta);
    j["p_bar"] = us.p_bar;
    j["I_u_star"] = us.I_u_star;
    return j;
}

void write_unified_csv(std::ostream& os, const UnifiedSolution& us,
                       const ArtifactMeta& meta) {
    os << meta_header(meta) << "t,I,p_u,V_u\n";
    for (int t = 1; t <= us.T; ++t)
        for (int k = 0; k < us.grid.n; ++k)
            os << t << ',' << num(us.grid.point(k)) << ','
               << num(us.p_u[t - 1][k]) << ',' << num(us.V[t - 1][k]) << '\n';
}

void write_trace_csv(std::ostream& os, const std::vector<PathTrace>& traces,
                     const ArtifactMeta& meta) {
    os << meta_header(meta)
       << "path,t,I,d_s,d_l,D_s,D_l,cash\n";
    for (const auto& tr : traces)
        for (const auto& s : tr.steps)
            os << tr.path << ',' << s.t << ',' << num(s.I_begin) << ','
               << num(s.d_s) << ',' << num(s.d_l) << ',' << num(s.D_s) << ','
               << num(s.D_l) << ',' << num(s.cash) << '\n';
}

}  // namespace dualprice
