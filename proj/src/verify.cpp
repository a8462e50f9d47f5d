#include "dualprice/verify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace dualprice {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(8);
    os << v;
    return os.str();
}

struct Battery {
    const ProblemSpec& spec;
    const Solution& sol;
    const BatteryOptions& opt;
    std::vector<CheckResult> out;

    bool eps_s_unit = true;   // on-site noise additive (eps_s == 1)
    bool eps_l_unit = true;
    bool omega_zero = true;   // multiplicative problem (omega == 0)
    std::optional<ThresholdReport> thresholds;

    Battery(const ProblemSpec& s, const Solution& so, const BatteryOptions& o)
        : spec(s), sol(so), opt(o) {
        for (int t = 1; t <= spec.T; ++t) {
            const auto& ns = spec.noise(Market::OnSite, t);
            const auto& nl = spec.noise(Market::LongDistance, t);
            eps_s_unit &= is_degenerate(ns.eps);
            eps_l_unit &= is_degenerate(nl.eps);
            omega_zero &= is_degenerate(ns.omega) && is_degenerate(nl.omega);
        }
    }

    void add(CheckResult r) { out.push_back(std::move(r)); }

    void skip(const std::string& id, const std::string& expected,
              const std::string& reason) {
        add({id, "", expected, "", 0.0, CheckStatus::Skip, reason});
    }

    // Lemma: every V_t is concave (second differences nonpositive at grid
    // resolution).
    void concavity() {
        CheckResult r{"concavity_value_function",
                      "t=1.." + std::to_string(spec.T + 1),
                      "V_t(I-h) + V_t(I+h) - 2 V_t(I) <= tol",
                      "", 0.0, CheckStatus::Pass, ""};
        double worst = -1e300;
        double worst_tol = 0.0;
        for (int t = 1; t <= spec.T + 1; ++t) {
            const auto& V = sol.V[t - 1];
            double vmax = 0.0;
            for (double v : V) vmax = std::max(vmax, std::abs(v));
            const double tol = 1e-6 * std::max(1.0, vmax);
            for (int k = 1; k + 1 < sol.grid.n; ++k) {
                const double d2 = V[k - 1] + V[k + 1] - 2.0 * V[k];
                if (d2 > worst) {
                    worst = d2;
                    worst_tol = tol;
                }
                if (d2 > tol) r.status = CheckStatus::Fail;
            }
        }
        r.tolerance = worst_tol;
        r.observed = "worst second difference " + fmt(worst);
        add(std::move(r));
    }

    // Lemma: the two policies never strictly decrease together.
    void no_joint_decrease() {
        CheckResult r{"policy_no_joint_decrease", "t=1.." + std::to_string(spec.T),
                      "no grid step where both d_s* and d_l* decrease by more "
                      "than tie_tol",
                      "", opt.tie_tol, CheckStatus::Pass, ""};
        int bad = 0;
        for (int t = 1; t <= spec.T; ++t)
            for (int k = 0; k + 1 < sol.grid.n; ++k) {
                const bool s_dec =
                    sol.d_s[t - 1][k + 1] < sol.d_s[t - 1][k] - opt.tie_tol;
                const bool l_dec =
                    sol.d_l[t - 1][k + 1] < sol.d_l[t - 1][k] - opt.tie_tol;
                if (s_dec && l_dec) ++bad;
            }
        if (bad) r.status = CheckStatus::Fail;
        r.observed = std::to_string(bad) + " joint decreases";
        add(std::move(r));
    }

    static int count_decreases(const std::vector<double>& v, double tie) {
        int bad = 0;
        for (size_t k = 0; k + 1 < v.size(); ++k)
            if (v[k + 1] < v[k] - tie) ++bad;
        return bad;
    }

    // Additive on-site noise: d_s*, I - d_s* and d_l* all non-decreasing.
    void additive_monotonicities() {
        const std::string why = "on-site noise is not additive (eps_s != 1)";
        if (!eps_s_unit) {
            skip("monotone_additive_ds", "d_s*(I) non-decreasing", why);
            skip("monotone_additive_stock_cover", "I - d_s*(I) non-decreasing",
                 why);
            skip("monotone_additive_dl", "d_l*(I) non-decreasing", why);
            return;
        }
        int bad_ds = 0, bad_cover = 0, bad_dl = 0;
        for (int t = 1; t <= spec.T; ++t) {
            bad_ds += count_decreases(sol.d_s[t - 1], opt.tie_tol);
            std::vector<double> cover(sol.grid.n);
            for (int k = 0; k < sol.grid.n; ++k)
                cover[k] = sol.grid.point(k) - sol.d_s[t - 1][k];
            bad_cover += count_decreases(cover, opt.tie_tol);
            const bool pinned = spec.last_period_rule && t == spec.T;
            if (!pinned) bad_dl += count_decreases(sol.d_l[t - 1], opt.tie_tol);
        }
        auto mk = [&](const char* id, const char* exp, int bad) {
            add({id, "t=1.." + std::to_string(spec.T), exp,
                 std::to_string(bad) + " decreases", opt.tie_tol,
                 bad ? CheckStatus::Fail : CheckStatus::Pass, ""});
        };
        mk("monotone_additive_ds", "d_s*(I) non-decreasing", bad_ds);
        mk("monotone_additive_stock_cover", "I - d_s*(I) non-decreasing",
           bad_cover);
        mk("monotone_additive_dl", "d_l*(I) non-decreasing", bad_dl);
    }

    // Mirror case: additive long-distance noise.
    void mirror_monotonicities() {
        const char* id = "monotone_additive_mirror";
        if (!eps_l_unit) {
            skip(id, "d_s* and d_l* non-decreasing",
                 "long-distance noise is not additive (eps_l != 1)");
            return;
        }
        int bad = 0;
        for (int t = 1; t <= spec.T; ++t) {
            bad += count_decreases(sol.d_s[t - 1], opt.tie_tol);
            const bool pinned = spec.last_period_rule && t == spec.T;
            if (!pinned) bad += count_decreases(sol.d_l[t - 1], opt.tie_tol);
        }
        add({id, "t=1.." + std::to_string(spec.T),
             "d_s*(I) and d_l*(I) non-decreasing",
             std::to_string(bad) + " decreases", opt.tie_tol,
             bad ? CheckStatus::Fail : CheckStatus::Pass, ""});
    }

    // Replenishment bump: period-1 policies move up with q_1.
    void q_monotonicity() {
        const char* id = "monotone_additive_q_bump";
        if (!eps_s_unit) {
            skip(id, "d_s* and d_l* non-decreasing in q_t",
                 "on-site noise is not additive (eps_s != 1)");
            return;
        }
        if (!opt.with_resolves) {
            skip(id, "d_s* and d_l* non-decreasing in q_t",
                 "re-solves disabled");
            return;
        }
        ProblemSpec bumped = spec;
        bumped.q[0] += 0.25;
        Solution sol2 = solve(bumped, sol.grid, opt.solve);
        int bad = 0;
        double worst = 0.0;
        for (int k = 0; k < sol.grid.n; ++k) {
            const double vs = sol.d_s[0][k] - sol2.d_s[0][k];
            const double vl = sol.d_l[0][k] - sol2.d_l[0][k];
            if (vs > opt.tie_tol || vl > opt.tie_tol) ++bad;
            worst = std::max({worst, vs, vl});
        }
        add({id, "t=1", "policies do not decrease when q_1 grows by 0.25",
             std::to_string(bad) + " decreases, worst " + fmt(worst),
             opt.tie_tol, bad ? CheckStatus::Fail : CheckStatus::Pass, ""});
    }

    struct Dichotomy {
        bool found = false;
        bool ok = false;
        int first_open = -1;
    };

    Dichotomy dichotomy(const std::vector<double>& pol) const {
        Dichotomy d;
        for (size_t k = 0; k < pol.size(); ++k)
            if (pol[k] > opt.tie_tol) {
                d.found = true;
                d.first_open = static_cast<int>(k);
                break;
            }
        if (d.found) {
            d.ok = true;
            for (size_t k = static_cast<size_t>(d.first_open) + 1;
                 k < pol.size(); ++k)
                if (!(pol[k] > opt.tie_tol)) d.ok = false;
        }
        return d;
    }

    // Threshold structure on the raw policy tables: closed below the first
    // open point, open everywhere above it.
    void threshold_structure() {
        CheckResult r{"threshold_structure", "t=1.." + std::to_string(spec.T),
                      "each market's policy is a step set: zero below its "
                      "threshold, positive above",
                      "", opt.tie_tol, CheckStatus::Pass, ""};
        std::ostringstream obs;
        for (int t = 1; t <= spec.T; ++t) {
            for (Market m : {Market::OnSite, Market::LongDistance}) {
                if (m == Market::LongDistance && spec.last_period_rule &&
                    t == spec.T)
                    continue;
                const auto& pol = (m == Market::OnSite) ? sol.d_s[t - 1]
                                                        : sol.d_l[t - 1];
                Dichotomy d = dichotomy(pol);
                if (!d.found || !d.ok) r.status = CheckStatus::Fail;
                obs << market_name(m) << ",t=" << t << ":"
                    << (d.found ? (d.ok ? "ok" : "re-closes") : "never opens")
                    << " ";
            }
        }
        r.observed = obs.str();
        add(std::move(r));
    }

    // Marginal conditions at the detected thresholds: the stated slope must
    // fall inside the concave bracket of cell slopes around the threshold,
    // and the secant residual is reported for refinement studies.
    void marginal_conditions() {
        if (!omega_zero) {
            skip("marginal_condition_s", "V_t'(I*_s) = R'_s(0)",
                 "problem is not multiplicative (omega != 0)");
            skip("marginal_condition_l",
                 "V_t'(I*_l) = R'_l(0) - E H'(I*_l + q_t - eps_s d_s*)",
                 "problem is not multiplicative (omega != 0)");
            return;
        }
        ThresholdReport th;
        try {
            th = find_thresholds(sol, spec, opt.nodes, opt.tie_tol);
        } catch (const std::exception& e) {
            add({"marginal_condition_s", "", "V_t'(I*_s) = R'_s(0)", "", 0.0,
                 CheckStatus::Fail, e.what()});
            add({"marginal_condition_l", "", "long-distance marginal condition",
                 "", 0.0, CheckStatus::Fail, e.what()});
            return;
        }
        thresholds = th;

        auto bracket_check = [&](int t, const MarketThreshold& mt,
                                 double target) {
            const auto& V = sol.V[t - 1];
            const int k = mt.first_open;
            const double h = sol.grid.step;
            double above = (V[std::min(k + 1, sol.grid.n - 1)] - V[k]) / h;
            double below = (k >= 2) ? (V[k - 1] - V[k - 2]) / h
                                    : (V[k] - V[k - 1]) / h;
            const double tol = 1e-6 * std::max(1.0, std::abs(target));
            return above - tol <= target && target <= below + tol;
        };

        CheckResult rs{"marginal_condition_s", "", "V_t'(I*_s) = R'_s(0)", "",
                       0.0, CheckStatus::Pass, ""};
        CheckResult rl{"marginal_condition_l",
                       "", "V_t'(I*_l) = R'_l(0) - E H'(I*_l + q_t - eps_s d_s*)",
                       "", 0.0, CheckStatus::Pass, ""};
        std::ostringstream obs_s, obs_l;
        for (int t = 1; t <= spec.T; ++t) {
            const auto& s = th.s[t - 1];
            if (s.found) {
                if (!bracket_check(t, s, s.condition_target))
                    rs.status = CheckStatus::Fail;
                obs_s << "t=" << t << ": I*=" << fmt(s.I_star)
                      << " residual=" << fmt(s.residual) << " ";
            }
            const auto& l = th.l[t - 1];
            if (l.found) {
                if (!bracket_check(t, l, l.condition_target))
                    rl.status = CheckStatus::Fail;
                obs_l << "t=" << t << ": I*=" << fmt(l.I_star)
                      << " residual=" << fmt(l.residual) << " ";
            }
        }
        rs.observed = obs_s.str();
        rl.observed = obs_l.str();
        add(std::move(rs));
        add(std::move(rl));
    }

    // One-period benchmark relaxations: monotone policies and matching
    // zero sets.
    void benchmarks() {
        const std::string why_mult = "problem is not multiplicative (omega != 0)";
        if (!omega_zero) {
            skip("benchmark_bl_dl_monotone", "d_l^{B_l*}(I) non-decreasing",
                 why_mult);
            skip("benchmark_bs_ds_monotone", "d_s^{B_s*}(I) non-decreasing",
                 why_mult);
            skip("benchmark_zero_set_l", "zero sets of d_l* and d_l^{B_l*} match",
                 why_mult);
            skip("benchmark_zero_set_s", "zero sets of d_s* and d_s^{B_s*} match",
                 why_mult);
            return;
        }
        if (!opt.with_resolves) {
            skip("benchmark_bl_dl_monotone", "", "re-solves disabled");
            skip("benchmark_bs_ds_monotone", "", "re-solves disabled");
            skip("benchmark_zero_set_l", "", "re-solves disabled");
            skip("benchmark_zero_set_s", "", "re-solves disabled");
            return;
        }
        // The benchmark transitions are deterministic in one demand, so
        // their optima ride the kinks of the interpolated value table;
        // monotonicity holds up to one grid step of pinning error.
        const double allowance = sol.grid.step + opt.tie_tol;
        int bad_bl = 0, bad_bs = 0;
        bool zl_ok = true, zs_ok = true;
        std::ostringstream zobs;
        for (int t = 1; t <= spec.T; ++t) {
            BenchmarkPolicy bl = solve_benchmark(Benchmark::B_l, t, sol.V[t],
                                                 spec, sol.grid, opt.solve);
            BenchmarkPolicy bs = solve_benchmark(Benchmark::B_s, t, sol.V[t],
                                                 spec, sol.grid, opt.solve);
            const bool pinned = spec.last_period_rule && t == spec.T;
            if (!pinned) {
                bad_bl += count_decreases(bl.d_l, allowance);
                if (!bl.d_l.empty() &&
                    bl.d_l.back() < bl.d_l.front() - opt.tie_tol)
                    ++bad_bl;
            }
            bad_bs += count_decreases(bs.d_s, allowance);
            if (!bs.d_s.empty() && bs.d_s.back() < bs.d_s.front() - opt.tie_tol)
                ++bad_bs;

            if (!pinned) {
                Dichotomy a = dichotomy(sol.d_l[t - 1]);
                Dichotomy b = dichotomy(bl.d_l);
                if (a.found != b.found ||
                    (a.found && std::abs(a.first_open - b.first_open) > 1))
                    zl_ok = false;
                zobs << "l,t=" << t << ":" << a.first_open << "/"
                     << b.first_open << " ";
            }
            {
                Dichotomy a = dichotomy(sol.d_s[t - 1]);
                Dichotomy b = dichotomy(bs.d_s);
                if (a.found != b.found ||
                    (a.found && std::abs(a.first_open - b.first_open) > 1))
                    zs_ok = false;
                zobs << "s,t=" << t << ":" << a.first_open << "/"
                     << b.first_open << " ";
            }
        }
        add({"benchmark_bl_dl_monotone", "t=1.." + std::to_string(spec.T),
             "d_l^{B_l*}(I) non-decreasing up to one grid step",
             std::to_string(bad_bl) + " decreases", allowance,
             bad_bl ? CheckStatus::Fail : CheckStatus::Pass, ""});
        add({"benchmark_bs_ds_monotone", "t=1.." + std::to_string(spec.T),
             "d_s^{B_s*}(I) non-decreasing up to one grid step",
             std::to_string(bad_bs) + " decreases", allowance,
             bad_bs ? CheckStatus::Fail : CheckStatus::Pass, ""});
        add({"benchmark_zero_set_l", "t=1.." + std::to_string(spec.T),
             "first open grid index matches within one step", zobs.str(),
             1.0, zl_ok ? CheckStatus::Pass : CheckStatus::Fail, ""});
        add({"benchmark_zero_set_s", "t=1.." + std::to_string(spec.T),
             "first open grid index matches within one step", zobs.str(),
             1.0, zs_ok ? CheckStatus::Pass : CheckStatus::Fail, ""});
    }

    // Market-preference orderings implied by the opening marginal revenues.
    void preference() {
        if (!thresholds) {
            skip("preference_theorem3", "threshold ordering by marginal revenues",
                 "thresholds unavailable (not a multiplicative problem)");
            skip("preference_theorem4", "threshold ordering under the "
                 "discounted-revenue gate",
                 "thresholds unavailable (not a multiplicative problem)");
            return;
        }
        bool any3 = false, any4 = false;
        bool ok3 = true, ok4 = true;
        std::ostringstream o3, o4;
        for (int t = 1; t <= spec.T; ++t) {
            PreferenceVerdict v =
                classify_preference(spec, t, *thresholds, sol.grid);
            const auto& s = thresholds->s[t - 1];
            const auto& l = thresholds->l[t - 1];
            if (!s.found || !l.found) continue;
            if (v.theorem3_i || v.theorem3_ii) {
                any3 = true;
                const bool expect_s_first = v.theorem3_i;
                const bool fine = expect_s_first
                                      ? v.observed_gap < sol.grid.step
                                      : v.observed_gap > -sol.grid.step;
                if (!fine) ok3 = false;
                o3 << "t=" << t << " gap=" << fmt(v.observed_gap) << " ";
            }
            if (v.theorem4_i || v.theorem4_ii) {
                any4 = true;
                const bool expect_s_first = v.theorem4_i;
                const bool fine = expect_s_first
                                      ? v.observed_gap < sol.grid.step
                                      : v.observed_gap > -sol.grid.step;
                if (!fine) ok4 = false;
                o4 << "t=" << t << " gap=" << fmt(v.observed_gap) << " ";
            }
        }
        if (any3)
            add({"preference_theorem3", "", "implied threshold ordering holds",
                 o3.str(), sol.grid.step,
                 ok3 ? CheckStatus::Pass : CheckStatus::Fail, ""});
        else
            skip("preference_theorem3", "implied threshold ordering holds",
                 "neither marginal-revenue hypothesis holds");
        if (any4)
            add({"preference_theorem4", "", "implied threshold ordering holds",
                 o4.str(), sol.grid.step,
                 ok4 ? CheckStatus::Pass : CheckStatus::Fail, ""});
        else
            skip("preference_theorem4", "implied threshold ordering holds",
                 "the discounted-revenue gate fails (or T too short)");
    }

    void equal_markets() {
        const char* id = "equal_markets_crossing";
        const int t_last = spec.last_period_rule ? spec.T - 1 : spec.T;
        if (t_last < 1) {
            skip(id, "sign of E[eps_s H'] orders the two policies",
                 "no free period to compare (T=1 with last-period rule)");
            return;
        }
        try {
            int viol = 0;
            double worst = 0.0;
            std::ostringstream obs;
            for (int t = 1; t <= t_last; ++t) {
                CrossingReport cr =
                    preference_crossing(sol, spec, t, opt.nodes, opt.tie_tol);
                viol += cr.violations;
                worst = std::max(worst, cr.worst_violation);
                if (cr.policy_cross_I)
                    obs << "t=" << t << " cross at I=" << fmt(*cr.policy_cross_I)
                        << " ";
            }
            add({id, "t=1.." + std::to_string(t_last),
                 "d_s* <= d_l* where E[eps_s H'] <= 0, and conversely",
                 std::to_string(viol) + " violations, worst " + fmt(worst) +
                     "; " + obs.str(),
                 opt.tie_tol, viol ? CheckStatus::Fail : CheckStatus::Pass, ""});
        } catch (const std::invalid_argument& e) {
            skip(id, "sign of E[eps_s H'] orders the two policies", e.what());
        }
    }

    void correlated() {
        if (!std::holds_alternative<PerfectLinear>(spec.correlation)) {
            skip("correlated_prop1", "d_s*(I) > 0 implies V_t'(I) < R'_s(0)",
                 "correlation is independent");
            skip("correlated_threshold", "on-site threshold structure under "
                 "perfect correlation",
                 "correlation is independent");
            return;
        }
        CorrelationReport cr = check_correlated(sol, spec, opt.tie_tol);
        add({"correlated_prop1", "all t",
             "d_s*(I) > 0 implies V_t'(I) < R'_s(0)",
             std::to_string(cr.prop1_violations) + " violations of " +
                 std::to_string(cr.prop1_checked) + ", worst margin " +
                 fmt(cr.prop1_worst_margin),
             0.0, cr.prop1_violations ? CheckStatus::Fail : CheckStatus::Pass,
             ""});
        std::ostringstream obs;
        obs << "a=" << cr.a << " found=" << cr.threshold_found
            << " I*_s=" << fmt(cr.I_star_s) << " residual=" << fmt(cr.residual_s);
        add({"correlated_threshold", "t=1",
             cr.a < 0 ? "threshold exists with V'(I*_s) = R'_s(0)"
                      : "value slope at the opening boundary <= R'_s(0)",
             obs.str(), 0.0, cr.pass ? CheckStatus::Pass : CheckStatus::Fail,
             ""});
    }

    void unified() {
        const char* id_mono = "unified_price_monotone";
        const char* id_sand = "unified_sandwich";
        if (!opt.with_resolves) {
            skip(id_mono, "p_u(I) non-increasing", "re-solves disabled");
            skip(id_sand, "I_u* between the two-price thresholds",
                 "re-solves disabled");
            return;
        }
        UnifiedSolution us;
        try {
            us = solve_unified(spec, sol.grid, opt.solve);
        } catch (const std::invalid_argument& e) {
            skip(id_mono, "p_u(I) non-increasing", e.what());
            skip(id_sand, "I_u* between the two-price thresholds", e.what());
            return;
        }
        const double ptol =
            1e-6 * std::max(1.0, us.p_bar) + 10.0 * opt.tie_tol;
        int bad = 0;
        for (int t = 1; t <= spec.T; ++t)
            for (int k = 0; k + 1 < sol.grid.n; ++k)
                if (us.p_u[t - 1][k + 1] > us.p_u[t - 1][k] + ptol) ++bad;
        add({id_mono, "t=1.." + std::to_string(spec.T), "p_u(I) non-increasing",
             std::to_string(bad) + " increases", ptol,
             bad ? CheckStatus::Fail : CheckStatus::Pass, ""});

        if (!thresholds) {
            skip(id_sand, "I_u* between the two-price thresholds",
                 "thresholds unavailable (not a multiplicative problem)");
            return;
        }
        const int t_last = spec.last_period_rule ? spec.T - 1 : spec.T;
        bool ok = true;
        std::ostringstream obs;
        int applicable = 0;
        for (int t = 1; t <= t_last; ++t) {
            const auto& s = thresholds->s[t - 1];
            const auto& l = thresholds->l[t - 1];
            if (!s.found || !l.found) continue;
            ++applicable;
            const double lo = std::min(s.I_star, l.I_star) - sol.grid.step;
            const double hi = std::max(s.I_star, l.I_star) + sol.grid.step;
            const double iu = us.I_u_star[t - 1];
            if (!(lo <= iu && iu <= hi)) ok = false;
            obs << "t=" << t << " I_u*=" << fmt(iu) << " in [" << fmt(lo) << ","
                << fmt(hi) << "] ";
        }
        if (!applicable)
            skip(id_sand, "I_u* between the two-price thresholds",
                 "no period with both thresholds detected");
        else
            add({id_sand, "", "min{I*_s,I*_l} - h <= I_u* <= max{I*_s,I*_l} + h",
                 obs.str(), sol.grid.step,
                 ok ? CheckStatus::Pass : CheckStatus::Fail, ""});
    }

    void remark3() {
        const double ch = spec.costs.c_h, cp = spec.costs.c_p;
        int case_id = 0;
        if (cp == 0.0 && ch == 0.0) case_id = 1;
        else if (cp == 0.0 && ch > 0.0) case_id = 2;
        else if (ch == 0.0 && cp > 0.0) case_id = 3;
        const char* ids[3] = {"remark3_case1_equal_thresholds",
                              "remark3_case2_holding_only",
                              "remark3_case3_shortage_only"};
        const char* exps[3] = {
            "identical markets, c_p = c_h = 0: thresholds coincide",
            "identical markets, c_p = 0 < c_h: I*_s <= I*_l and d_s* >= d_l*",
            "identical markets, c_h = 0 < c_p: I*_s >= I*_l and d_s* <= d_l*"};
        for (int c = 1; c <= 3; ++c) {
            if (c != case_id) {
                skip(ids[c - 1], exps[c - 1], "costs do not match this case");
                continue;
            }
            try {
                Remark3Report r = remark3_case(sol, spec, opt.nodes, opt.tie_tol);
                std::ostringstream obs;
                obs << "threshold gap " << fmt(r.threshold_gap) << ", "
                    << r.policy_violations << " policy violations (worst "
                    << fmt(r.worst_violation) << ")";
                add({ids[c - 1], "t=1", exps[c - 1], obs.str(), opt.tie_tol,
                     r.pass ? CheckStatus::Pass : CheckStatus::Fail, r.note});
            } catch (const std::invalid_argument& e) {
                skip(ids[c - 1], exps[c - 1], e.what());
            }
        }
    }

    // Informational: multiplicative instances may show non-monotone optimal
    // demand, which is expected behavior rather than a defect.
    void nonmonotone_note() {
        const char* id = "policy_dl_nonmonotone_observed";
        if (!omega_zero || eps_s_unit || eps_l_unit) {
            skip(id, "non-monotone d_l* permitted",
                 "applies to the doubly multiplicative case");
            return;
        }
        int dips = 0;
        double deepest = 0.0;
        for (int t = 1; t <= spec.T; ++t) {
            const bool pinned = spec.last_period_rule && t == spec.T;
            if (pinned) continue;
            const auto& dl = sol.d_l[t - 1];
            for (int k = 0; k + 1 < sol.grid.n; ++k)
                if (dl[k + 1] < dl[k] - opt.tie_tol) {
                    ++dips;
                    deepest = std::max(deepest, dl[k] - dl[k + 1]);
                }
        }
        add({id, "t with free long-distance market",
             "decreasing stretches of d_l* are consistent with the "
             "multiplicative case",
             std::to_string(dips) + " decreasing steps, deepest " +
                 fmt(deepest),
             opt.tie_tol, CheckStatus::Pass, ""});
    }

    void taxonomy() {
        const NoiseType ts = classify_noise(spec, Market::OnSite);
        const NoiseType tl = classify_noise(spec, Market::LongDistance);
        std::string row = std::string(noise_type_name(ts)) + " x " +
                          noise_type_name(tl);
        auto passed = [&](const char* id) {
            for (const auto& r : out)
                if (r.check_id == id) return r.status == CheckStatus::Pass;
            return false;
        };
        std::string expected;
        bool ok = true;
        bool applicable = true;
        if (ts == NoiseType::Additive && tl == NoiseType::Additive) {
            expected = "all policies monotone; on-site threshold structure";
            ok = passed("monotone_additive_ds") &&
                 passed("monotone_additive_stock_cover") &&
                 passed("monotone_additive_dl");
        } else if (ts == NoiseType::Additive &&
                   tl == NoiseType::Multiplicative) {
            expected = "on-site additive monotonicities hold";
            ok = passed("monotone_additive_ds") &&
                 passed("monotone_additive_stock_cover") &&
                 passed("monotone_additive_dl");
        } else if (ts == NoiseType::Multiplicative &&
                   tl == NoiseType::Additive) {
            expected = "threshold policy; both quantities increase";
            ok = passed("monotone_additive_mirror");
        } else if (ts == NoiseType::Multiplicative &&
                   tl == NoiseType::Multiplicative) {
            expected =
                "threshold policy; at least one market's quantity increases";
            ok = passed("threshold_structure") &&
                 passed("policy_no_joint_decrease");
        } else {
            applicable = false;
        }
        if (!applicable) {
            skip("table_taxonomy", "selling-strategy row for the noise types",
                 "noise combination (" + row + ") outside the four table rows");
            return;
        }
        add({"table_taxonomy", "", expected, "row: " + row, 0.0,
             ok ? CheckStatus::Pass : CheckStatus::Fail, ""});
    }

    std::vector<CheckResult> run() {
        concavity();
        no_joint_decrease();
        additive_monotonicities();
        mirror_monotonicities();
        q_monotonicity();
        threshold_structure();
        marginal_conditions();
        benchmarks();
        preference();
        equal_markets();
        correlated();
        unified();
        remark3();
        nonmonotone_note();
        taxonomy();
        std::sort(out.begin(), out.end(),
                  [](const CheckResult& a, const CheckResult& b) {
                      return a.check_id < b.check_id;
                  });
        return std::move(out);
    }
};

}  // namespace

std::vector<CheckResult> run_battery(const ProblemSpec& spec,
                                     const Solution& sol,
                                     const BatteryOptions& opt) {
    return Battery(spec, sol, opt).run();
}

NoiseType classify_noise(const ProblemSpec& spec, Market m) {
    bool eps_unit = true, omega_zero = true;
    for (int t = 1; t <= spec.T; ++t) {
        const auto& n = spec.noise(m, t);
        eps_unit &= is_degenerate(n.eps);
        omega_zero &= is_degenerate(n.omega);
    }
    if (eps_unit && omega_zero) return NoiseType::Deterministic;
    if (eps_unit) return NoiseType::Additive;
    if (omega_zero) return NoiseType::Multiplicative;
    return NoiseType::Mixed;
}

const char* noise_type_name(NoiseType t) {
    switch (t) {
        case NoiseType::Deterministic: return "deterministic";
        case NoiseType::Additive: return "additive";
        case NoiseType::Multiplicative: return "multiplicative";
        default: return "mixed";
    }
}

Solution brute_force_dp(const ProblemSpec& spec, const InventoryGrid& grid,
                        const BruteForceOptions& opt) {
    if (grid.n > opt.max_states || spec.T > opt.max_T ||
        opt.nodes > opt.max_nodes ||
        opt.demand_points_s > opt.max_demand_points ||
        opt.demand_points_l > opt.max_demand_points)
        throw std::invalid_argument(
            "brute_force_dp: instance exceeds the size guard");
    auto rep = validate(spec);
    if (!rep.ok())
        throw std::invalid_argument("problem spec fails validation:\n" +
                                    rep.to_string());

    Solution sol;
    sol.grid = grid;
    sol.T = spec.T;
    sol.V.assign(spec.T + 1, std::vector<double>(grid.n, 0.0));
    sol.d_s.assign(spec.T, std::vector<double>(grid.n, 0.0));
    sol.d_l.assign(spec.T, std::vector<double>(grid.n, 0.0));
    for (int k = 0; k < grid.n; ++k)
        sol.V[spec.T][k] = terminal_value(grid.point(k), spec.costs);

    for (int t = spec.T; t >= 1; --t) {
        const PeriodNoise noise = discretize_period(spec, t, opt.nodes);
        const auto& cs = spec.curve(Market::OnSite, t);
        const auto& cl = spec.curve(Market::LongDistance, t);
        const bool pin_l = spec.last_period_rule && t == spec.T;

        std::vector<double> ds_grid(opt.demand_points_s);
        for (int i = 0; i < opt.demand_points_s; ++i)
            ds_grid[i] = cs.d_lower + (cs.d_upper - cs.d_lower) * i /
                                          (opt.demand_points_s - 1);
        std::vector<double> dl_grid;
        if (pin_l) {
            dl_grid = {0.0};
        } else {
            dl_grid.resize(opt.demand_points_l);
            for (int j = 0; j < opt.demand_points_l; ++j)
                dl_grid[j] = cl.d_lower + (cl.d_upper - cl.d_lower) * j /
                                              (opt.demand_points_l - 1);
        }

        const auto& next_V = sol.V[t];
        parallel_for(grid.n, 0, [&](int k) {
            const double I = grid.point(k);
            double best = -1e300;
            for (double a : ds_grid)
                for (double b : dl_grid)
                    best = std::max(best, stage_objective(I, a, b, t, next_V,
                                                          spec, grid, noise));
            // Among near-ties keep the smallest d_s + d_l, then smallest d_l.
            const double tie = 1e-11 * std::max(1.0, std::abs(best));
            double pick_s = 0.0, pick_l = 0.0, pick_J = -1e300;
            bool have = false;
            for (double a : ds_grid)
                for (double b : dl_grid) {
                    const double J =
                        stage_objective(I, a, b, t, next_V, spec, grid, noise);
                    if (J < best - tie) continue;
                    const double sum = a + b;
                    if (!have || sum < pick_s + pick_l - 1e-15 ||
                        (std::abs(sum - (pick_s + pick_l)) <= 1e-15 &&
                         b < pick_l)) {
                        have = true;
                        pick_s = a;
                        pick_l = b;
                        pick_J = J;
                    }
                }
            sol.V[t - 1][k] = pick_J;
            sol.d_s[t - 1][k] = pick_s;
            sol.d_l[t - 1][k] = pick_l;
        });
    }
    return sol;
}

}  // namespace dualprice
