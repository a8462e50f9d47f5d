#include "doctest.h"

#include <cmath>

#include "dualprice/config.hpp"
#include "dualprice/structure.hpp"
#include "helpers.hpp"

using namespace dualprice;

namespace {

Solution solve_small(const ProblemSpec& spec, double lo, double hi,
                     double step, int nodes) {
    SolveOptions opt;
    opt.nodes = nodes;
    return solve(spec, InventoryGrid(lo, hi, step), opt);
}

}  // namespace

TEST_CASE("thresholds: detection, dichotomy and ordering") {
    auto spec = testutil::example_instance();
    Solution sol = solve_small(spec, -12.0, 4.0, 0.1, 16);
    ThresholdReport th = find_thresholds(sol, spec, 16);

    REQUIRE(th.s[0].found);
    REQUIRE(th.l[0].found);
    CHECK(th.l[1].closed_by_rule);
    CHECK(th.s[1].found);

    // The long-distance market opens first despite the smaller margin.
    CHECK(th.l[0].I_star < th.s[0].I_star);
    CHECK(th.preference[0] == Preference::LongDistanceFirst);

    // Below the detected threshold the market is closed, above it open.
    const auto& ds = sol.d_s[0];
    for (int k = 0; k < th.s[0].first_open; ++k) CHECK(ds[k] <= kTieTol);
    for (int k = th.s[0].first_open; k < sol.grid.n; ++k)
        CHECK(ds[k] > kTieTol);

    CHECK(std::isfinite(th.s[0].residual));
    CHECK(std::isfinite(th.l[0].residual));

    // Refining the grid moves the detected thresholds by at most one
    // coarse step.
    Solution fine = solve_small(spec, -12.0, 4.0, 0.05, 16);
    ThresholdReport th2 = find_thresholds(fine, spec, 16);
    CHECK(std::abs(th2.s[0].I_star - th.s[0].I_star) <= 0.1 + 1e-9);
    CHECK(std::abs(th2.l[0].I_star - th.l[0].I_star) <= 0.1 + 1e-9);
}

TEST_CASE("thresholds require a multiplicative problem") {
    auto spec = testutil::additive_instance();
    Solution sol = solve_small(spec, -10.0, 3.0, 0.2, 8);
    CHECK_THROWS_AS(find_thresholds(sol, spec, 8), std::invalid_argument);
}

TEST_CASE("thresholds demand a grid that brackets the opening") {
    auto spec = testutil::example_instance();
    // Entirely open region: the market is open at the grid floor.
    Solution open_sol = solve_small(spec, 2.0, 6.0, 0.2, 8);
    CHECK_THROWS_AS(find_thresholds(open_sol, spec, 8), std::runtime_error);
    // Entirely closed region: the market never opens.
    Solution closed_sol = solve_small(spec, -30.0, -26.0, 0.2, 8);
    CHECK_THROWS_AS(find_thresholds(closed_sol, spec, 8), std::runtime_error);
}

TEST_CASE("benchmarks coincide with the stage optimum under certainty") {
    auto spec = testutil::deterministic_instance();
    Solution sol = solve_small(spec, -10.0, 4.0, 0.2, 4);
    for (Benchmark which : {Benchmark::B_l, Benchmark::B_s}) {
        BenchmarkPolicy bp =
            solve_benchmark(which, 1, sol.V[1], spec, sol.grid, {});
        for (int k = 0; k < sol.grid.n; ++k) {
            CHECK(bp.d_s[k] == doctest::Approx(sol.d_s[0][k]).epsilon(1e-5));
            CHECK(bp.d_l[k] == doctest::Approx(sol.d_l[0][k]).epsilon(1e-5));
        }
    }
}

TEST_CASE("benchmark policies are monotone and share zero sets") {
    auto spec = testutil::example_instance();
    Solution sol = solve_small(spec, -12.0, 4.0, 0.1, 16);
    SolveOptions opt;
    opt.nodes = 16;
    BenchmarkPolicy bl = solve_benchmark(Benchmark::B_l, 1, sol.V[1], spec,
                                         sol.grid, opt);
    BenchmarkPolicy bs = solve_benchmark(Benchmark::B_s, 1, sol.V[1], spec,
                                         sol.grid, opt);
    const double allowance = sol.grid.step + kTieTol;
    for (int k = 0; k + 1 < sol.grid.n; ++k) {
        CHECK(bl.d_l[k + 1] >= bl.d_l[k] - allowance);
        CHECK(bs.d_s[k + 1] >= bs.d_s[k] - allowance);
    }

    auto first_open = [&](const std::vector<double>& v) {
        for (size_t k = 0; k < v.size(); ++k)
            if (v[k] > kTieTol) return static_cast<int>(k);
        return -1;
    };
    CHECK(std::abs(first_open(bl.d_l) - first_open(sol.d_l[0])) <= 1);
    CHECK(std::abs(first_open(bs.d_s) - first_open(sol.d_s[0])) <= 1);
}

TEST_CASE("preference classification follows the marginal-revenue gaps") {
    InventoryGrid grid(-4.0, 4.0, 0.1);
    ThresholdReport th;
    th.s.resize(2);
    th.l.resize(2);
    th.preference.assign(2, Preference::Ambiguous);
    th.s[0].found = th.l[0].found = true;

    SUBCASE("a dominant on-site margin implies the on-site market opens first") {
        ProblemSpec spec = testutil::example_instance();
        spec.curve_s = {RevenueCurve::linear(Market::OnSite, 20.0, 1.0, 0.0, 8.0)};
        spec.curve_l = {
            RevenueCurve::linear(Market::LongDistance, 9.0, 1.0, 0.0, 4.0)};
        th.s[0].I_star = -2.0;
        th.l[0].I_star = -1.0;
        PreferenceVerdict v = classify_preference(spec, 1, th, grid);
        CHECK(v.theorem3_i);
        REQUIRE(v.implied_s_first.has_value());
        CHECK(*v.implied_s_first);
        CHECK(v.pass);

        th.s[0].I_star = -1.0;
        th.l[0].I_star = -2.0;  // reversed observation
        v = classify_preference(spec, 1, th, grid);
        CHECK_FALSE(v.pass);
    }
    SUBCASE("the reference parameters admit no ordering hypothesis") {
        // (9 - 0.8 * 9) / 0.8 = 2.25 < c_p = 5, and neither margin gap
        // exceeds the unit costs.
        ProblemSpec spec = testutil::example_instance();
        th.s[0].I_star = -2.0;
        th.l[0].I_star = -3.0;
        PreferenceVerdict v = classify_preference(spec, 1, th, grid);
        CHECK_FALSE(v.theorem3_i);
        CHECK_FALSE(v.theorem3_ii);
        CHECK_FALSE(v.theorem4_gate);
        CHECK_FALSE(v.applicable);
        CHECK(v.pass);  // descriptive only
        CHECK(v.observed == Preference::LongDistanceFirst);
    }
    SUBCASE("a dominant long-distance margin flips the ordering") {
        ProblemSpec spec = testutil::example_instance();
        spec.curve_l = {
            RevenueCurve::linear(Market::LongDistance, 18.0, 1.0, 0.0, 8.0)};
        th.s[0].I_star = -1.0;
        th.l[0].I_star = -2.0;
        PreferenceVerdict v = classify_preference(spec, 1, th, grid);
        CHECK(v.theorem3_ii);
        REQUIRE(v.implied_s_first.has_value());
        CHECK_FALSE(*v.implied_s_first);
        CHECK(v.pass);
    }
}

TEST_CASE("preference crossing needs identical markets") {
    auto spec = testutil::example_instance();
    Solution sol = solve_small(spec, -8.0, 2.0, 0.2, 8);
    CHECK_THROWS_AS(preference_crossing(sol, spec, 1, 8),
                    std::invalid_argument);
}

TEST_CASE("equal markets order by the expected cost slope") {
    auto spec = testutil::identical_markets(2.0, 5.0, 10.0);
    Solution sol = solve_small(spec, -14.0, 6.0, 0.1, 16);
    CrossingReport cr = preference_crossing(sol, spec, 1, 16);
    CHECK(cr.pass);
    CHECK(cr.checked > 0);
    CHECK(cr.policy_cross_I.has_value());

    // Deep backlog: every outcome is short, so the slope is -c_p and the
    // long-distance market carries at least as much demand.
    const int k_low = 5;
    CHECK(sol.d_s[0][k_low] <= sol.d_l[0][k_low] + kTieTol);
    // High stock: the slope is +c_h and the on-site market carries more.
    const int k_high = sol.grid.n - 3;
    CHECK(sol.d_s[0][k_high] + kTieTol >= sol.d_l[0][k_high]);
}

TEST_CASE("unified pricing: monotone price and shared-ceiling guard") {
    auto li = load_instance_file(std::string(TEST_SPEC_DIR) + "/beta_unified.toml");
    InventoryGrid grid(li.grid.I_min, li.grid.I_max, li.grid.step);
    SolveOptions opt;
    opt.nodes = li.nodes;
    UnifiedSolution us = solve_unified(li.spec, grid, opt);
    REQUIRE(us.T == li.spec.T);
    CHECK(us.p_bar == doctest::Approx(10.0));
    const double ptol = 1e-6 * us.p_bar + 10.0 * kTieTol;
    for (int t = 1; t <= us.T; ++t)
        for (int k = 0; k + 1 < grid.n; ++k)
            CHECK(us.p_u[t - 1][k + 1] <= us.p_u[t - 1][k] + ptol);
    for (int t = 1; t <= us.T; ++t) CHECK(std::isfinite(us.I_u_star[t - 1]));

    auto bad = testutil::example_instance();  // ceilings 10 and 9 differ
    CHECK_THROWS_AS(solve_unified(bad, grid, opt), std::invalid_argument);
}

TEST_CASE("unified pricing degenerates to single-market pricing") {
    // A vanishing long-distance share: the unified price should track the
    // on-site-only policy.
    ProblemSpec spec;
    spec.T = 2;
    spec.q = {1.0, 1.0};
    spec.curve_s = {RevenueCurve::linear(Market::OnSite, 12.0, 1.2, 0.0, 6.0)};
    spec.curve_l = {
        RevenueCurve::linear(Market::LongDistance, 0.012, 0.0012, 0.0, 0.006)};
    spec.noise_s = {
        MarketNoise{TruncatedNormal{1.0, 0.7, 0.0, 2.0}, PointMass{0.0}}};
    spec.noise_l = {
        MarketNoise{TruncatedNormal{1.0, 0.7, 0.0, 2.0}, PointMass{0.0}}};
    spec.costs = {1.5, 4.0, 12.0, 0.9};
    spec.last_period_rule = false;
    REQUIRE(validate(spec).ok());

    InventoryGrid grid(-10.0, 6.0, 0.1);
    SolveOptions opt;
    opt.nodes = 12;
    UnifiedSolution us = solve_unified(spec, grid, opt);
    Solution sol = solve(spec, grid, opt);
    for (double I : {-2.0, 0.0, 2.0}) {
        const int k = static_cast<int>(std::llround((I - grid.I_min) / grid.step));
        const double ds = sol.d_s[0][k];
        const double p_two = ds > 0 ? spec.curve_s[0].price(ds) : 10.0;
        CHECK(std::abs(us.p_u[0][k] - p_two) <= 0.05);
    }
}

TEST_CASE("correlated checks require perfect correlation") {
    auto spec = testutil::example_instance();
    Solution sol = solve_small(spec, -8.0, 2.0, 0.2, 8);
    CHECK_THROWS_AS(check_correlated(sol, spec), std::invalid_argument);
}

TEST_CASE("perfectly correlated instances keep the on-site threshold") {
    for (const char* name : {"corr_neg", "corr_pos"}) {
        auto li = load_instance_file(std::string(TEST_SPEC_DIR) + "/" + name +
                                     ".toml");
        InventoryGrid grid(li.grid.I_min, li.grid.I_max, li.grid.step);
        SolveOptions opt;
        opt.nodes = li.nodes;
        Solution sol = solve(li.spec, grid, opt);
        CorrelationReport cr = check_correlated(sol, li.spec);
        CAPTURE(name);
        CHECK(cr.pass);
        CHECK(cr.prop1_checked > 0);
        CHECK(cr.prop1_violations == 0);
        CHECK(cr.prop1_worst_margin > 0.0);
        if (cr.a < 0) {
            CHECK(cr.threshold_found);
            CHECK(cr.dichotomy_ok);
            CHECK(std::isfinite(cr.residual_s));
        }
    }
}

TEST_CASE("zero-cost special cases for identical markets") {
    SolveOptions opt;
    opt.nodes = 12;
    InventoryGrid grid(-12.0, 6.0, 0.1);

    SUBCASE("no period costs: thresholds coincide") {
        auto spec = testutil::identical_markets(0.0, 0.0, 20.0);
        Solution sol = solve(spec, grid, opt);
        Remark3Report r = remark3_case(sol, spec, 12);
        CHECK(r.case_id == 1);
        CHECK(r.pass);
        CHECK(std::abs(r.threshold_gap) <= grid.step + 1e-9);
    }
    SUBCASE("holding cost only: the on-site market dominates") {
        auto spec = testutil::identical_markets(2.0, 0.0, 20.0);
        Solution sol = solve(spec, grid, opt);
        Remark3Report r = remark3_case(sol, spec, 12);
        CHECK(r.case_id == 2);
        CHECK(r.pass);
        CHECK(r.policy_violations == 0);
    }
    SUBCASE("shortage cost only: the long-distance market dominates") {
        auto spec = testutil::identical_markets(0.0, 5.0, 20.0);
        Solution sol = solve(spec, grid, opt);
        Remark3Report r = remark3_case(sol, spec, 12);
        CHECK(r.case_id == 3);
        CHECK(r.pass);
        CHECK(r.policy_violations == 0);
    }
    SUBCASE("mixed costs fit no case") {
        auto spec = testutil::identical_markets(2.0, 5.0, 10.0);
        Solution sol = solve(spec, grid, opt);
        CHECK_THROWS_AS(remark3_case(sol, spec, 12), std::invalid_argument);
    }
    SUBCASE("distinct markets are rejected") {
        auto spec = testutil::example_instance();
        spec.costs = {0.0, 0.0, 20.0, 0.8};
        Solution sol = solve(spec, grid, opt);
        CHECK_THROWS_AS(remark3_case(sol, spec, 12), std::invalid_argument);
    }
}
