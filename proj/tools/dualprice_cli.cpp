#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "dualprice/config.hpp"
#include "dualprice/export.hpp"
#include "dualprice/sim.hpp"
#include "dualprice/structure.hpp"
#include "dualprice/verify.hpp"

namespace fs = std::filesystem;
using namespace dualprice;

namespace {

struct CommonArgs {
    std::string spec_path;
    std::string out_dir = ".";
    double grid_min = 0.0, grid_max = 0.0, grid_step = 0.0;
    bool grid_min_set = false, grid_max_set = false, grid_step_set = false;
    int nodes = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool spec_required = true) {
    auto* s = cmd->add_option("--spec", a.spec_path, "instance file");
    if (spec_required) s->required();
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--grid-min", a.grid_min)->each([&](const std::string&) {
        a.grid_min_set = true;
    });
    cmd->add_option("--grid-max", a.grid_max)->each([&](const std::string&) {
        a.grid_max_set = true;
    });
    cmd->add_option("--grid-step", a.grid_step)->each([&](const std::string&) {
        a.grid_step_set = true;
    });
    cmd->add_option("--nodes", a.nodes, "quadrature nodes");
}

InventoryGrid make_grid(const LoadedInstance& li, const CommonArgs& a) {
    double lo, hi, step;
    if (li.grid.set) {
        lo = li.grid.I_min;
        hi = li.grid.I_max;
        step = li.grid.step;
    } else {
        // Cover everything reachable under bounded demand.
        double qsum = 0.0;
        for (double q : li.spec.q) qsum += q;
        double dmax = 0.0;
        for (int t = 1; t <= li.spec.T; ++t)
            dmax = std::max(dmax,
                            li.spec.curve(Market::OnSite, t).d_upper +
                                li.spec.curve(Market::LongDistance, t).d_upper);
        lo = -(qsum + li.spec.T * dmax);
        hi = qsum + dmax;
        step = 0.05;
    }
    if (a.grid_min_set) lo = a.grid_min;
    if (a.grid_max_set) hi = a.grid_max;
    if (a.grid_step_set) step = a.grid_step;
    return InventoryGrid(lo, hi, step);
}

ArtifactMeta make_meta(const LoadedInstance& li, const InventoryGrid& g,
                       int nodes, uint64_t seed, const std::string& cmd) {
    ArtifactMeta m;
    m.spec_hash = li.hash;
    m.grid_min = g.I_min;
    m.grid_max = g.I_max;
    m.grid_step = g.step;
    m.nodes = nodes;
    m.seed = seed;
    m.command = cmd;
    return m;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    const fs::path p = fs::path(dir) / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

void print_thresholds(const ThresholdReport& th, int T) {
    for (int t = 1; t <= T; ++t) {
        std::cout << "t=" << t;
        const auto& s = th.s[t - 1];
        const auto& l = th.l[t - 1];
        if (s.found)
            std::cout << "  I*_s=" << s.I_star << " (residual " << s.residual
                      << ")";
        if (l.found)
            std::cout << "  I*_l=" << l.I_star << " (residual " << l.residual
                      << ")";
        if (l.closed_by_rule) std::cout << "  [long-distance closed at T]";
        std::cout << "  preference " << preference_name(th.preference[t - 1])
                  << "\n";
    }
}

int run_solve(const CommonArgs& a) {
    const LoadedInstance li = load_instance_file(a.spec_path);
    const auto report = validate(li.spec);
    for (const auto& issue : report.issues)
        if (issue.marginal)
            std::cerr << "note: " << issue.code << ": " << issue.message
                      << "\n";
    if (!report.ok()) {
        std::cerr << report.to_string();
        return 1;
    }
    const InventoryGrid grid = make_grid(li, a);
    SolveOptions opt;
    opt.nodes = a.nodes > 0 ? a.nodes : li.nodes;

    Solution sol;
    try {
        sol = solve(li.spec, grid, opt);
    } catch (const SolverError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    const ArtifactMeta meta = make_meta(li, grid, opt.nodes, 0, "solve");
    {
        auto os = open_out(a.out_dir, "policy.csv");
        write_policy_csv(os, sol, meta);
    }
    {
        auto os = open_out(a.out_dir, "solution.json");
        os << solution_json(li.spec, sol, meta).dump(2) << "\n";
    }
    bool multiplicative = true;
    for (int t = 1; t <= li.spec.T; ++t)
        multiplicative &=
            is_degenerate(li.spec.noise(Market::OnSite, t).omega) &&
            is_degenerate(li.spec.noise(Market::LongDistance, t).omega);
    if (multiplicative) {
        try {
            const ThresholdReport th = find_thresholds(sol, li.spec, opt.nodes);
            print_thresholds(th, li.spec.T);
        } catch (const std::exception& e) {
            std::cerr << "thresholds unavailable: " << e.what() << "\n";
        }
    }
    std::cout << "V_1(0) = " << value_at(sol, 1, 0.0, li.spec.costs) << "\n";
    return 0;
}

int run_verify(const CommonArgs& a) {
    const LoadedInstance li = load_instance_file(a.spec_path);
    const auto report = validate(li.spec);
    if (!report.ok()) {
        std::cerr << report.to_string();
        return 1;
    }
    const InventoryGrid grid = make_grid(li, a);
    BatteryOptions bopt;
    bopt.nodes = a.nodes > 0 ? a.nodes : li.nodes;
    bopt.solve.nodes = bopt.nodes;

    Solution sol;
    try {
        sol = solve(li.spec, grid, bopt.solve);
    } catch (const SolverError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    const auto results = run_battery(li.spec, sol, bopt);
    const ArtifactMeta meta = make_meta(li, grid, bopt.nodes, 0, "verify");
    {
        auto os = open_out(a.out_dir, "verify.json");
        os << battery_json(results, meta).dump(2) << "\n";
    }
    int failed = 0;
    for (const auto& r : results) {
        const char* tag = r.passed() ? "PASS" : (r.failed() ? "FAIL" : "skip");
        std::cout << tag << "  " << r.check_id;
        if (r.failed()) {
            std::cout << "  (" << r.observed << ")";
            ++failed;
        }
        if (r.status == CheckStatus::Skip) std::cout << "  [" << r.reason << "]";
        std::cout << "\n";
    }
    return failed ? 3 : 0;
}

int run_simulate(const CommonArgs& a, long paths, uint64_t seed, double I0,
                 bool trace, bool realized) {
    const LoadedInstance li = load_instance_file(a.spec_path);
    const auto report = validate(li.spec);
    if (!report.ok()) {
        std::cerr << report.to_string();
        return 1;
    }
    const InventoryGrid grid = make_grid(li, a);
    SolveOptions opt;
    opt.nodes = a.nodes > 0 ? a.nodes : li.nodes;
    Solution sol;
    try {
        sol = solve(li.spec, grid, opt);
    } catch (const SolverError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    SimOptions sopt;
    sopt.n_paths = paths;
    sopt.seed = seed;
    sopt.mode = realized ? Accounting::Realized : Accounting::Expectation;
    sopt.record_traces = trace;
    std::vector<PathTrace> traces;
    const SimStats stats =
        simulate(li.spec, sol, I0, sopt, trace ? &traces : nullptr);
    if (stats.grid_escape)
        std::cerr << "warning: some paths left the interpolation region; "
                     "extend the grid\n";
    const ArtifactMeta meta = make_meta(li, grid, opt.nodes, seed, "simulate");
    {
        auto os = open_out(a.out_dir, "simstats.json");
        os << simstats_json(stats, I0, sopt, meta).dump(2) << "\n";
    }
    if (trace) {
        auto os = open_out(a.out_dir, "trace.csv");
        write_trace_csv(os, traces, meta);
    }
    std::cout << "mean " << stats.mean_profit << "  se " << stats.std_error
              << "  V_1(I0) " << value_at(sol, 1, I0, li.spec.costs) << "\n";
    return 0;
}

int run_thresholds(const CommonArgs& a) {
    const LoadedInstance li = load_instance_file(a.spec_path);
    const auto report = validate(li.spec);
    if (!report.ok()) {
        std::cerr << report.to_string();
        return 1;
    }
    const InventoryGrid grid = make_grid(li, a);
    SolveOptions opt;
    opt.nodes = a.nodes > 0 ? a.nodes : li.nodes;
    Solution sol = solve(li.spec, grid, opt);
    const ThresholdReport th = find_thresholds(sol, li.spec, opt.nodes);
    const ArtifactMeta meta = make_meta(li, grid, opt.nodes, 0, "thresholds");
    {
        auto os = open_out(a.out_dir, "thresholds.json");
        os << thresholds_json(th, li.spec.T, meta).dump(2) << "\n";
    }
    print_thresholds(th, li.spec.T);
    return 0;
}

int run_unified(const CommonArgs& a) {
    const LoadedInstance li = load_instance_file(a.spec_path);
    const auto report = validate(li.spec);
    if (!report.ok()) {
        std::cerr << report.to_string();
        return 1;
    }
    const InventoryGrid grid = make_grid(li, a);
    SolveOptions opt;
    opt.nodes = a.nodes > 0 ? a.nodes : li.nodes;
    const UnifiedSolution us = solve_unified(li.spec, grid, opt);
    const ArtifactMeta meta = make_meta(li, grid, opt.nodes, 0, "unified");
    {
        auto os = open_out(a.out_dir, "unified.csv");
        write_unified_csv(os, us, meta);
    }
    {
        auto os = open_out(a.out_dir, "unified.json");
        os << unified_json(us, meta).dump(2) << "\n";
    }
    for (int t = 1; t <= us.T; ++t)
        std::cout << "t=" << t << "  I_u* = " << us.I_u_star[t - 1] << "\n";
    return 0;
}

int run_figure2(const CommonArgs& a) {
    LoadedInstance li = a.spec_path.empty()
                            ? load_instance_text(bundled_example_config())
                            : load_instance_file(a.spec_path);
    const InventoryGrid grid = make_grid(li, a);
    SolveOptions opt;
    opt.nodes = a.nodes > 0 ? a.nodes : li.nodes;
    Solution sol = solve(li.spec, grid, opt);
    const ArtifactMeta meta = make_meta(li, grid, opt.nodes, 0, "figure2");
    auto os = open_out(a.out_dir, "figure2.csv");
    write_policy_slice_csv(os, sol, 1, -4.0, 6.0, li.spec, meta);
    std::cout << "wrote figure2.csv (t=1 policies over [-4, 6])\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Dual-market dynamic pricing: solve, verify and simulate "
        "finite-horizon pricing policies for an on-site and a long-distance "
        "market sharing one inventory pool"};
    app.require_subcommand(1);

    CommonArgs a_solve, a_verify, a_sim, a_thresh, a_uni, a_fig;
    long paths = 10000;
    uint64_t seed = 1;
    double I0 = 0.0;
    bool trace = false, realized = false;

    auto* c_solve = app.add_subcommand("solve", "solve and export policies");
    add_common(c_solve, a_solve);
    auto* c_verify =
        app.add_subcommand("verify", "run the structural check battery");
    add_common(c_verify, a_verify);
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo policy replay");
    add_common(c_sim, a_sim);
    c_sim->add_option("--paths", paths, "number of paths");
    c_sim->add_option("--seed", seed, "RNG seed");
    c_sim->add_option("--I0", I0, "starting inventory");
    c_sim->add_flag("--trace", trace, "export per-path traces");
    c_sim->add_flag("--realized", realized,
                    "book realized instead of expected revenue");
    auto* c_thresh =
        app.add_subcommand("thresholds", "market-opening thresholds");
    add_common(c_thresh, a_thresh);
    auto* c_uni = app.add_subcommand("unified", "single-price variant");
    add_common(c_uni, a_uni);
    auto* c_fig = app.add_subcommand(
        "figure2", "policy-curve CSV for the bundled reference instance");
    add_common(c_fig, a_fig, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_solve->parsed()) return run_solve(a_solve);
        if (c_verify->parsed()) return run_verify(a_verify);
        if (c_sim->parsed())
            return run_simulate(a_sim, paths, seed, I0, trace, realized);
        if (c_thresh->parsed()) return run_thresholds(a_thresh);
        if (c_uni->parsed()) return run_unified(a_uni);
        if (c_fig->parsed()) return run_figure2(a_fig);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
