#include "dualprice/sim.hpp"

#include <algorithm>
#include <cmath>

namespace dualprice {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

PathRng::PathRng(uint64_t seed, uint64_t path) {
    // Mix seed and path into one stream key.
    uint64_t k = seed;
    (void)splitmix64(k);
    k ^= 0x2545f4914f6cdd1dULL * (path + 1);
    state_ = k;
    (void)next_u64();
}

uint64_t PathRng::next_u64() { return splitmix64(state_); }

double PathRng::next_unit() {
    // 53-bit mantissa, strictly inside (0, 1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::truncated_normal(double mu, double sigma, double lo,
                                 double hi) {
    for (;;) {
        // Box-Muller; both values are used before drawing again.
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double z1 = r * std::cos(2.0 * M_PI * u2);
        const double z2 = r * std::sin(2.0 * M_PI * u2);
        for (double z : {z1, z2}) {
            const double v = mu + sigma * z;
            if (v > lo && v < hi) return v;
        }
    }
}

namespace {

double draw_component(const NoiseComponent& nc, PathRng& rng) {
    if (const auto* pm = std::get_if<PointMass>(&nc)) return pm->value;
    const auto& tn = std::get<TruncatedNormal>(nc);
    return rng.truncated_normal(tn.mean_target, tn.sigma, tn.lo, tn.hi);
}

}  // namespace

NoiseDraw draw_noise(const ProblemSpec& spec, int t, PathRng& rng) {
    const auto& ns = spec.noise(Market::OnSite, t);
    const auto& nl = spec.noise(Market::LongDistance, t);
    NoiseDraw d;
    if (const auto* pl = std::get_if<PerfectLinear>(&spec.correlation)) {
        d.eps_l = draw_component(nl.eps, rng);
        d.eps_s = 1.0 + pl->a * (d.eps_l - 1.0);
    } else {
        d.eps_s = draw_component(ns.eps, rng);
        d.eps_l = draw_component(nl.eps, rng);
    }
    d.omega_s = draw_component(ns.omega, rng);
    d.omega_l = draw_component(nl.omega, rng);
    return d;
}

SeasonState step(const SeasonState& state, int t, const PolicyFn& policy,
                 const ProblemSpec& spec, const NoiseDraw& draw,
                 Accounting mode, StepRecord* rec) {
    if (t < 1 || t > spec.T) throw std::domain_error("period out of range");
    const double q = spec.q_at(t);
    const auto [d_s, d_l] = policy(t, state.I);

    // Demand realizations, truncated at zero.
    const double D_s = std::max(0.0, draw.eps_s * d_s + draw.omega_s);
    const double D_l = std::max(0.0, draw.eps_l * d_l + draw.omega_l);

    const auto& cs = spec.curve(Market::OnSite, t);
    const auto& cl = spec.curve(Market::LongDistance, t);
    double rev = 0.0;
    if (mode == Accounting::Expectation) {
        rev = (d_s == 0.0 ? 0.0 : revenue(cs, d_s)) +
              (d_l == 0.0 ? 0.0 : revenue(cl, d_l));
    } else {
        // Backlogged demand pays the posted price in full at order time.
        rev = (d_s == 0.0 ? 0.0 : D_s * cs.price(d_s)) +
              (d_l == 0.0 ? 0.0 : D_l * cl.price(d_l));
    }
    const double cost = spec.costs.holding_cost(state.I + q - D_s);
    const double disc = std::pow(spec.costs.alpha, t - 1);

    // New backlog measured against the carried pool, on-site served first.
    const double pool = std::max(state.I, 0.0);
    const double backlog_s = std::max(0.0, D_s - pool);
    const double left = std::max(pool - D_s, 0.0);
    const double backlog_l = std::max(0.0, D_l - left);

    SeasonState out;
    out.t = t + 1;
    out.I = state.I + q - D_s - D_l;
    out.pending_l = 0.0;  // processed at the end of the sequence
    out.cash = state.cash + disc * (rev - cost);

    if (rec) {
        rec->t = t;
        rec->I_begin = state.I;
        rec->d_s = d_s;
        rec->d_l = d_l;
        rec->D_s = D_s;
        rec->D_l = D_l;
        rec->revenue = rev;
        rec->cost = cost;
        rec->backlog_s_new = backlog_s;
        rec->backlog_l_new = backlog_l;
        rec->I_end = out.I;
        rec->cash = out.cash;
    }
    return out;
}

SimStats simulate(const ProblemSpec& spec, const Solution& sol, double I0,
                  const SimOptions& opt, std::vector<PathTrace>* traces) {
    SimStats stats;
    stats.n_paths = opt.n_paths;

    PolicyFn policy = [&](int t, double I) {
        return std::make_pair(policy_at(sol, t, I, Market::OnSite, spec),
                              policy_at(sol, t, I, Market::LongDistance, spec));
    };

    double sum = 0.0, sumsq = 0.0;
    long backlogged = 0;
    bool escape = false;
    if (traces) traces->clear();

    for (long p = 0; p < opt.n_paths; ++p) {
        PathRng rng(opt.seed, static_cast<uint64_t>(p));
        SeasonState st;
        st.I = I0;
        PathTrace trace;
        trace.path = p;
        for (int t = 1; t <= spec.T; ++t) {
            if (st.I < sol.grid.I_min || st.I > sol.grid.I_max) escape = true;
            const NoiseDraw draw = draw_noise(spec, t, rng);
            StepRecord rec;
            st = step(st, t, policy, spec, draw, opt.mode,
                      opt.record_traces ? &rec : nullptr);
            if (opt.record_traces) trace.steps.push_back(rec);
        }
        const double terminal = std::pow(spec.costs.alpha, spec.T) *
                                terminal_value(st.I, spec.costs);
        const double profit = st.cash + terminal;
        sum += profit;
        sumsq += profit * profit;
        if (st.I < 0.0) ++backlogged;
        if (traces && opt.record_traces) traces->push_back(std::move(trace));
    }

    const double n = static_cast<double>(opt.n_paths);
    stats.mean_profit = sum / n;
    const double var =
        std::max(0.0, (sumsq - n * stats.mean_profit * stats.mean_profit) /
                          std::max(1.0, n - 1.0));
    stats.std_error = std::sqrt(var / n);
    stats.terminal_backlog_rate = static_cast<double>(backlogged) / n;
    stats.grid_escape = escape;
    return stats;
}

}  // namespace dualprice
