#include "dualprice/dp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace dualprice {

InventoryGrid::InventoryGrid(double lo, double hi, double step_) {
    if (!(step_ > 0.0)) throw std::invalid_argument("grid step must be > 0");
    if (!(lo < hi)) throw std::invalid_argument("grid bounds must satisfy lo < hi");
    step = step_;
    // Widen outward onto the lattice anchored at 0 so that 0 is a grid point.
    const long klo = static_cast<long>(std::floor(lo / step + 1e-9));
    const long khi = static_cast<long>(std::ceil(hi / step - 1e-9));
    I_min = klo * step;
    I_max = khi * step;
    n = static_cast<int>(khi - klo) + 1;
}

int InventoryGrid::cell(double I) const {
    int k = static_cast<int>(std::floor((I - I_min) / step));
    return std::clamp(k, 0, n - 2);
}

double interp_on_grid(const InventoryGrid& g, const std::vector<double>& table,
                      double I) {
    const int k = g.cell(I);
    const double x0 = g.point(k);
    const double slope = (table[k + 1] - table[k]) / g.step;
    return table[k] + slope * (I - x0);
}

double terminal_value(double I, const CostSpec& costs) {
    return costs.c_e * std::min(0.0, I);
}

PeriodNoise discretize_period(const ProblemSpec& spec, int t, int nodes) {
    const auto& ns = spec.noise(Market::OnSite, t);
    const auto& nl = spec.noise(Market::LongDistance, t);
    DiscreteNoise eps_s = discretize(ns.eps, NoiseKind::Multiplicative, nodes);
    DiscreteNoise eps_l = discretize(nl.eps, NoiseKind::Multiplicative, nodes);
    DiscreteNoise om_s = discretize(ns.omega, NoiseKind::Additive, nodes);
    DiscreteNoise om_l = discretize(nl.omega, NoiseKind::Additive, nodes);
    PeriodNoise pn;
    pn.eps = join(eps_s, eps_l, spec.correlation);
    pn.omega = join(om_s, om_l, Independent{});
    return pn;
}

namespace {

inline double rev_or_zero(const RevenueCurve& c, double d) {
    return d == 0.0 ? 0.0 : revenue(c, d);
}

/// One period's stage evaluation with the s-side cached, so line searches
/// over one coordinate touch only what depends on it.
struct StageEval {
    const ProblemSpec& spec;
    const InventoryGrid& grid;
    const PeriodNoise& noise;
    const std::vector<double>& next_V;
    int t;
    double y;  // I + q_t
    const RevenueCurve& cs;
    const RevenueCurve& cl;
    double alpha;

    StageEval(double I, int t_, const std::vector<double>& nv,
              const ProblemSpec& sp, const InventoryGrid& g,
              const PeriodNoise& pn)
        : spec(sp), grid(g), noise(pn), next_V(nv), t(t_),
          y(I + sp.q_at(t_)), cs(sp.curve(Market::OnSite, t_)),
          cl(sp.curve(Market::LongDistance, t_)), alpha(sp.costs.alpha) {}

    double interp(double x) const { return interp_on_grid(grid, next_V, x); }

    double operator()(double d_s, double d_l) const {
        const auto& H = spec.costs;
        double acc = 0.0;
        for (const auto& e : noise.eps.pairs) {
            const double sdraw = e.s * d_s;
            const double ldraw = e.l * d_l;
            for (const auto& o : noise.omega.pairs) {
                const double xs = y - sdraw - o.s;
                acc += e.w * o.w *
                       (-H.holding_cost(xs) + alpha * interp(xs - ldraw - o.l));
            }
        }
        return rev_or_zero(cs, d_s) + rev_or_zero(cl, d_l) + acc;
    }

    /// Restriction d_l -> J(d_s, d_l) for fixed d_s, with the cost term and
    /// the s-components of the transition precomputed.
    struct LSlice {
        const StageEval* ev;
        double rev_s_minus_H = 0.0;
        std::vector<double> x0;  // y - eps_s d_s - omega_s - omega_l
        std::vector<double> el;
        std::vector<double> w;

        double operator()(double d_l) const {
            double acc = 0.0;
            for (size_t i = 0; i < x0.size(); ++i)
                acc += w[i] * ev->interp(x0[i] - el[i] * d_l);
            return rev_s_minus_H + ev->alpha * acc +
                   rev_or_zero(ev->cl, d_l);
        }
    };

    LSlice slice_l(double d_s) const {
        LSlice s;
        s.ev = this;
        const auto& H = spec.costs;
        const size_t m = noise.eps.pairs.size() * noise.omega.pairs.size();
        s.x0.reserve(m);
        s.el.reserve(m);
        s.w.reserve(m);
        double cost = 0.0;
        for (const auto& e : noise.eps.pairs) {
            const double sdraw = e.s * d_s;
            for (const auto& o : noise.omega.pairs) {
                const double xs = y - sdraw - o.s;
                const double w = e.w * o.w;
                cost += w * H.holding_cost(xs);
                s.x0.push_back(xs - o.l);
                s.el.push_back(e.l);
                s.w.push_back(w);
            }
        }
        s.rev_s_minus_H = rev_or_zero(cs, d_s) - cost;
        return s;
    }

    /// Restriction d_s -> J(d_s, d_l) for fixed d_l.
    struct SSlice {
        const StageEval* ev;
        double rev_l = 0.0;
        std::vector<double> u0;    // y - omega_s
        std::vector<double> es;
        std::vector<double> voff;  // eps_l d_l + omega_l
        std::vector<double> w;

        double operator()(double d_s) const {
            const auto& H = ev->spec.costs;
            double acc = 0.0;
            for (size_t i = 0; i < u0.size(); ++i) {
                const double xs = u0[i] - es[i] * d_s;
                acc += w[i] * (-H.holding_cost(xs) +
                               ev->alpha * ev->interp(xs - voff[i]));
            }
            return rev_l + acc + rev_or_zero(ev->cs, d_s);
        }
    };

    SSlice slice_s(double d_l) const {
        SSlice s;
        s.ev = this;
        const size_t m = noise.eps.pairs.size() * noise.omega.pairs.size();
        s.u0.reserve(m);
        s.es.reserve(m);
        s.voff.reserve(m);
        s.w.reserve(m);
        for (const auto& e : noise.eps.pairs)
            for (const auto& o : noise.omega.pairs) {
                s.u0.push_back(y - o.s);
                s.es.push_back(e.s);
                s.voff.push_back(e.l * d_l + o.l);
                s.w.push_back(e.w * o.w);
            }
        s.rev_l = rev_or_zero(cl, d_l);
        return s;
    }
};

/// Golden search plus explicit endpoint handling: a strictly better upper
/// endpoint wins, and the lower endpoint takes tolerance-level ties (the
/// smallest-demand convention).
struct Pick {
    double x;
    double f;
};

template <class F>
Pick golden_pick(const F& f, double lo, double hi, double xtol) {
    const double cand = golden_max(f, lo, hi, xtol);
    double bx = cand, bf = f(cand);
    const double fhi = f(hi);
    if (fhi > bf) {
        bx = hi;
        bf = fhi;
    }
    const double flo = f(lo);
    if (flo >= bf - 1e-11 * std::max(1.0, std::abs(bf))) {
        bx = lo;
        bf = flo;
    }
    return {bx, bf};
}

/// Leftmost x in [lo, x_star] with f(x) >= cut, assuming f is concave and
/// increasing toward x_star.
template <class F>
double shrink_left(const F& f, double lo, double x_star, double cut) {
    if (x_star <= lo) return lo;
    if (f(lo) >= cut) return lo;
    double a = lo, b = x_star;
    for (int i = 0; i < 60 && b - a > 1e-12 * (1.0 + std::abs(x_star)); ++i) {
        const double m = 0.5 * (a + b);
        if (f(m) >= cut)
            b = m;
        else
            a = m;
    }
    return b;
}

}  // namespace

double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double xtol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

double stage_objective(double I, double d_s, double d_l, int t,
                       const std::vector<double>& next_V,
                       const ProblemSpec& spec, const InventoryGrid& grid,
                       const PeriodNoise& noise) {
    const auto& cs = spec.curve(Market::OnSite, t);
    const auto& cl = spec.curve(Market::LongDistance, t);
    const double tol_s = 1e-9 * (1.0 + cs.d_upper);
    const double tol_l = 1e-9 * (1.0 + cl.d_upper);
    if (d_s != 0.0 && (d_s < cs.d_lower - tol_s || d_s > cs.d_upper + tol_s))
        throw std::domain_error("d_s outside its demand bounds");
    if (d_l != 0.0 && (d_l < cl.d_lower - tol_l || d_l > cl.d_upper + tol_l))
        throw std::domain_error("d_l outside its demand bounds");
    return StageEval(I, t, next_V, spec, grid, noise)(d_s, d_l);
}

StageOptimum maximize_concave_box(const BoxProblem& pb, double x_lo,
                                  double x_hi, double y_lo, double y_hi,
                                  bool pin_y, const SolveOptions& opt, int t_ctx,
                                  double I_ctx) {
    auto slice_x = pb.slice_x;
    auto slice_y = pb.slice_y;
    if (!slice_x)
        slice_x = [&pb](double y) {
            return [&pb, y](double x) { return pb.J(x, y); };
        };
    if (!slice_y)
        slice_y = [&pb](double x) {
            return [&pb, x](double y) { return pb.J(x, y); };
        };

    if (pin_y) y_lo = y_hi = 0.0;
    const double xtol_x = std::max(1e-10, 1e-8 * (x_hi - x_lo));
    const double xtol_y = std::max(1e-10, 1e-8 * (y_hi - y_lo));
    const double tol_opt = std::max(opt.tol_opt, 1e-12);

    double x = x_lo, y = y_lo;
    double J = pb.J(x, y);
    bool converged = false;

    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        const double J_prev = J;

        {
            auto fx = slice_x(y);
            x = golden_pick(fx, x_lo, x_hi, xtol_x).x;
        }
        if (!pin_y) {
            auto fy = slice_y(x);
            y = golden_pick(fy, y_lo, y_hi, xtol_y).x;
        }
        // Piecewise-linear interpolation of the continuation value leaves
        // kinks where axis-aligned ascent can jam; a line search along the
        // trade direction (x + z, y - z) clears the dominant jam mode.
        if (!pin_y) {
            const double z_lo = std::max(x_lo - x, y - y_hi);
            const double z_hi = std::min(x_hi - x, y - y_lo);
            if (z_hi - z_lo > xtol_x) {
                auto fz = [&](double z) { return pb.J(x + z, y - z); };
                const double z = golden_max(fz, z_lo, z_hi, xtol_x);
                if (fz(z) > pb.J(x, y)) {
                    x += z;
                    y -= z;
                }
            }
        }

        J = pb.J(x, y);
        const double tol_J = tol_opt * std::max(1.0, std::abs(J));
        if (sweep >= 1 && std::abs(J - J_prev) <= tol_J) {
            converged = true;
            break;
        }
    }
    if (!converged) throw SolverError(t_ctx, I_ctx, x, y, J);

    // The kinks of the piecewise-linear continuation value can jam
    // axis-aligned ascent short of the maximum. The profile
    // phi(x) = max_y J(x, y) is concave, hence unimodal, so a golden search
    // over x with an inner golden search over y cannot jam; use it as the
    // finishing step.
    if (!pin_y) {
        auto inner_best = [&](double xv) {
            auto fy = slice_y(xv);
            return golden_pick(fy, y_lo, y_hi, xtol_y);
        };
        auto profile = [&](double xv) { return inner_best(xv).f; };
        // Unimodality of the profile lets a local bracket around the ascent
        // point be certified with two evaluations; fall back to the full
        // range when the certificate fails.
        double a = x_lo, b = x_hi;
        const double w = 0.05 * (x_hi - x_lo);
        const double la = std::max(x_lo, x - w);
        const double lb = std::min(x_hi, x + w);
        if (la < lb && profile(la) <= J && J >= profile(lb)) {
            a = la;
            b = lb;
        }
        const Pick px =
            golden_pick(profile, a, b, std::max(1e-9, 1e-7 * (x_hi - x_lo)));
        const Pick py = inner_best(px.x);
        if (py.f > J) {
            x = px.x;
            y = py.x;
            J = py.f;
        }
    } else {
        auto fx = slice_x(0.0);
        const Pick px = golden_pick(fx, x_lo, x_hi, xtol_x);
        if (px.f > J) {
            x = px.x;
            J = px.f;
        }
    }

    // Tie-break: among tolerance-equivalent optima take the smallest x + y,
    // shrinking y first.
    const double cut = J - 1e-11 * std::max(1.0, std::abs(J));
    if (!pin_y && y > y_lo) {
        auto fy = slice_y(x);
        y = shrink_left(fy, y_lo, y, cut);
    }
    if (x > x_lo) {
        auto fx = slice_x(y);
        x = shrink_left(fx, x_lo, x, cut);
    }
    return {x, y, pb.J(x, y)};
}

StageOptimum optimize_stage(double I, int t, const std::vector<double>& next_V,
                            const ProblemSpec& spec, const InventoryGrid& grid,
                            const PeriodNoise& noise, const SolveOptions& opt) {
    const StageEval ev(I, t, next_V, spec, grid, noise);
    const auto& cs = ev.cs;
    const auto& cl = ev.cl;
    const bool pin_l = spec.last_period_rule && t == spec.T;

    BoxProblem pb;
    pb.J = [&ev](double a, double b) { return ev(a, b); };
    pb.slice_x = [&ev](double b) {
        return [sl = ev.slice_s(b)](double a) { return sl(a); };
    };
    pb.slice_y = [&ev](double a) {
        return [sl = ev.slice_l(a)](double b) { return sl(b); };
    };
    return maximize_concave_box(pb, cs.d_lower, cs.d_upper, cl.d_lower,
                                cl.d_upper, pin_l, opt, t, I);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) {
        if (const char* env = std::getenv("DUALPRICE_THREADS"))
            threads = std::max(1, std::atoi(env));
        else
            threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lk(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

Solution solve(const ProblemSpec& spec, const InventoryGrid& grid,
               const SolveOptions& opt) {
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
        const auto& next_V = sol.V[t];
        parallel_for(grid.n, opt.threads, [&](int k) {
            StageOptimum o = optimize_stage(grid.point(k), t, next_V, spec,
                                            grid, noise, opt);
            sol.V[t - 1][k] = o.J;
            sol.d_s[t - 1][k] = o.d_s;
            sol.d_l[t - 1][k] = o.d_l;
        });
    }
    return sol;
}

double value_at(const Solution& sol, int t, double I, const CostSpec& costs) {
    if (t < 1 || t > sol.T + 1) throw std::domain_error("period out of range");
    if (t == sol.T + 1) return terminal_value(I, costs);
    return interp_on_grid(sol.grid, sol.V[t - 1], I);
}

double policy_at(const Solution& sol, int t, double I, Market m,
                 const ProblemSpec& spec) {
    if (t < 1 || t > sol.T) throw std::domain_error("period out of range");
    const auto& table = (m == Market::OnSite) ? sol.d_s[t - 1] : sol.d_l[t - 1];
    const auto& curve = spec.curve(m, t);
    double d = interp_on_grid(sol.grid, table, I);
    return std::clamp(d, 0.0, curve.d_upper);
}

}  // namespace dualprice
