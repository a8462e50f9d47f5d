#include "dualprice/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dualprice {

namespace {

double lerp_price(const TabulatedConcave& tab, double d) {
    const auto& pts = tab.points;
    if (pts.size() < 2)
        throw std::invalid_argument("tabulated curve needs at least 2 knots");
    if (d <= pts.front()[0]) return pts.front()[1];
    if (d >= pts.back()[0]) return pts.back()[1];
    auto it = std::upper_bound(pts.begin(), pts.end(), d,
                               [](double x, const std::array<double, 2>& p) {
                                   return x < p[0];
                               });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    double w = (d - lo[0]) / (hi[0] - lo[0]);
    return lo[1] + w * (hi[1] - lo[1]);
}

void require_in_domain(const RevenueCurve& c, double d) {
    const double tol = 1e-9 * (1.0 + std::abs(c.d_upper));
    if (d < c.d_lower - tol || d > c.d_upper + tol)
        throw std::domain_error("demand outside [d_lower, d_upper]");
}

}  // namespace

RevenueCurve RevenueCurve::linear(Market m, double b, double c,
                                  double d_lower, double d_upper) {
    if (c <= 0.0) throw std::invalid_argument("linear demand slope c must be > 0");
    RevenueCurve rc;
    rc.market = m;
    rc.form = LinearDemand{b, c};
    rc.d_lower = d_lower;
    rc.d_upper = d_upper;
    rc.p_lower = (b - d_upper) / c;
    rc.p_upper = (b - d_lower) / c;
    return rc;
}

RevenueCurve RevenueCurve::tabulated(Market m,
                                     std::vector<std::array<double, 2>> points) {
    if (points.size() < 2)
        throw std::invalid_argument("tabulated curve needs at least 2 knots");
    RevenueCurve rc;
    rc.market = m;
    rc.d_lower = points.front()[0];
    rc.d_upper = points.back()[0];
    rc.p_upper = points.front()[1];
    rc.p_lower = points.back()[1];
    rc.form = TabulatedConcave{std::move(points)};
    return rc;
}

double RevenueCurve::price(double d) const {
    require_in_domain(*this, d);
    if (const auto* lin = std::get_if<LinearDemand>(&form))
        return (lin->b - d) / lin->c;
    return lerp_price(std::get<TabulatedConcave>(form), d);
}

double revenue(const RevenueCurve& curve, double d) {
    require_in_domain(curve, d);
    if (d == 0.0) return 0.0;
    return d * curve.price(d);
}

double marginal_revenue(const RevenueCurve& curve, double d) {
    require_in_domain(curve, d);
    if (const auto* lin = std::get_if<LinearDemand>(&curve.form))
        return (lin->b - 2.0 * d) / lin->c;
    // Central difference, shrunk near the domain ends.
    double h = 1e-6 * std::max(1.0, curve.d_upper - curve.d_lower);
    h = std::min({h, d - curve.d_lower + h, curve.d_upper - d + h});
    double lo = std::max(curve.d_lower, d - h);
    double hi = std::min(curve.d_upper, d + h);
    if (hi <= lo) throw std::domain_error("degenerate demand domain");
    return (revenue(curve, hi) - revenue(curve, lo)) / (hi - lo);
}

bool is_degenerate(const NoiseComponent& nc) {
    return std::holds_alternative<PointMass>(nc);
}

const RevenueCurve& ProblemSpec::curve(Market m, int t) const {
    const auto& v = (m == Market::OnSite) ? curve_s : curve_l;
    if (v.empty()) throw std::logic_error("spec has no revenue curve");
    return v.size() == 1 ? v[0] : v.at(static_cast<size_t>(t - 1));
}

const MarketNoise& ProblemSpec::noise(Market m, int t) const {
    const auto& v = (m == Market::OnSite) ? noise_s : noise_l;
    if (v.empty()) throw std::logic_error("spec has no noise model");
    return v.size() == 1 ? v[0] : v.at(static_cast<size_t>(t - 1));
}

double ProblemSpec::q_at(int t) const {
    return q.at(static_cast<size_t>(t - 1));
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& i : issues)
        os << (i.marginal ? "[marginal] " : "[violation] ") << i.code << ": "
           << i.message << "\n";
    return os.str();
}

namespace {

void check_curve(const RevenueCurve& c, const std::string& where,
                 ValidationReport& rep) {
    auto bad = [&](const std::string& code, const std::string& msg) {
        rep.issues.push_back({code, where + ": " + msg, false});
    };

    if (!(c.d_lower < c.d_upper)) {
        bad("curve.domain", "d_lower must be < d_upper");
        return;
    }
    const double ptol = 1e-9 * (1.0 + std::abs(c.p_upper));
    if (std::abs(c.price(c.d_upper) - c.p_lower) > ptol ||
        std::abs(c.price(c.d_lower) - c.p_upper) > ptol)
        bad("curve.bounds",
            "price bounds inconsistent with demand bounds: expected "
            "p(d_upper)=p_lower and p(d_lower)=p_upper");

    if (const auto* tab = std::get_if<TabulatedConcave>(&c.form)) {
        for (size_t i = 1; i < tab->points.size(); ++i) {
            if (!(tab->points[i][0] > tab->points[i - 1][0]))
                bad("curve.knots", "knot demands must be strictly increasing");
            if (tab->points[i][1] > tab->points[i - 1][1] + 1e-12)
                bad("curve.knots", "knot prices must be non-increasing");
        }
    }

    // Probe grid: R strictly increasing, second differences <= tolerance.
    const int n = 101;
    const double h = (c.d_upper - c.d_lower) / (n - 1);
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = revenue(c, c.d_lower + i * h);
    double scale = 0.0;
    for (double v : r) scale = std::max(scale, std::abs(v));
    const double tol = 1e-9 * std::max(1.0, scale);
    bool increasing = true, concave = true;
    for (int i = 1; i < n; ++i)
        if (r[i] <= r[i - 1] + tol * 1e-3) increasing = false;
    for (int i = 1; i + 1 < n; ++i)
        if (r[i - 1] + r[i + 1] - 2.0 * r[i] > tol) concave = false;
    if (!increasing)
        bad("curve.increasing", "revenue not strictly increasing on probe grid");
    if (!concave)
        bad("curve.concave", "revenue not concave on probe grid");
}

void check_noise(const MarketNoise& n, const std::string& where,
                 ValidationReport& rep) {
    auto bad = [&](const std::string& code, const std::string& msg) {
        rep.issues.push_back({code, where + ": " + msg, false});
    };
    if (const auto* pm = std::get_if<PointMass>(&n.eps)) {
        if (pm->value != 1.0)
            bad("noise.eps", "degenerate multiplicative noise must sit at 1");
    } else {
        const auto& tn = std::get<TruncatedNormal>(n.eps);
        if (tn.mean_target != 1.0)
            bad("noise.eps", "multiplicative noise target moment must be 1");
        if (!(tn.sigma > 0.0)) bad("noise.eps", "sigma must be > 0");
        if (!(tn.lo < tn.hi)) bad("noise.eps", "support must have positive width");
        if (tn.lo < 0.0)
            bad("noise.eps", "multiplicative support must lie in [0, inf)");
    }
    if (const auto* pm = std::get_if<PointMass>(&n.omega)) {
        if (pm->value != 0.0)
            bad("noise.omega", "degenerate additive noise must sit at 0");
    } else {
        const auto& tn = std::get<TruncatedNormal>(n.omega);
        if (tn.mean_target != 0.0)
            bad("noise.omega", "additive noise target moment must be 0");
        if (!(tn.sigma > 0.0)) bad("noise.omega", "sigma must be > 0");
        if (!(tn.lo < tn.hi)) bad("noise.omega", "support must have positive width");
    }
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec) {
    ValidationReport rep;
    auto bad = [&](const std::string& code, const std::string& msg,
                   bool marginal = false) {
        rep.issues.push_back({code, msg, marginal});
    };

    if (spec.T < 1) bad("spec.T", "horizon must have at least one period");
    if (spec.q.size() != static_cast<size_t>(spec.T))
        bad("spec.q", "replenishment schedule must have exactly T entries");
    for (double qi : spec.q)
        if (qi < 0.0) bad("spec.q", "replenishments must be nonnegative");

    auto size_ok = [&](size_t s) { return s == 1 || s == static_cast<size_t>(spec.T); };
    if (!size_ok(spec.curve_s.size()) || !size_ok(spec.curve_l.size()))
        bad("spec.curves", "curves must be stationary (1) or per-period (T)");
    if (!size_ok(spec.noise_s.size()) || !size_ok(spec.noise_l.size()))
        bad("spec.noise", "noise must be stationary (1) or per-period (T)");

    const auto& c = spec.costs;
    if (c.c_h < 0.0 || c.c_p < 0.0 || c.c_e < 0.0)
        bad("costs.sign", "costs must be nonnegative");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0))
        bad("costs.alpha", "discount factor must lie in (0, 1]");

    for (const auto& curve : spec.curve_s) check_curve(curve, "on_site curve", rep);
    for (const auto& curve : spec.curve_l)
        check_curve(curve, "long_distance curve", rep);
    for (const auto& n : spec.noise_s) check_noise(n, "on_site noise", rep);
    for (const auto& n : spec.noise_l) check_noise(n, "long_distance noise", rep);

    if (const auto* pl = std::get_if<PerfectLinear>(&spec.correlation)) {
        if (pl->a == 0.0)
            bad("correlation.a", "perfect linear correlation needs a != 0");
    }

    if (!rep.ok()) return rep;  // below needs well-formed curves

    // Assumption 1(1): marginal revenue at d_lower exceeds both unit costs.
    const double cap = std::max(c.c_p, c.c_h);
    for (int t = 1; t <= spec.T; ++t)
        for (Market m : {Market::OnSite, Market::LongDistance}) {
            const auto& cv = spec.curve(m, t);
            if (!(marginal_revenue(cv, cv.d_lower) > cap)) {
                bad("assumption1.1",
                    std::string(market_name(m)) + " t=" + std::to_string(t) +
                        ": R'(d_lower) <= max{c_p, c_h}");
                break;
            }
        }

    // Assumption 1(2): c_e > max{R'_s,T(0), R'_l,T(0)} - c_p. Equality of
    // c_e with the larger marginal revenue itself is reported as marginal:
    // the condition then holds only through the c_p slack.
    double mr = -1e300;
    for (Market m : {Market::OnSite, Market::LongDistance}) {
        const auto& cv = spec.curve(m, spec.T);
        double at = std::max(0.0, cv.d_lower);
        mr = std::max(mr, marginal_revenue(cv, at));
    }
    if (!(c.c_e > mr - c.c_p))
        bad("assumption1.2", "c_e must exceed max{R'_s,T(0), R'_l,T(0)} - c_p");
    else if (c.c_e <= mr)
        bad("assumption1.2",
            "c_e does not exceed the last period's opening marginal revenue; "
            "the assumption holds only through the c_p slack",
            true);

    return rep;
}

}  // namespace dualprice
