#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dualprice {

enum class Market { OnSite, LongDistance };

inline const char* market_name(Market m) {
    return m == Market::OnSite ? "on_site" : "long_distance";
}

/// Inverse-demand form d(p) = b - c*p, so p(d) = (b - d)/c and
/// R(d) = d*(b - d)/c.
struct LinearDemand {
    double b = 0.0;
    double c = 1.0;
};

/// Inverse-demand curve sampled at knots (d_k, p_k), d strictly increasing,
/// p non-increasing; p(d) is linear between knots.
struct TabulatedConcave {
    std::vector<std::array<double, 2>> points;
};

struct RevenueCurve {
    Market market = Market::OnSite;
    std::variant<LinearDemand, TabulatedConcave> form;
    double d_lower = 0.0;
    double d_upper = 0.0;
    double p_lower = 0.0;
    double p_upper = 0.0;

    static RevenueCurve linear(Market m, double b, double c,
                               double d_lower, double d_upper);
    static RevenueCurve tabulated(Market m,
                                  std::vector<std::array<double, 2>> points);

    /// p(d). Throws std::domain_error outside [d_lower, d_upper].
    double price(double d) const;
};

/// R(d) = d * p(d).
double revenue(const RevenueCurve& curve, double d);

/// R'(d): closed form for LinearDemand, central difference for tabulated
/// curves.
double marginal_revenue(const RevenueCurve& curve, double d);

struct PointMass {
    double value = 0.0;
};

/// Underlying normal N(mean_target, sigma^2) truncated to (lo, hi). The
/// target moment (1 for multiplicative, 0 for additive noise) is enforced
/// exactly at discretization time.
struct TruncatedNormal {
    double mean_target = 0.0;
    double sigma = 1.0;
    double lo = 0.0;
    double hi = 0.0;
};

using NoiseComponent = std::variant<PointMass, TruncatedNormal>;

bool is_degenerate(const NoiseComponent& nc);

/// One market's demand noise: D = eps * d + omega.
struct MarketNoise {
    NoiseComponent eps = PointMass{1.0};
    NoiseComponent omega = PointMass{0.0};
};

struct Independent {};

/// eps_s - 1 = a * (eps_l - 1).
struct PerfectLinear {
    double a = 1.0;
};

using Correlation = std::variant<Independent, PerfectLinear>;

struct CostSpec {
    double c_h = 0.0;   // holding, per unit per period
    double c_p = 0.0;   // shortage, per unit per period
    double c_e = 0.0;   // terminal emergency supply, per unit
    double alpha = 1.0; // discount factor, in (0, 1]

    double holding_cost(double x) const {
        return x >= 0.0 ? c_h * x : -c_p * x;
    }
    /// H'(x); the kink at 0 resolves to the holding branch.
    double holding_cost_slope(double x) const {
        return x > 0.0 ? c_h : -c_p;
    }
};

struct ProblemSpec {
    int T = 1;
    std::vector<double> q;                  // q[t-1], t = 1..T
    std::vector<RevenueCurve> curve_s;      // size 1 (stationary) or T
    std::vector<RevenueCurve> curve_l;
    std::vector<MarketNoise> noise_s;       // size 1 (stationary) or T
    std::vector<MarketNoise> noise_l;
    Correlation correlation = Independent{};
    CostSpec costs;
    bool last_period_rule = true;           // force d_l = 0 in period T

    const RevenueCurve& curve(Market m, int t) const;
    const MarketNoise& noise(Market m, int t) const;
    double q_at(int t) const;
};

struct ValidationIssue {
    std::string code;
    std::string message;
    bool marginal = false;  // boundary case noted but not rejected
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const {
        for (const auto& i : issues)
            if (!i.marginal) return false;
        return true;
    }
    std::string to_string() const;
};

/// Report-style check of every invariant: curve shape, noise supports,
/// cost signs, and both parts of the model's revenue/cost assumption.
ValidationReport validate(const ProblemSpec& spec);

}  // namespace dualprice
