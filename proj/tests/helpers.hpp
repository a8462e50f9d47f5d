#pragma once

#include "dualprice/model.hpp"

namespace testutil {

using namespace dualprice;

// The two-period reference instance: linear curves p_s(d) = 10 - d/2,
// p_l(d) = 9 - d/2, truncated normal multiplicative noise, q = (2, 1).
inline ProblemSpec example_instance() {
    ProblemSpec spec;
    spec.T = 2;
    spec.q = {2.0, 1.0};
    spec.curve_s = {RevenueCurve::linear(Market::OnSite, 20.0, 2.0, 0.0, 9.0)};
    spec.curve_l = {
        RevenueCurve::linear(Market::LongDistance, 18.0, 2.0, 0.0, 9.0)};
    spec.noise_s = {
        MarketNoise{TruncatedNormal{1.0, 0.6, 0.0, 2.0}, PointMass{0.0}}};
    spec.noise_l = {
        MarketNoise{TruncatedNormal{1.0, 0.9, 0.0, 2.0}, PointMass{0.0}}};
    spec.costs = {2.0, 5.0, 10.0, 0.8};
    spec.last_period_rule = true;
    return spec;
}

// Same shape with all noise degenerate.
inline ProblemSpec deterministic_instance() {
    ProblemSpec spec = example_instance();
    spec.noise_s = {MarketNoise{}};
    spec.noise_l = {MarketNoise{}};
    return spec;
}

// Small demand ranges so brute-force demand grids resolve the policy.
inline ProblemSpec small_oracle_instance() {
    ProblemSpec spec;
    spec.T = 2;
    spec.q = {0.5, 0.5};
    spec.curve_s = {RevenueCurve::linear(Market::OnSite, 5.0, 1.0, 0.0, 2.0)};
    spec.curve_l = {
        RevenueCurve::linear(Market::LongDistance, 4.5, 1.0, 0.0, 2.0)};
    spec.noise_s = {
        MarketNoise{TruncatedNormal{1.0, 0.5, 0.0, 2.0}, PointMass{0.0}}};
    spec.noise_l = {
        MarketNoise{TruncatedNormal{1.0, 0.5, 0.0, 2.0}, PointMass{0.0}}};
    spec.costs = {1.0, 2.0, 4.0, 0.9};
    spec.last_period_rule = true;
    return spec;
}

// Additive noise in both markets.
inline ProblemSpec additive_instance() {
    ProblemSpec spec = example_instance();
    spec.noise_s = {
        MarketNoise{PointMass{1.0}, TruncatedNormal{0.0, 0.5, -1.5, 1.5}}};
    spec.noise_l = {
        MarketNoise{PointMass{1.0}, TruncatedNormal{0.0, 0.7, -1.5, 1.5}}};
    return spec;
}

// Identical markets (shared curve and noise law), parametric costs.
inline ProblemSpec identical_markets(double c_h, double c_p, double c_e) {
    ProblemSpec spec;
    spec.T = 2;
    spec.q = {2.0, 1.0};
    spec.curve_s = {RevenueCurve::linear(Market::OnSite, 18.0, 2.0, 0.0, 9.0)};
    spec.curve_l = {
        RevenueCurve::linear(Market::LongDistance, 18.0, 2.0, 0.0, 9.0)};
    spec.noise_s = {
        MarketNoise{TruncatedNormal{1.0, 0.7, 0.0, 2.0}, PointMass{0.0}}};
    spec.noise_l = {
        MarketNoise{TruncatedNormal{1.0, 0.7, 0.0, 2.0}, PointMass{0.0}}};
    spec.costs = {c_h, c_p, c_e, 0.8};
    spec.last_period_rule = true;
    return spec;
}

}  // namespace testutil
