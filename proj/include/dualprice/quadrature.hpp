#pragma once

#include <vector>

#include "dualprice/model.hpp"

namespace dualprice {

enum class NoiseKind { Multiplicative, Additive };

/// Finite node/weight representation of a noise component. The target first
/// moment (1 for eps, 0 for omega) holds exactly after correction; lo/hi is
/// the hull of the corrected nodes.
struct DiscreteNoise {
    std::vector<double> nodes;
    std::vector<double> weights;
    double lo = 0.0;
    double hi = 0.0;
    double target = 0.0;

    double mean() const;
    double variance() const;
};

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// Discretizes a noise component. Nondegenerate distributions need
/// n_nodes >= 2; zero-width supports are rejected. The first moment is
/// corrected to the target exactly: a single rescale for multiplicative
/// noise, a single shift for additive noise.
DiscreteNoise discretize(const NoiseComponent& nc, NoiseKind kind, int n_nodes);

template <class F>
double expect(F&& f, const DiscreteNoise& dn) {
    double acc = 0.0;
    for (size_t i = 0; i < dn.nodes.size(); ++i)
        acc += dn.weights[i] * f(dn.nodes[i]);
    return acc;
}

struct JointNoise {
    struct Pair {
        double s = 0.0;
        double l = 0.0;
        double w = 0.0;
    };
    std::vector<Pair> pairs;

    double mean_s() const;
    double mean_l() const;
    /// Sample correlation of the weighted pairs; 0 when degenerate.
    double correlation() const;
};

/// Independent -> product distribution; PerfectLinear(a) -> one pair per
/// l-node with s = 1 + a*(l - 1), which must stay inside s's support.
JointNoise join(const DiscreteNoise& s, const DiscreteNoise& l,
                const Correlation& corr);

}  // namespace dualprice
