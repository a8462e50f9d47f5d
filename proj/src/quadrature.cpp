#include "dualprice/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dualprice {

double DiscreteNoise::mean() const {
    double m = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i) m += weights[i] * nodes[i];
    return m;
}

double DiscreteNoise::variance() const {
    const double m = mean();
    double v = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i)
        v += weights[i] * (nodes[i] - m) * (nodes[i] - m);
    return v;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw std::invalid_argument("need at least one quadrature node");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton from the Chebyshev-based initial guess.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

DiscreteNoise discretize(const NoiseComponent& nc, NoiseKind kind, int n_nodes) {
    DiscreteNoise dn;
    dn.target = (kind == NoiseKind::Multiplicative) ? 1.0 : 0.0;

    if (const auto* pm = std::get_if<PointMass>(&nc)) {
        dn.nodes = {pm->value};
        dn.weights = {1.0};
        dn.lo = dn.hi = pm->value;
        return dn;
    }

    const auto& tn = std::get<TruncatedNormal>(nc);
    if (!(tn.hi > tn.lo))
        throw std::invalid_argument("noise support has zero width");
    if (n_nodes < 2)
        throw std::invalid_argument("nondegenerate noise needs n_nodes >= 2");

    std::vector<double> gx, gw;
    gauss_legendre(n_nodes, gx, gw);

    dn.nodes.resize(n_nodes);
    dn.weights.resize(n_nodes);
    const double mid = 0.5 * (tn.hi + tn.lo);
    const double half = 0.5 * (tn.hi - tn.lo);
    double wsum = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
        const double v = mid + half * gx[i];
        const double z = (v - tn.mean_target) / tn.sigma;
        dn.nodes[i] = v;
        dn.weights[i] = gw[i] * std::exp(-0.5 * z * z);
        wsum += dn.weights[i];
    }
    for (double& wi : dn.weights) wi /= wsum;

    const double m = dn.mean();
    if (kind == NoiseKind::Multiplicative) {
        if (!(m > 0.0))
            throw std::invalid_argument("multiplicative noise has nonpositive mean");
        const double scale = dn.target / m;
        for (double& v : dn.nodes) v *= scale;
    } else {
        const double shift = dn.target - m;
        for (double& v : dn.nodes) v += shift;
    }
    // Asymmetric truncations shift under the correction; lo/hi record the
    // corrected hull, which is what downstream consumers see.
    dn.lo = *std::min_element(dn.nodes.begin(), dn.nodes.end());
    dn.hi = *std::max_element(dn.nodes.begin(), dn.nodes.end());
    return dn;
}

double JointNoise::mean_s() const {
    double m = 0.0;
    for (const auto& p : pairs) m += p.w * p.s;
    return m;
}

double JointNoise::mean_l() const {
    double m = 0.0;
    for (const auto& p : pairs) m += p.w * p.l;
    return m;
}

double JointNoise::correlation() const {
    const double ms = mean_s(), ml = mean_l();
    double vs = 0.0, vl = 0.0, cov = 0.0;
    for (const auto& p : pairs) {
        vs += p.w * (p.s - ms) * (p.s - ms);
        vl += p.w * (p.l - ml) * (p.l - ml);
        cov += p.w * (p.s - ms) * (p.l - ml);
    }
    if (vs <= 0.0 || vl <= 0.0) return 0.0;
    return cov / std::sqrt(vs * vl);
}

JointNoise join(const DiscreteNoise& s, const DiscreteNoise& l,
                const Correlation& corr) {
    JointNoise jn;
    if (std::holds_alternative<Independent>(corr)) {
        jn.pairs.reserve(s.nodes.size() * l.nodes.size());
        for (size_t i = 0; i < s.nodes.size(); ++i)
            for (size_t j = 0; j < l.nodes.size(); ++j)
                jn.pairs.push_back({s.nodes[i], l.nodes[j],
                                    s.weights[i] * l.weights[j]});
        return jn;
    }
    const auto& pl = std::get<PerfectLinear>(corr);
    const double tol = 1e-9 * (1.0 + std::abs(s.hi));
    jn.pairs.reserve(l.nodes.size());
    for (size_t j = 0; j < l.nodes.size(); ++j) {
        const double es = 1.0 + pl.a * (l.nodes[j] - 1.0);
        if (es < s.lo - tol || es > s.hi + tol)
            throw std::domain_error(
                "perfect linear correlation drives eps_s outside its support");
        jn.pairs.push_back({es, l.nodes[j], l.weights[j]});
    }
    return jn;
}

}  // namespace dualprice
