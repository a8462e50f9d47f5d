#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dualprice/dp.hpp"
#include "dualprice/model.hpp"

namespace dualprice {

/// splitmix64-based stream; every path gets its own, derived from
/// (seed, path), so paths are reproducible and order-independent.
class PathRng {
public:
    PathRng(uint64_t seed, uint64_t path);

    uint64_t next_u64();
    double next_unit();  // uniform in (0, 1)
    /// N(mu, sigma^2) truncated to (lo, hi) by rejection.
    double truncated_normal(double mu, double sigma, double lo, double hi);

private:
    uint64_t state_;
};

/// One period's realized noise, drawn from the continuous laws.
struct NoiseDraw {
    double eps_s = 1.0;
    double omega_s = 0.0;
    double eps_l = 1.0;
    double omega_l = 0.0;
};

NoiseDraw draw_noise(const ProblemSpec& spec, int t, PathRng& rng);

struct SeasonState {
    int t = 1;          // next period to play
    double I = 0.0;     // net inventory; negative = backlog
    double pending_l = 0.0;  // long-distance demand awaiting processing
    double cash = 0.0;  // discounted cumulative profit
};

enum class Accounting {
    Expectation,  // book d * p(d) per period
    Realized,     // book D * p(d) per period
};

struct StepRecord {
    int t = 0;
    double I_begin = 0.0;
    double d_s = 0.0, d_l = 0.0;
    double D_s = 0.0, D_l = 0.0;
    double revenue = 0.0, cost = 0.0;
    double backlog_s_new = 0.0, backlog_l_new = 0.0;
    double I_end = 0.0;
    double cash = 0.0;
};

using PolicyFn = std::function<std::pair<double, double>(int t, double I)>;

/// Plays one period of the event sequence: demands realize from the given
/// draw, the holding/backorder cost is charged on I + q_t - D_s (before the
/// long-distance demand is processed), and the period closes with
/// I <- I + q_t - D_s - D_l. New backlog is counted against the carried
/// (pre-replenishment) pool, split on-site first.
SeasonState step(const SeasonState& state, int t, const PolicyFn& policy,
                 const ProblemSpec& spec, const NoiseDraw& draw,
                 Accounting mode, StepRecord* rec = nullptr);

struct SimStats {
    double mean_profit = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    double terminal_backlog_rate = 0.0;
    bool grid_escape = false;  // some path left the interpolation region
};

struct SimOptions {
    long n_paths = 10000;
    uint64_t seed = 1;
    Accounting mode = Accounting::Expectation;
    bool record_traces = false;  // fills traces below (use few paths)
};

struct PathTrace {
    long path = 0;
    std::vector<StepRecord> steps;
};

/// Monte Carlo replay of the solved policy from I0. The terminal settlement
/// adds alpha^T * c_e * min{0, I_{T+1}} per path. Deterministic given the
/// seed.
SimStats simulate(const ProblemSpec& spec, const Solution& sol, double I0,
                  const SimOptions& opt,
                  std::vector<PathTrace>* traces = nullptr);

}  // namespace dualprice
