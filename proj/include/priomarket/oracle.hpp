#pragma once

#include <span>
#include <vector>

#include "priomarket/equilibrium.hpp"
#include "priomarket/market_model.hpp"

namespace priomarket {

/// Outcome of letting N grid users pick their best bundle over every CP.
struct Simulation {
    MassBreakdown masses;           ///< each user carries mass 1/N
    double welfare = 0.0;           ///< trapezoidal, access fee excluded
    int opt_outs = 0;
    int adjacency_violations = 0;
    int N = 0;
};

struct OracleReport {
    MassBreakdown empirical;
    std::vector<CpMasses> errors;   ///< |analytic - empirical| per CP, 0-based
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    int adjacency_violations = 0;
    int N = 0;
};

/// Default mass tolerance for an N-user grid: max(1e-3, 10/N).
double default_oracle_tolerance(int N);

/// Users at x_i = i/(N-1), i = 0..N-1. N must be odd and >= 10001.
Simulation simulate_users(const MarketParams& params, std::span<const CPProfile> cps,
                          const DelayProfile& delays, int N = 100001);

/// Per-CP absolute mass errors; pass iff every error <= tol (tol <= 0 selects
/// the default for N).
OracleReport compare_masses(const MassBreakdown& analytic, const Simulation& empirical,
                            double tol = 0.0);

/// Grid users whose best bundle uses a CP farther than one spacing away.
int adjacency_check(const MarketParams& params, std::span<const CPProfile> cps,
                    const DelayProfile& delays, int N = 100001);

/// Closed-form multi-purchase masses against the simulated market.
OracleReport run_oracle(const MarketParams& params, std::span<const CPProfile> cps,
                        const DelayProfile& delays, int N = 100001, double tol = 0.0);

} // namespace priomarket
