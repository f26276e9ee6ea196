#pragma once

#include <span>
#include <utility>
#include <vector>

#include "priomarket/cost_model.hpp"
#include "priomarket/market_model.hpp"

namespace priomarket {

struct CpMasses {
    double n = 0.0;  ///< total users
    double n1 = 0.0; ///< primary users
    double n2 = 0.0; ///< secondary users
};

/// User masses per CP, stored 0-based.
struct MassBreakdown {
    std::vector<CpMasses> cp;

    const CpMasses& at(int j) const { return cp.at(static_cast<std::size_t>(j - 1)); }
    int size() const { return static_cast<int>(cp.size()); }
    double total_primary() const;
    double total_secondary() const;
};

/// Piecewise-linear CDF of user positions on [0,1].
struct DistributionSpec {
    /// (position, cdf) pairs; first (0,0), last (1,1), positions strictly
    /// increasing, cdf nondecreasing.
    std::vector<std::pair<double, double>> knots;

    static DistributionSpec uniform() { return {{{0.0, 0.0}, {1.0, 1.0}}}; }

    void validate() const;
    /// F(x), clamped to 0 below the support and 1 above it.
    double cdf(double x) const;

    bool operator==(const DistributionSpec&) const = default;
};

/// Multi-purchasing equilibrium masses. Mid CPs serve 2*tau_j(d_j) users and
/// end CPs tau_j(d_j); primary shares follow the midpoint shifted by the
/// neighbors' delay gaps. Closed forms are evaluated regardless of regime
/// (best effort); a negative mass throws InfeasibleError with the CP index.
MassBreakdown masses_multi(const MarketParams& params, std::span<const CPProfile> cps,
                           const DelayProfile& delays);

/// masses_multi with every CP at d0.
MassBreakdown masses_default(const MarketParams& params, std::span<const CPProfile> cps);

/// Single-purchase (theta = 0) masses; n1 = n and n2 = 0. Neighbors' delays
/// and fees shift each CP's catchment.
MassBreakdown masses_single(const MarketParams& params, std::span<const CPProfile> cps,
                            const DelayProfile& delays);

/// Every user dual-purchases: mid CPs serve 2/(M-1), end CPs 1/(M-1), with
/// multi-purchase primary shares. Throws RegimeError unless the market
/// validates as AllDual (pass check_regime = false to skip).
MassBreakdown masses_all_dual(const MarketParams& params, std::span<const CPProfile> cps,
                              const DelayProfile& delays, bool check_regime = true);

/// Multi-purchase masses under a non-uniform user distribution: the CDF is
/// evaluated at the uniform model's cut points.
MassBreakdown masses_nonuniform(const MarketParams& params, std::span<const CPProfile> cps,
                                const DelayProfile& delays, const DistributionSpec& dist);

/// CP revenue: subscriptions, ad revenue (secondary users attenuated by
/// delta), minus the prioritization fee when z is set.
double cp_revenue(const MarketParams& params, const CPProfile& cp, const CpMasses& masses,
                  double price, bool z);

/// ISP profit: access fee plus margin over cost on every CP with z set.
/// `prices` is 0-based like the mass breakdown.
double isp_profit(const MarketParams& params, std::span<const CPProfile> cps,
                  const MassBreakdown& masses, std::span<const double> prices,
                  const DelayProfile& delays, const CostModel& cost);

struct PrioritizationDelta {
    double dn = 0.0;
    double dn1 = 0.0;
    double dn2 = 0.0;
    double dR = 0.0;
};

/// Per-CP change in multi-purchase masses and revenue between two delay
/// profiles. A CP whose delay is below d0 in a profile is taken to pay the
/// binding fee there, so its revenue equals what it would earn at d0 against
/// the same neighbors.
std::vector<PrioritizationDelta> prioritization_deltas(const MarketParams& params,
                                                       std::span<const CPProfile> cps,
                                                       const DelayProfile& pre,
                                                       const DelayProfile& post);

/// Revenue of every CP at a delay profile under the binding-fee convention of
/// prioritization_deltas.
std::vector<double> revenues_at_binding_fees(const MarketParams& params,
                                             std::span<const CPProfile> cps,
                                             const DelayProfile& delays);

} // namespace priomarket
