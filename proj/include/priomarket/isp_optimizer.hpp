#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "priomarket/cost_model.hpp"
#include "priomarket/equilibrium.hpp"
#include "priomarket/market_model.hpp"

namespace priomarket {

struct PrioritizationOffer {
    int cp = 0;           ///< 1-based CP index
    double d_star = 0.0;  ///< offered fast-lane delay
    double p_star = 0.0;  ///< per-user, per-traffic-unit fee
    bool accepted = false;
    double isp_margin = 0.0; ///< lambda * n * (p - C(d)) earned from this CP
};

/// Lower end of the search interval for delays, as a fraction of d0.
inline constexpr double kDelayFloor = 1e-6;

/// Fast-lane delay minimizing (S + (1+delta)/2 lambda r)/t * d + lambda tau(d) C(d)
/// over (0, d0]. Returns exactly d0 when no interior delay strictly improves
/// on it. Requires theta > 0.
double optimal_delay(const MarketParams& params, const CPProfile& cp, const CostModel& cost);

/// Stationary point of the same objective for the reciprocal family, clamped
/// to [kDelayFloor*d0, d0].
double analytic_optimal_delay(const MarketParams& params, const CPProfile& cp,
                              const CostModel& cost);

/// The objective minimized by optimal_delay, exposed for property checks.
double delay_objective(const MarketParams& params, const CPProfile& cp, const CostModel& cost,
                       double d);

/// Fee that leaves the CP indifferent between the fast lane at d_star and the
/// default lane. 0 at d_star = d0; throws InfeasibleError when the CP's
/// secondary threshold at d_star is not positive.
double prioritization_price(const MarketParams& params, const CPProfile& cp, double d_star);

struct Affordability {
    bool affordable = false;
    double bound = 0.0;  ///< largest |C'(d0)| the CP can fund
    double slope = 0.0;  ///< |C'(d0)|
    double margin = 0.0; ///< bound - slope
};

Affordability affordability_check(const MarketParams& params, const CPProfile& cp,
                                  const CostModel& cost);

/// Outcome of an ISP offer policy: the delay profile and fees in force.
struct OfferSet {
    std::vector<PrioritizationOffer> offers; ///< one per CP, 0-based
    DelayProfile delays;
    std::vector<double> prices;              ///< 0 for CPs without a contract
    double isp_profit = 0.0;

    /// CP list with z set on every accepted offer.
    std::vector<CPProfile> contracted(std::span<const CPProfile> cps) const;
};

/// CP-specific offers in the multi-purchase market. The per-CP program is
/// separable, so every affordable CP gets its own (d*, p*); with `exclusive`
/// only the offer with the largest ISP margin is kept.
OfferSet offer_discriminatory(const MarketParams& params, std::span<const CPProfile> cps,
                              const CostModel& cost, bool exclusive = false);

struct JointOptions {
    int random_starts = 8;
    std::uint64_t seed = 1;
    double tolerance = 1e-9;  ///< max coordinate change at convergence
    int max_sweeps = 500;
    bool exclusive = false;   ///< optimize one CP at a time, keep the best
};

struct JointOptimum {
    OfferSet outcome;
    double objective = 0.0; ///< ISP margin summed over CPs
    int sweeps = 0;         ///< coordinate sweeps used by the winning start
};

/// Joint delay program of the single-purchase market: maximizes
/// sum_j [ gain_j(d) - lambda n_j(d) C(d_j) ] by cyclic coordinate descent
/// from all-d0, all-midpoint and random starts. Fees bind each CP's
/// acceptance constraint given its neighbors' delays.
JointOptimum optimize_single_purchase(const MarketParams& params,
                                      std::span<const CPProfile> cps, const CostModel& cost,
                                      const JointOptions& options = {});

/// Same program for a non-uniform user distribution in the multi-purchase
/// market.
JointOptimum optimize_nonuniform(const MarketParams& params, std::span<const CPProfile> cps,
                                 const CostModel& cost, const DistributionSpec& dist,
                                 const JointOptions& options = {});

/// Same program when every user dual-purchases.
JointOptimum optimize_all_dual(const MarketParams& params, std::span<const CPProfile> cps,
                               const CostModel& cost, const JointOptions& options = {});

struct MenuGrid {
    int delay_points = 128;
    int price_points = 512;
    /// Largest menu price; defaults to twice the largest discriminatory price.
    std::optional<double> p_max;
};

struct UniformMenuResult {
    double d = 0.0;
    double p = 0.0;
    std::vector<int> accepted; ///< 1-based CP indices taking the menu
    double profit = 0.0;       ///< ISP margin, access fee excluded
    double p_max = 0.0;
    int delay_points = 0;
    int price_points = 0;
};

/// One (d, p) pair offered to every CP. A CP accepts when its revenue with
/// the fast lane and fee is at least its default revenue. Searches
/// d in {d0*i/D}, p in {p_max*k/(P-1)}; ties go to the lower p, then the
/// lower d. With no profitable pair the result is (d0, 0, {}, 0).
UniformMenuResult uniform_menu_optimize(const MarketParams& params,
                                        std::span<const CPProfile> cps, const CostModel& cost,
                                        const MenuGrid& grid = {});

enum class CapacityPolicy { Proportional };

struct CapacityOptions {
    CapacityPolicy policy = CapacityPolicy::Proportional;
    /// Overrides the baseline total capacity sum_j n_j(d0)/d0.
    std::optional<double> total_capacity;
    double damping = 0.5;
    double tolerance = 1e-10;
    int max_iterations = 10000;
};

struct CapacityPlan {
    double total = 0.0;
    std::vector<double> allocation; ///< 0-based
    DelayProfile delays;            ///< allow_throttling set
    std::vector<double> residuals;  ///< |d_j - n_j(d_j)/Phi_j|
    int iterations = 0;             ///< largest iteration count over CPs
};

/// Prioritizes `target` to d_target by moving capacity away from the other
/// CPs under reservation delays d_j = n_j(d_j)/Phi_j.
CapacityPlan capacity_reallocation(const MarketParams& params, std::span<const CPProfile> cps,
                                   int target, double d_target,
                                   const CapacityOptions& options = {});

} // namespace priomarket
