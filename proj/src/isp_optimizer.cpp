#include "priomarket/isp_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "priomarket/errors.hpp"
#include "priomarket/scalar_minimize.hpp"

namespace priomarket {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double revenue_slope(const MarketParams& params, const CPProfile& cp) {
    return (cp.S + 0.5 * (1.0 + params.delta) * params.lambda * cp.r) / params.t;
}

double user_mass(const MarketParams& params, const CPProfile& cp, double d) {
    const double tau = thresholds(params, cp, d).secondary;
    const bool end = (cp.index == 1 || cp.index == params.M);
    return end ? tau : 2.0 * tau;
}

using MassFn = std::function<MassBreakdown(const DelayProfile&)>;

// Joint program shared by the single-purchase, non-uniform and all-dual
// markets. A CP below d0 pays the fee that leaves its revenue at the level it
// would earn at d0 against the same neighbours.
class JointProgram {
public:
    JointProgram(const MarketParams& params, std::span<const CPProfile> cps,
                 const CostModel& cost, MassFn masses)
        : params_(params), cps_(cps), cost_(cost), masses_(std::move(masses)) {}

    struct Evaluation {
        double objective = kNegInf;
        MassBreakdown masses;
        std::vector<double> gains;
    };

    Evaluation evaluate(const DelayProfile& d) const {
        Evaluation ev;
        try {
            ev.masses = masses_(d);
        } catch (const InfeasibleError&) {
            return ev;
        }
        ev.gains.assign(cps_.size(), 0.0);
        double total = 0.0;
        for (int j = 1; j <= params_.M; ++j) {
            if (d.at(j) >= params_.d0) continue;
            const auto& m = ev.masses.at(j);
            if (m.n <= 0.0) return {};
            DelayProfile reset = d;
            reset.at(j) = params_.d0;
            MassBreakdown base;
            try {
                base = masses_(reset);
            } catch (const InfeasibleError&) {
                return {};
            }
            const auto& cp = cps_[static_cast<std::size_t>(j - 1)];
            const double gain = cp_revenue(params_, cp, m, 0.0, false) -
                                cp_revenue(params_, cp, base.at(j), 0.0, false);
            ev.gains[static_cast<std::size_t>(j - 1)] = gain;
            total += gain - params_.lambda * m.n * cost_.cost(d.at(j), params_.d0);
        }
        ev.objective = total;
        return ev;
    }

    double objective(const DelayProfile& d) const { return evaluate(d).objective; }

    // Cyclic coordinate ascent; returns the number of sweeps used.
    int ascend(DelayProfile& d, const std::vector<int>& free, const JointOptions& options) const {
        const double lo = kDelayFloor * params_.d0;
        double current = objective(d);
        int sweep = 0;
        while (sweep < options.max_sweeps) {
            ++sweep;
            double max_change = 0.0;
            for (int j : free) {
                DelayProfile trial = d;
                auto f = [&](double x) {
                    trial.at(j) = x;
                    return -objective(trial);
                };
                ScalarMinimum best;
                try {
                    best = bounded_minimize(f, lo, params_.d0, {128, 1e-10 * params_.d0});
                } catch (const InfeasibleError&) {
                    continue;
                }
                if (-best.value > current) {
                    max_change = std::max(max_change, std::abs(best.x - d.at(j)));
                    d.at(j) = best.x;
                    current = -best.value;
                }
            }
            if (max_change <= options.tolerance) break;
        }
        // Drop fast lanes that do not pay for themselves.
        for (int j : free) {
            if (d.at(j) >= params_.d0) continue;
            DelayProfile trial = d;
            trial.at(j) = params_.d0;
            const double v = objective(trial);
            if (v >= current) {
                d = trial;
                current = v;
            }
        }
        return sweep;
    }

    OfferSet outcome(const DelayProfile& d) const {
        const auto ev = evaluate(d);
        OfferSet out;
        out.delays = d;
        out.prices.assign(cps_.size(), 0.0);
        out.isp_profit = params_.F;
        for (int j = 1; j <= params_.M; ++j) {
            const auto i = static_cast<std::size_t>(j - 1);
            PrioritizationOffer offer;
            offer.cp = j;
            offer.d_star = d.at(j);
            const double n = ev.masses.at(j).n;
            if (d.at(j) < params_.d0 && n > 0.0) {
                offer.p_star = ev.gains[i] / (params_.lambda * n);
                offer.accepted = true;
                offer.isp_margin =
                    params_.lambda * n * (offer.p_star - cost_.cost(d.at(j), params_.d0));
                out.isp_profit += offer.isp_margin;
            }
            out.prices[i] = offer.p_star;
            out.offers.push_back(offer);
        }
        return out;
    }

    const MarketParams& params() const { return params_; }

private:
    MarketParams params_;
    std::span<const CPProfile> cps_;
    CostModel cost_;
    MassFn masses_;
};

JointOptimum solve_joint(const JointProgram& program, const JointOptions& options) {
    const auto& params = program.params();
    const int M = params.M;

    std::vector<DelayProfile> starts;
    starts.push_back(DelayProfile::uniform(params));
    starts.push_back(DelayProfile::uniform(M, 0.5 * params.d0));
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> draw(0.1 * params.d0, params.d0);
    for (int s = 0; s < options.random_starts; ++s) {
        DelayProfile d = DelayProfile::uniform(params);
        for (int j = 1; j <= M; ++j) d.at(j) = draw(rng);
        starts.push_back(d);
    }

    std::vector<std::vector<int>> groups;
    if (options.exclusive) {
        for (int j = 1; j <= M; ++j) groups.push_back({j});
    } else {
        std::vector<int> all(static_cast<std::size_t>(M));
        for (int j = 1; j <= M; ++j) all[static_cast<std::size_t>(j - 1)] = j;
        groups.push_back(all);
    }

    JointOptimum best;
    best.objective = kNegInf;
    DelayProfile best_d = DelayProfile::uniform(params);
    for (const auto& free : groups) {
        for (auto d : starts) {
            if (options.exclusive) {
                const double keep = d.at(free.front());
                d = DelayProfile::uniform(params);
                d.at(free.front()) = keep;
            }
            if (!std::isfinite(program.objective(d))) continue;
            const int sweeps = program.ascend(d, free, options);
            const double value = program.objective(d);
            if (value > best.objective) {
                best.objective = value;
                best.sweeps = sweeps;
                best_d = d;
            }
        }
    }
    if (!std::isfinite(best.objective))
        throw InfeasibleError("joint optimization: no feasible starting profile");
    best.outcome = program.outcome(best_d);
    return best;
}

} // namespace

double delay_objective(const MarketParams& params, const CPProfile& cp, const CostModel& cost,
                       double d) {
    const double tau = thresholds(params, cp, d).secondary;
    return revenue_slope(params, cp) * d + params.lambda * tau * cost.cost(d, params.d0);
}

double optimal_delay(const MarketParams& params, const CPProfile& cp, const CostModel& cost) {
    params.validate();
    cost.validate();
    const double lo = kDelayFloor * params.d0;
    auto f = [&](double d) { return delay_objective(params, cp, cost, d); };
    const auto best = bounded_minimize(f, lo, params.d0, {256, 1e-10 * params.d0});
    if (best.x < params.d0 && best.value < f(params.d0)) return best.x;
    return params.d0;
}

double analytic_optimal_delay(const MarketParams& params, const CPProfile& cp,
                              const CostModel& cost) {
    if (cost.family != CostModel::Family::Reciprocal)
        throw InputError("analytic_optimal_delay: only the reciprocal family has a closed form");
    const double lo = kDelayFloor * params.d0;
    if (cost.c <= 0.0) return lo;
    const double K = params.V - cp.S / params.theta;
    if (K <= 0.0) return params.d0;
    const double A = revenue_slope(params, cp);
    const double root =
        std::sqrt(K / (A * params.t / (params.lambda * cost.c) + 1.0 / params.d0));
    return std::clamp(root, lo, params.d0);
}

double prioritization_price(const MarketParams& params, const CPProfile& cp, double d_star) {
    if (!(d_star > 0.0) || d_star > params.d0)
        throw InputError("prioritization_price: d_star must lie in (0, d0]");
    if (d_star == params.d0) return 0.0;
    const double tau = thresholds(params, cp, d_star).secondary;
    if (tau <= 0.0)
        throw InfeasibleError("prioritization_price: nonpositive secondary threshold", cp.index);
    return revenue_slope(params, cp) / params.lambda * (params.d0 - d_star) / tau;
}

Affordability affordability_check(const MarketParams& params, const CPProfile& cp,
                                  const CostModel& cost) {
    Affordability out;
    out.slope = std::abs(cost.derivative(params.d0, params.d0));
    const double den = params.lambda * (params.V - params.d0 - cp.S / params.theta);
    const double num = revenue_slope(params, cp) * params.t;
    out.bound = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    out.margin = out.bound - out.slope;
    out.affordable = out.slope < out.bound;
    return out;
}

std::vector<CPProfile> OfferSet::contracted(std::span<const CPProfile> cps) const {
    std::vector<CPProfile> out(cps.begin(), cps.end());
    for (const auto& offer : offers) {
        if (offer.accepted) out.at(static_cast<std::size_t>(offer.cp - 1)).z = true;
    }
    return out;
}

OfferSet offer_discriminatory(const MarketParams& params, std::span<const CPProfile> cps,
                              const CostModel& cost, bool exclusive) {
    params.validate();
    validate_cps(params, cps);
    cost.validate();

    OfferSet out;
    out.delays = DelayProfile::uniform(params);
    out.prices.assign(cps.size(), 0.0);
    for (const auto& cp : cps) {
        PrioritizationOffer offer;
        offer.cp = cp.index;
        offer.d_star = optimal_delay(params, cp, cost);
        if (offer.d_star < params.d0) {
            offer.p_star = prioritization_price(params, cp, offer.d_star);
            offer.accepted = true;
            offer.isp_margin = params.lambda * user_mass(params, cp, offer.d_star) *
                               (offer.p_star - cost.cost(offer.d_star, params.d0));
        }
        out.offers.push_back(offer);
    }

    if (exclusive) {
        int keep = 0;
        double best = 0.0;
        for (const auto& offer : out.offers) {
            if (offer.accepted && offer.isp_margin > best) {
                best = offer.isp_margin;
                keep = offer.cp;
            }
        }
        for (auto& offer : out.offers) {
            if (offer.cp != keep) offer = {offer.cp, params.d0, 0.0, false, 0.0};
        }
    }

    out.isp_profit = params.F;
    for (const auto& offer : out.offers) {
        if (!offer.accepted) continue;
        out.delays.at(offer.cp) = offer.d_star;
        out.prices[static_cast<std::size_t>(offer.cp - 1)] = offer.p_star;
        out.isp_profit += offer.isp_margin;
    }
    return out;
}

JointOptimum optimize_single_purchase(const MarketParams& params,
                                      std::span<const CPProfile> cps, const CostModel& cost,
                                      const JointOptions& options) {
    params.validate();
    validate_cps(params, cps);
    cost.validate();
    JointProgram program(params, cps, cost, [&](const DelayProfile& d) {
        return masses_single(params, cps, d);
    });
    return solve_joint(program, options);
}

JointOptimum optimize_nonuniform(const MarketParams& params, std::span<const CPProfile> cps,
                                 const CostModel& cost, const DistributionSpec& dist,
                                 const JointOptions& options) {
    params.validate();
    validate_cps(params, cps);
    cost.validate();
    dist.validate();
    JointProgram program(params, cps, cost, [&](const DelayProfile& d) {
        return masses_nonuniform(params, cps, d, dist);
    });
    return solve_joint(program, options);
}

JointOptimum optimize_all_dual(const MarketParams& params, std::span<const CPProfile> cps,
                               const CostModel& cost, const JointOptions& options) {
    params.validate();
    validate_cps(params, cps);
    cost.validate();
    const auto report = validate_assumptions(params, cps);
    if (report.regime != Regime::AllDual) {
        throw RegimeError("optimize_all_dual: market validates as " + to_string(report.regime) +
                          ", not AllDual");
    }
    JointProgram program(params, cps, cost, [&](const DelayProfile& d) {
        return masses_all_dual(params, cps, d, false);
    });
    return solve_joint(program, options);
}

UniformMenuResult uniform_menu_optimize(const MarketParams& params,
                                        std::span<const CPProfile> cps, const CostModel& cost,
                                        const MenuGrid& grid) {
    params.validate();
    validate_cps(params, cps);
    cost.validate();
    if (grid.delay_points < 1 || grid.price_points < 1)
        throw InputError("uniform_menu_optimize: empty grid");

    double p_max = 0.0;
    if (grid.p_max) {
        p_max = *grid.p_max;
        if (!(p_max >= 0.0)) throw InputError("uniform_menu_optimize: p_max must be >= 0");
    } else {
        for (const auto& offer : offer_discriminatory(params, cps, cost).offers)
            p_max = std::max(p_max, offer.p_star);
        p_max *= 2.0;
    }

    const int M = params.M;
    const auto base = masses_default(params, cps);
    std::vector<double> r0(static_cast<std::size_t>(M));
    for (int j = 1; j <= M; ++j)
        r0[static_cast<std::size_t>(j - 1)] =
            cp_revenue(params, cps[static_cast<std::size_t>(j - 1)], base.at(j), 0.0, false);

    // Per delay: each CP's mass and fee-free revenue when it alone takes the lane.
    const int D = grid.delay_points;
    std::vector<double> delays(static_cast<std::size_t>(D));
    std::vector<double> costs(static_cast<std::size_t>(D));
    std::vector<std::vector<double>> n(static_cast<std::size_t>(D));
    std::vector<std::vector<double>> gross(static_cast<std::size_t>(D));
    for (int i = 0; i < D; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        delays[ui] = params.d0 * (i + 1) / D;
        costs[ui] = cost.cost(delays[ui], params.d0);
        n[ui].assign(static_cast<std::size_t>(M), 0.0);
        gross[ui].assign(static_cast<std::size_t>(M), kNegInf);
        for (int j = 1; j <= M; ++j) {
            DelayProfile d = DelayProfile::uniform(params);
            d.at(j) = delays[ui];
            try {
                const auto m = masses_multi(params, cps, d);
                n[ui][static_cast<std::size_t>(j - 1)] = m.at(j).n;
                gross[ui][static_cast<std::size_t>(j - 1)] =
                    cp_revenue(params, cps[static_cast<std::size_t>(j - 1)], m.at(j), 0.0, false);
            } catch (const InfeasibleError&) {
            }
        }
    }

    UniformMenuResult best;
    best.d = params.d0;
    best.p_max = p_max;
    best.delay_points = D;
    best.price_points = grid.price_points;
    const int P = grid.price_points;
    for (int k = 0; k < P; ++k) {
        const double p = (P == 1) ? p_max : p_max * k / (P - 1);
        for (int i = 0; i < D; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            double profit = 0.0;
            std::vector<int> takers;
            for (int j = 1; j <= M; ++j) {
                const auto uj = static_cast<std::size_t>(j - 1);
                const double nj = n[ui][uj];
                if (!(nj > 0.0)) continue;
                const double with_fee = gross[ui][uj] - params.lambda * nj * p;
                if (with_fee >= r0[uj] - 1e-12 * std::abs(r0[uj])) {
                    takers.push_back(j);
                    profit += params.lambda * nj * (p - costs[ui]);
                }
            }
            if (profit > best.profit) {
                best.profit = profit;
                best.d = delays[ui];
                best.p = p;
                best.accepted = std::move(takers);
            }
        }
    }
    return best;
}

CapacityPlan capacity_reallocation(const MarketParams& params, std::span<const CPProfile> cps,
                                   int target, double d_target,
                                   const CapacityOptions& options) {
    params.validate();
    validate_cps(params, cps);
    const int M = params.M;
    if (target < 1 || target > M)
        throw InputError("capacity_reallocation: target index out of range");
    if (!(d_target > 0.0) || d_target > params.d0)
        throw InputError("capacity_reallocation: d_target must lie in (0, d0]");
    if (!(options.damping > 0.0 && options.damping <= 1.0))
        throw InputError("capacity_reallocation: damping must lie in (0, 1]");

    auto mass = [&](int j, double d) {
        return user_mass(params, cps[static_cast<std::size_t>(j - 1)], d);
    };

    std::vector<double> baseline(static_cast<std::size_t>(M));
    double baseline_total = 0.0;
    for (int j = 1; j <= M; ++j) {
        baseline[static_cast<std::size_t>(j - 1)] = mass(j, params.d0) / params.d0;
        baseline_total += baseline[static_cast<std::size_t>(j - 1)];
    }

    CapacityPlan plan;
    plan.total = options.total_capacity.value_or(baseline_total);
    if (!(plan.total > 0.0)) throw InfeasibleError("capacity_reallocation: total capacity <= 0");
    plan.allocation.assign(static_cast<std::size_t>(M), 0.0);
    plan.delays = DelayProfile::uniform(params);
    plan.delays.allow_throttling = true;
    plan.residuals.assign(static_cast<std::size_t>(M), 0.0);

    const auto ti = static_cast<std::size_t>(target - 1);
    const double n_target = mass(target, d_target);
    if (!(n_target > 0.0))
        throw InfeasibleError("capacity_reallocation: target has no users at d_target", target);
    plan.allocation[ti] = n_target / d_target;
    plan.delays.at(target) = d_target;

    const double rest = plan.total - plan.allocation[ti];
    if (!(rest > 0.0))
        throw InfeasibleError("capacity_reallocation: target absorbs all capacity", target);
    const double rest_baseline = baseline_total - baseline[ti];
    int last = (target == M) ? M - 1 : M;
    double assigned = plan.allocation[ti];
    for (int j = 1; j <= M; ++j) {
        if (j == target || j == last) continue;
        const auto uj = static_cast<std::size_t>(j - 1);
        plan.allocation[uj] = rest * baseline[uj] / rest_baseline;
        assigned += plan.allocation[uj];
    }
    plan.allocation[static_cast<std::size_t>(last - 1)] = plan.total - assigned;

    for (int j = 1; j <= M; ++j) {
        if (j == target) continue;
        const auto uj = static_cast<std::size_t>(j - 1);
        const double phi = plan.allocation[uj];
        if (!(phi > 0.0)) throw InfeasibleError("capacity_reallocation: nonpositive allocation", j);
        const auto& cp = cps[uj];
        const double ceiling = params.V - cp.S / params.theta;
        double d = params.d0;
        double residual = std::abs(d - mass(j, d) / phi);
        int it = 0;
        while (residual > options.tolerance) {
            if (++it > options.max_iterations) {
                throw InfeasibleError("capacity_reallocation: no convergence for CP " +
                                          std::to_string(j) + " (residual " +
                                          std::to_string(residual) + ")",
                                      j);
            }
            d = (1.0 - options.damping) * d + options.damping * mass(j, d) / phi;
            if (!(d > 0.0) || d >= ceiling)
                throw InfeasibleError("capacity_reallocation: delay left the feasible range", j);
            residual = std::abs(d - mass(j, d) / phi);
        }
        plan.delays.at(j) = d;
        plan.residuals[uj] = residual;
        plan.iterations = std::max(plan.iterations, it);
    }
    plan.residuals[ti] = std::abs(d_target - mass(target, d_target) / plan.allocation[ti]);
    return plan;
}

} // namespace priomarket
