#include "priomarket/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace priomarket {

namespace {

// Masses this far below zero are rounding noise, not a formula breakdown.
constexpr double kNegativeMassSlack = 1e-12;

void check_nonnegative(const MassBreakdown& masses) {
    for (int j = 1; j <= masses.size(); ++j) {
        const auto& m = masses.at(j);
        if (m.n < -kNegativeMassSlack || m.n1 < -kNegativeMassSlack ||
            m.n2 < -kNegativeMassSlack) {
            throw InfeasibleError("negative user mass at CP " + std::to_string(j) + " (n=" +
                                      std::to_string(m.n) + ", n1=" + std::to_string(m.n1) +
                                      ", n2=" + std::to_string(m.n2) + ")",
                                  j);
        }
    }
}

void check_inputs(const MarketParams& params, std::span<const CPProfile> cps,
                  const DelayProfile& delays) {
    params.validate();
    validate_cps(params, cps);
    validate_delays(params, delays);
}

double secondary_threshold(const MarketParams& params, const CPProfile& cp, double d) {
    return thresholds(params, cp, d).secondary;
}

// Primary-user mass with the uniform distribution. End CPs use their single
// neighbor: CP 1 looks right (j+1), CP M looks left (j-1).
double primary_mass(const MarketParams& params, const DelayProfile& delays, int j) {
    const int M = params.M;
    const double t = params.t;
    if (j == 1 || j == M) {
        const int neighbor = (j == M) ? j - 1 : j + 1;
        return 0.5 * (params.spacing() + (delays.at(neighbor) - delays.at(j)) / t);
    }
    return params.spacing() +
           (delays.at(j + 1) + delays.at(j - 1) - 2.0 * delays.at(j)) / (2.0 * t);
}

} // namespace

double MassBreakdown::total_primary() const {
    double sum = 0.0;
    for (const auto& m : cp) sum += m.n1;
    return sum;
}

double MassBreakdown::total_secondary() const {
    double sum = 0.0;
    for (const auto& m : cp) sum += m.n2;
    return sum;
}

void DistributionSpec::validate() const {
    if (knots.size() < 2) throw InputError("distribution.knots needs at least two knots");
    if (knots.front() != std::pair{0.0, 0.0})
        throw InputError("distribution.knots must start at (0, 0)");
    if (knots.back() != std::pair{1.0, 1.0})
        throw InputError("distribution.knots must end at (1, 1)");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].first > knots[i - 1].first))
            throw InputError("distribution.knots positions must be strictly increasing");
        if (knots[i].second < knots[i - 1].second)
            throw InputError("distribution.knots cdf values must be nondecreasing");
    }
}

double DistributionSpec::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const auto hi = std::upper_bound(knots.begin(), knots.end(), x,
                                     [](double v, const auto& knot) { return v < knot.first; });
    const auto lo = hi - 1;
    const double w = (x - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

MassBreakdown masses_multi(const MarketParams& params, std::span<const CPProfile> cps,
                           const DelayProfile& delays) {
    check_inputs(params, cps, delays);
    MassBreakdown out;
    out.cp.resize(static_cast<std::size_t>(params.M));
    for (int j = 1; j <= params.M; ++j) {
        const bool end = (j == 1 || j == params.M);
        const double tau = secondary_threshold(params, cps[static_cast<std::size_t>(j - 1)],
                                               delays.at(j));
        auto& m = out.cp[static_cast<std::size_t>(j - 1)];
        m.n = end ? tau : 2.0 * tau;
        m.n1 = primary_mass(params, delays, j);
        m.n2 = m.n - m.n1;
    }
    check_nonnegative(out);
    return out;
}

MassBreakdown masses_default(const MarketParams& params, std::span<const CPProfile> cps) {
    return masses_multi(params, cps, DelayProfile::uniform(params));
}

MassBreakdown masses_single(const MarketParams& params, std::span<const CPProfile> cps,
                            const DelayProfile& delays) {
    check_inputs(params, cps, delays);
    const int M = params.M;
    const double t = params.t;
    auto S = [&](int j) { return cps[static_cast<std::size_t>(j - 1)].S; };

    MassBreakdown out;
    out.cp.resize(static_cast<std::size_t>(M));
    for (int j = 1; j <= M; ++j) {
        double n;
        if (j == 1 || j == M) {
            const int k = (j == M) ? j - 1 : j + 1;
            n = 0.5 * (params.spacing() + (delays.at(k) - delays.at(j)) / t + (S(k) - S(j)) / t);
        } else {
            n = params.spacing() +
                (delays.at(j + 1) + delays.at(j - 1) - 2.0 * delays.at(j)) / (2.0 * t) +
                (S(j + 1) + S(j - 1) - 2.0 * S(j)) / (2.0 * t);
        }
        out.cp[static_cast<std::size_t>(j - 1)] = {n, n, 0.0};
    }
    check_nonnegative(out);
    return out;
}

MassBreakdown masses_all_dual(const MarketParams& params, std::span<const CPProfile> cps,
                              const DelayProfile& delays, bool check_regime) {
    check_inputs(params, cps, delays);
    if (check_regime) {
        const auto report = validate_assumptions(params, cps);
        if (report.regime != Regime::AllDual) {
            throw RegimeError("masses_all_dual: market validates as " + to_string(report.regime) +
                              ", not AllDual");
        }
    }
    MassBreakdown out;
    out.cp.resize(static_cast<std::size_t>(params.M));
    for (int j = 1; j <= params.M; ++j) {
        const bool end = (j == 1 || j == params.M);
        auto& m = out.cp[static_cast<std::size_t>(j - 1)];
        m.n = end ? params.spacing() : 2.0 * params.spacing();
        m.n1 = primary_mass(params, delays, j);
        m.n2 = m.n - m.n1;
    }
    check_nonnegative(out);
    return out;
}

MassBreakdown masses_nonuniform(const MarketParams& params, std::span<const CPProfile> cps,
                                const DelayProfile& delays, const DistributionSpec& dist) {
    check_inputs(params, cps, delays);
    dist.validate();
    const int M = params.M;
    const double t = params.t;

    // Cut point between the primary catchments of CP j and CP j+1.
    auto cut = [&](int j) {
        return (j - 0.5) / (M - 1) + (delays.at(j + 1) - delays.at(j)) / (2.0 * t);
    };

    MassBreakdown out;
    out.cp.resize(static_cast<std::size_t>(M));
    for (int j = 1; j <= M; ++j) {
        const double x = cp_position(j, M);
        const double tau = secondary_threshold(params, cps[static_cast<std::size_t>(j - 1)],
                                               delays.at(j));
        auto& m = out.cp[static_cast<std::size_t>(j - 1)];
        m.n = dist.cdf(x + tau) - dist.cdf(x - tau);
        const double right = (j == M) ? 1.0 : dist.cdf(cut(j));
        const double left = (j == 1) ? 0.0 : dist.cdf(cut(j - 1));
        m.n1 = right - left;
        m.n2 = m.n - m.n1;
    }
    check_nonnegative(out);
    return out;
}

double cp_revenue(const MarketParams& params, const CPProfile& cp, const CpMasses& masses,
                  double price, bool z) {
    const double fee = z ? masses.n * price : 0.0;
    return masses.n * cp.S +
           params.lambda * (cp.r * (masses.n1 + params.delta * masses.n2) - fee);
}

double isp_profit(const MarketParams& params, std::span<const CPProfile> cps,
                  const MassBreakdown& masses, std::span<const double> prices,
                  const DelayProfile& delays, const CostModel& cost) {
    if (prices.size() != cps.size() || masses.cp.size() != cps.size())
        throw InputError("isp_profit: prices, masses and cps must have the same length");
    double margin = 0.0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (!cps[i].z) continue;
        const int j = static_cast<int>(i) + 1;
        margin += masses.cp[i].n * (prices[i] - cost.cost(delays.at(j), params.d0));
    }
    return params.F + params.lambda * margin;
}

std::vector<double> revenues_at_binding_fees(const MarketParams& params,
                                             std::span<const CPProfile> cps,
                                             const DelayProfile& delays) {
    const auto masses = masses_multi(params, cps, delays);
    std::vector<double> out(cps.size());
    for (int j = 1; j <= params.M; ++j) {
        const auto& cp = cps[static_cast<std::size_t>(j - 1)];
        if (delays.at(j) < params.d0) {
            // The binding fee leaves the CP exactly at its d0 revenue.
            DelayProfile reset = delays;
            reset.at(j) = params.d0;
            const auto at_default = masses_multi(params, cps, reset);
            out[static_cast<std::size_t>(j - 1)] = cp_revenue(params, cp, at_default.at(j), 0.0, false);
        } else {
            out[static_cast<std::size_t>(j - 1)] = cp_revenue(params, cp, masses.at(j), 0.0, false);
        }
    }
    return out;
}

std::vector<PrioritizationDelta> prioritization_deltas(const MarketParams& params,
                                                       std::span<const CPProfile> cps,
                                                       const DelayProfile& pre,
                                                       const DelayProfile& post) {
    const auto m_pre = masses_multi(params, cps, pre);
    const auto m_post = masses_multi(params, cps, post);
    const auto r_pre = revenues_at_binding_fees(params, cps, pre);
    const auto r_post = revenues_at_binding_fees(params, cps, post);
    std::vector<PrioritizationDelta> out(cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i) {
        out[i] = {m_post.cp[i].n - m_pre.cp[i].n, m_post.cp[i].n1 - m_pre.cp[i].n1,
                  m_post.cp[i].n2 - m_pre.cp[i].n2, r_post[i] - r_pre[i]};
    }
    return out;
}

} // namespace priomarket
