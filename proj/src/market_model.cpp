#include "priomarket/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace priomarket {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative slack below which two bundle utilities count as tied.
constexpr double kTieTolerance = 1e-10;

void require(bool ok, const std::string& what) {
    if (!ok) throw InputError(what);
}

bool strictly_better(double candidate, double incumbent) {
    if (incumbent == -kInf) return candidate > incumbent;
    return candidate > incumbent + kTieTolerance * std::max(1.0, std::abs(incumbent));
}

// Ratio bound num/den with the convention for a non-positive denominator:
// +inf when num > 0, NaN (degenerate) otherwise.
double ratio_bound(double num, double den) {
    if (den > 0.0) return num / den;
    return num > 0.0 ? kInf : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

void MarketParams::validate() const {
    require(std::isfinite(V) && V > 0.0, "market.V must be > 0");
    require(std::isfinite(t) && t > 0.0, "market.t must be > 0");
    require(theta >= 0.0 && theta < 1.0, "market.theta must lie in [0, 1)");
    require(delta >= 0.0 && delta <= 1.0, "market.delta must lie in [0, 1]");
    require(std::isfinite(lambda) && lambda > 0.0, "market.lambda must be > 0");
    require(std::isfinite(F) && F >= 0.0, "market.F must be >= 0");
    require(M >= 3, "market.M must be >= 3");
    require(std::isfinite(d0) && d0 > 0.0, "market.d0 must be > 0");
}

void validate_cps(const MarketParams& params, std::span<const CPProfile> cps) {
    require(static_cast<int>(cps.size()) == params.M,
            "cps: expected " + std::to_string(params.M) + " entries, got " +
                std::to_string(cps.size()));
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const auto& cp = cps[i];
        const std::string tag = "cps[" + std::to_string(i) + "]";
        require(cp.index == static_cast<int>(i) + 1, tag + ".index must be " + std::to_string(i + 1));
        require(std::isfinite(cp.S) && cp.S >= 0.0, tag + ".S must be >= 0");
        require(std::isfinite(cp.r) && cp.r >= 0.0, tag + ".r must be >= 0");
    }
}

std::vector<CPProfile> uniform_cps(const MarketParams& params, double S, double r) {
    std::vector<CPProfile> cps;
    cps.reserve(static_cast<std::size_t>(params.M));
    for (int j = 1; j <= params.M; ++j) cps.push_back({j, S, r, false});
    return cps;
}

DelayProfile DelayProfile::uniform(const MarketParams& params) {
    return uniform(params.M, params.d0);
}

DelayProfile DelayProfile::uniform(int M, double value) {
    return DelayProfile{std::vector<double>(static_cast<std::size_t>(M), value), false};
}

void validate_delays(const MarketParams& params, const DelayProfile& delays) {
    require(delays.size() == params.M, "delays: expected " + std::to_string(params.M) +
                                           " entries, got " + std::to_string(delays.size()));
    for (int j = 1; j <= params.M; ++j) {
        const double d = delays.at(j);
        require(std::isfinite(d) && d > 0.0, "delays: d_" + std::to_string(j) + " must be > 0");
        if (!delays.allow_throttling) {
            require(d <= params.d0 * (1.0 + 1e-12),
                    "delays: d_" + std::to_string(j) +
                        " exceeds d0; throttled profiles need allow_throttling");
        }
    }
}

Bundle Bundle::dual(int primary, int secondary) {
    require(primary != secondary, "Bundle: primary and secondary CP must differ");
    return Bundle(Kind::Dual, primary, secondary);
}

std::string Bundle::to_string() const {
    switch (kind_) {
    case Kind::OptOut: return "OptOut";
    case Kind::Single: return "Single(" + std::to_string(primary_) + ")";
    case Kind::Dual:
        return "Dual(" + std::to_string(primary_) + "," + std::to_string(secondary_) + ")";
    }
    return "?";
}

std::string to_string(Regime regime) {
    switch (regime) {
    case Regime::FullAssumption1: return "FullAssumption1";
    case Regime::NoDual: return "NoDual";
    case Regime::AllDual: return "AllDual";
    case Regime::PartialCoverage: return "PartialCoverage";
    case Regime::Degenerate: return "Degenerate";
    }
    return "?";
}

double cp_position(int j, int M) {
    require(M >= 2, "cp_position: M must be >= 2");
    require(j >= 1 && j <= M, "cp_position: index " + std::to_string(j) + " outside 1.." +
                                  std::to_string(M));
    return static_cast<double>(j - 1) / static_cast<double>(M - 1);
}

Thresholds thresholds(const MarketParams& params, const CPProfile& cp, double d) {
    require(params.t > 0.0, "thresholds: t must be > 0");
    if (params.theta <= 0.0) {
        throw RegimeError("thresholds: theta = 0 has no secondary threshold; use the "
                          "single-purchase path");
    }
    return {(params.V - d - cp.S) / params.t, (params.V - d - cp.S / params.theta) / params.t};
}

double bundle_utility(double x, const Bundle& bundle, const MarketParams& params,
                      std::span<const CPProfile> cps, const DelayProfile& delays) {
    require(x >= 0.0 && x <= 1.0, "bundle_utility: x must lie in [0, 1]");
    if (bundle.kind() == Bundle::Kind::OptOut) return 0.0;

    auto distance = [&](int j) { return std::abs(x - cp_position(j, params.M)); };
    const int j = bundle.primary();
    require(j >= 1 && j <= params.M, "bundle_utility: primary index out of range");
    const auto& pj = cps[static_cast<std::size_t>(j - 1)];
    double u = params.V - params.t * distance(j) - delays.at(j) - pj.S;
    if (bundle.kind() == Bundle::Kind::Dual) {
        const int k = bundle.secondary();
        require(k >= 1 && k <= params.M, "bundle_utility: secondary index out of range");
        const auto& pk = cps[static_cast<std::size_t>(k - 1)];
        u += params.theta * (params.V - params.t * distance(k) - delays.at(k)) - pk.S;
    }
    return u - params.F;
}

Bundle best_bundle(double x, const MarketParams& params, std::span<const CPProfile> cps,
                   const DelayProfile& delays, CandidateSet candidates) {
    require(x >= 0.0 && x <= 1.0, "best_bundle: x must lie in [0, 1]");
    const int M = params.M;

    int lo = 1;
    int hi = M;
    if (candidates == CandidateSet::Adjacent) {
        const double spacing = params.spacing();
        lo = std::min(M - 1, static_cast<int>(std::floor(x / spacing)) + 1);
        hi = lo + 1;
    }

    // Per-CP primary utility and secondary increment; both exclude F.
    std::vector<double> P(static_cast<std::size_t>(hi - lo + 1));
    std::vector<double> Q(P.size());
    for (int j = lo; j <= hi; ++j) {
        const double pos = static_cast<double>(j - 1) / static_cast<double>(M - 1);
        const double base = params.V - params.t * std::abs(x - pos) - delays.d[j - 1];
        P[j - lo] = base - cps[static_cast<std::size_t>(j - 1)].S;
        Q[j - lo] = params.theta * base - cps[static_cast<std::size_t>(j - 1)].S;
    }

    Bundle best = Bundle::opt_out();
    double best_u = -kInf;
    for (int j = lo; j <= hi; ++j) {
        const double single = P[j - lo] - params.F;
        if (strictly_better(single, best_u)) {
            best_u = single;
            best = Bundle::single(j);
        }
        for (int k = lo; k <= hi; ++k) {
            if (k == j) continue;
            const double dual = single + Q[k - lo];
            if (strictly_better(dual, best_u)) {
                best_u = dual;
                best = Bundle::dual(j, k);
            }
        }
    }
    return best_u < 0.0 ? Bundle::opt_out() : best;
}

AssumptionReport validate_assumptions(const MarketParams& params,
                                      std::span<const CPProfile> cps) {
    AssumptionReport report;
    const double spacing_cost = params.t / (params.M - 1);
    double max_s = 0.0;
    double min_s = kInf;
    for (const auto& cp : cps) {
        max_s = std::max(max_s, cp.S);
        min_s = std::min(min_s, cp.S);
    }
    if (cps.empty()) min_s = 0.0;

    auto note = [&](const std::string& name, double num, double den) {
        if (den > 0.0) return;
        if (num > 0.0) report.infinite_bounds.push_back(name);
        else report.degenerate_bounds.push_back(name);
    };

    // Full coverage.
    const double part1_margin = params.V - (params.d0 + spacing_cost + params.F + max_s);
    report.part1_ok = part1_margin > 0.0;
    report.margins["part1"] = part1_margin;

    // Lower bound on theta: some users dual-purchase.
    const double lower_den = params.V - params.d0 - 0.5 * (max_s + spacing_cost);
    const double lower = ratio_bound(max_s, lower_den);
    note("part2_lower", max_s, lower_den);
    report.part2_lower_ok = !std::isnan(lower) && params.theta > lower;
    report.margins["part2_lower"] = std::isnan(lower) ? lower : params.theta - lower;

    // Upper bound on theta: some users single-purchase.
    const double upper_den = params.V - spacing_cost;
    const double upper = ratio_bound(min_s, upper_den);
    note("part2_upper", min_s, upper_den);
    report.part2_upper_ok = !std::isnan(upper) && params.theta < upper;
    report.margins["part2_upper"] = std::isnan(upper) ? upper : upper - params.theta;

    // Relaxations at default delays: nobody dual-purchases / everybody does.
    double no_dual_cutoff = kInf;
    double all_dual_cutoff = -kInf;
    bool cutoffs_defined = true;
    for (const auto& cp : cps) {
        const double nd_den = params.V - 0.5 * spacing_cost - params.d0;
        const double nd = ratio_bound(cp.S, nd_den);
        const double ad_den = params.V - params.d0 - spacing_cost;
        const double ad = ratio_bound(cp.S, ad_den);
        if (std::isnan(nd) || std::isnan(ad)) {
            cutoffs_defined = false;
            continue;
        }
        no_dual_cutoff = std::min(no_dual_cutoff, nd);
        all_dual_cutoff = std::max(all_dual_cutoff, ad);
    }
    const bool no_dual = cutoffs_defined && params.theta < no_dual_cutoff;
    const bool all_dual = cutoffs_defined && params.theta > all_dual_cutoff;
    report.margins["no_dual"] = no_dual_cutoff - params.theta;
    report.margins["all_dual"] = params.theta - all_dual_cutoff;

    if (report.part1_ok && report.part2_lower_ok && report.part2_upper_ok) {
        report.regime = Regime::FullAssumption1;
    } else if (!report.part1_ok) {
        report.regime = Regime::PartialCoverage;
    } else if (!report.degenerate_bounds.empty()) {
        report.regime = Regime::Degenerate;
    } else if (no_dual) {
        report.regime = Regime::NoDual;
    } else if (all_dual) {
        report.regime = Regime::AllDual;
    } else {
        // A part-2 bound fails without reaching either relaxation extreme.
        report.regime = Regime::Degenerate;
    }
    return report;
}

} // namespace priomarket
