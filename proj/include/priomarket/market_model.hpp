#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "priomarket/errors.hpp"

namespace priomarket {

/// Global scalars of the market. CPs sit at equally spaced points of the
/// unit line; users are spread over the same line.
struct MarketParams {
    double V = 100.0;     ///< base content value
    double t = 500.0;     ///< transport (fit) cost per unit line distance
    double theta = 0.5;   ///< residual benefit rate of secondary content
    double delta = 0.5;   ///< ad-revenue attenuation for secondary users
    double lambda = 5.0;  ///< mean user traffic rate
    double F = 33.0;      ///< ISP access fee
    int M = 6;            ///< number of CPs
    double d0 = 6.0;      ///< default QoS/delay

    /// Distance between adjacent CPs, 1/(M-1).
    double spacing() const { return 1.0 / (M - 1); }

    /// Throws InputError naming the first violated constraint. theta = 0 is
    /// accepted here (single-purchase markets); theta must stay below 1.
    void validate() const;

    bool operator==(const MarketParams&) const = default;
};

struct CPProfile {
    int index = 1;  ///< 1-based position in the CP list
    double S = 0.0; ///< subscription fee
    double r = 0.0; ///< ad-revenue rate per unit traffic
    bool z = false; ///< holds a prioritization contract

    bool operator==(const CPProfile&) const = default;
};

/// Checks S, r >= 0, list length M and contiguous 1..M indices.
void validate_cps(const MarketParams& params, std::span<const CPProfile> cps);

/// M identical CPs with indices 1..M.
std::vector<CPProfile> uniform_cps(const MarketParams& params, double S, double r);

/// Per-CP delay currently in force, stored 0-based (d[j-1] belongs to CP j).
struct DelayProfile {
    std::vector<double> d;
    /// Delays above d0 are rejected unless this is set.
    bool allow_throttling = false;

    static DelayProfile uniform(const MarketParams& params);
    static DelayProfile uniform(int M, double value);

    double at(int j) const { return d.at(static_cast<std::size_t>(j - 1)); }
    double& at(int j) { return d.at(static_cast<std::size_t>(j - 1)); }
    int size() const { return static_cast<int>(d.size()); }

    bool operator==(const DelayProfile&) const = default;
};

void validate_delays(const MarketParams& params, const DelayProfile& delays);

/// A user's consumption choice: nothing, one CP, or an ordered
/// (primary, secondary) pair.
class Bundle {
public:
    enum class Kind { OptOut, Single, Dual };

    static Bundle opt_out() { return Bundle(Kind::OptOut, 0, 0); }
    static Bundle single(int j) { return Bundle(Kind::Single, j, 0); }
    static Bundle dual(int primary, int secondary);

    Kind kind() const { return kind_; }
    int primary() const { return primary_; }
    int secondary() const { return secondary_; }

    bool involves(int j) const { return j != 0 && (primary_ == j || secondary_ == j); }

    std::string to_string() const;

    bool operator==(const Bundle&) const = default;

private:
    Bundle(Kind kind, int primary, int secondary)
        : kind_(kind), primary_(primary), secondary_(secondary) {}

    Kind kind_;
    int primary_;
    int secondary_;
};

struct Thresholds {
    double primary;   ///< max distance at which the CP is worth buying as primary
    double secondary; ///< max distance at which it is worth adding as secondary
};

enum class Regime { FullAssumption1, NoDual, AllDual, PartialCoverage, Degenerate };

std::string to_string(Regime regime);

struct AssumptionReport {
    bool part1_ok = false;
    bool part2_lower_ok = false;
    bool part2_upper_ok = false;
    Regime regime = Regime::Degenerate;
    /// Signed slack per condition; positive means satisfied. Keys: part1,
    /// part2_lower, part2_upper, no_dual, all_dual.
    std::map<std::string, double> margins;
    /// Bounds whose denominator is <= 0 with a positive numerator; the bound
    /// is taken as +infinity.
    std::vector<std::string> infinite_bounds;
    /// Bounds whose denominator is <= 0 and numerator is 0 (undefined).
    std::vector<std::string> degenerate_bounds;
};

enum class CandidateSet { All, Adjacent };

/// Line position of CP j (1-based): (j-1)/(M-1).
double cp_position(int j, int M);

/// Primary and secondary distance thresholds of a CP at delay d. Throws
/// RegimeError when theta = 0 (no secondary threshold exists).
Thresholds thresholds(const MarketParams& params, const CPProfile& cp, double d);

/// Total utility of a user at x from a bundle, access fee included.
/// OptOut is normalized to 0.
double bundle_utility(double x, const Bundle& bundle, const MarketParams& params,
                      std::span<const CPProfile> cps, const DelayProfile& delays);

/// Utility-maximizing bundle for a user at x. Candidates are visited in order
/// of primary index with the Single before any Dual, and only a strictly
/// better candidate replaces the incumbent, so near-exact ties resolve to the
/// lower primary index and to Single. Returns OptOut when the best utility is
/// negative.
Bundle best_bundle(double x, const MarketParams& params, std::span<const CPProfile> cps,
                   const DelayProfile& delays, CandidateSet candidates = CandidateSet::All);

AssumptionReport validate_assumptions(const MarketParams& params,
                                      std::span<const CPProfile> cps);

} // namespace priomarket
