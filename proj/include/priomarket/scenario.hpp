#pragma once

#include <optional>
#include <string>
#include <vector>

#include "priomarket/cost_model.hpp"
#include "priomarket/equilibrium.hpp"
#include "priomarket/market_model.hpp"

namespace priomarket {

enum class Mode { Auto, Multi, Single, AllDual };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct SweepSpec {
    /// market.<field>, cps[i].S|r (1-based i, or * for every CP), or cost.c
    std::string path;
    double lo = 0.0;
    double hi = 0.0;
    int steps = 1;

    std::vector<double> values() const;

    bool operator==(const SweepSpec&) const = default;
};

struct Scenario {
    std::string id = "scenario";
    MarketParams market;
    std::vector<CPProfile> cps;
    CostModel cost;
    std::optional<DistributionSpec> distribution;
    std::optional<DelayProfile> delays;
    Mode mode = Mode::Auto;
    std::optional<SweepSpec> sweep;

    /// Throws InputError naming the offending field or constraint.
    void validate() const;
    /// Delays in force: the explicit profile, or d0 for every CP.
    DelayProfile delay_profile() const;
    /// Mode after resolving Auto through the assumption report.
    Mode resolved_mode() const;

    bool operator==(const Scenario&) const = default;
};

/// Default calibration: M=6, V=100, t=500, theta=0.5, delta=0.5, lambda=5,
/// F=33, d0=6, every CP at S=10, r=2.27, reciprocal cost with c=1.
Scenario table2_scenario();

/// Parses and validates a scenario. `allow_throttling` forces the flag on an
/// explicit delay profile before validation.
Scenario parse_scenario(const std::string& text, bool allow_throttling = false);
Scenario load_scenario(const std::string& path, bool allow_throttling = false);
std::string to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Sets the field named by a sweep path; throws InputError for unknown paths.
void apply_path(Scenario& scenario, const std::string& path, double value);

} // namespace priomarket
