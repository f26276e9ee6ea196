#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "priomarket/scenario.hpp"

namespace priomarket {

struct SweepOptions {
    int grid = 100001;            ///< oracle / numeric-welfare grid size
    bool numeric_welfare = false;
    bool oracle = false;
    double tol = 0.0;             ///< oracle tolerance, 0 selects the default
    bool exclusive = false;
    std::uint64_t seed = 1;
};

struct ResultRow {
    std::string scenario;
    std::vector<std::pair<std::string, double>> swept;
    std::vector<std::pair<std::string, std::string>> labels;
    std::string mode;
    std::string regime;
    int M = 0;
    std::vector<double> d, p, n, n1, n2, R; ///< 0-based per CP
    std::optional<double> isp_profit;
    std::optional<double> welfare_closed;
    std::optional<double> welfare_numeric;
    std::optional<double> welfare_delta;
    std::optional<double> welfare_delta_numeric;
    std::optional<double> oracle_max_error;
    std::string meta;
    std::string error; ///< set instead of numeric columns when the point failed
};

/// Masses, revenues and welfare at the scenario's own delay profile, no fees.
ResultRow evaluate_equilibrium(const Scenario& scenario, const SweepOptions& options = {});

/// ISP offers for the scenario's resolved mode and the market they induce.
ResultRow evaluate_optimize(const Scenario& scenario, const SweepOptions& options = {});

/// Recipe names accepted by run_sweep besides "custom".
std::vector<std::string> sweep_recipes();

/// Runs a named recipe (fig3..fig11) or "custom" (the scenario's sweep spec
/// applied to evaluate_optimize). Points run in parallel; rows keep sweep
/// order. A failing point yields a row with `error` set.
std::vector<ResultRow> run_sweep(const Scenario& scenario, const std::string& command,
                                 const SweepOptions& options = {});

std::string format_number(double value);
std::string csv_text(const std::vector<ResultRow>& rows);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);

} // namespace priomarket
