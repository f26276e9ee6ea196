// Command-line front end: validate, equilibrium, optimize, sweep, oracle, welfare.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "priomarket/errors.hpp"
#include "priomarket/oracle.hpp"
#include "priomarket/scenario.hpp"
#include "priomarket/sweep.hpp"

using namespace priomarket;

namespace {

enum Exit { kOk = 0, kInput = 2, kInfeasible = 3, kOracle = 4 };

struct Flags {
    std::string scenario;
    std::string out;
    int grid = 100001;
    double tol = 0.0;
    bool exclusive = false;
    bool allow_throttling = false;
    std::uint64_t seed = 1;
};

Scenario scenario_from(const Flags& f) {
    if (f.scenario.empty()) return table2_scenario();
    return load_scenario(f.scenario, f.allow_throttling);
}

SweepOptions sweep_options(const Flags& f) {
    SweepOptions o;
    o.grid = f.grid;
    o.tol = f.tol;
    o.exclusive = f.exclusive;
    o.seed = f.seed;
    return o;
}

void write_text(const Flags& f, const std::string& text) {
    if (f.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(f.out, std::ios::binary);
    if (!out) throw InputError("cannot write '" + f.out + "'");
    out << text;
}

int emit_rows(const Flags& f, const std::vector<ResultRow>& rows, bool fail_on_error) {
    if (f.out.empty()) std::cout << csv_text(rows);
    else emit_csv(rows, f.out);
    if (fail_on_error) {
        for (const auto& r : rows) {
            if (!r.error.empty()) {
                std::cerr << "error: " << r.error << "\n";
                return kInfeasible;
            }
        }
    }
    return kOk;
}

int cmd_validate(const Flags& f) {
    const auto s = scenario_from(f);
    const auto report = validate_assumptions(s.market, s.cps);
    nlohmann::ordered_json j;
    j["scenario"] = s.id;
    j["regime"] = to_string(report.regime);
    j["mode"] = to_string(s.resolved_mode());
    j["part1_ok"] = report.part1_ok;
    j["part2_lower_ok"] = report.part2_lower_ok;
    j["part2_upper_ok"] = report.part2_upper_ok;
    for (const auto& [k, v] : report.margins) {
        if (std::isfinite(v)) j["margins"][k] = v;
        else j["margins"][k] = std::isnan(v) ? "undefined" : (v > 0 ? "inf" : "-inf");
    }
    j["infinite_bounds"] = report.infinite_bounds;
    j["degenerate_bounds"] = report.degenerate_bounds;
    write_text(f, j.dump(2) + "\n");
    return kOk;
}

int cmd_oracle(const Flags& f) {
    const auto s = scenario_from(f);
    const auto report = run_oracle(s.market, s.cps, s.delay_profile(), f.grid, f.tol);
    nlohmann::ordered_json j;
    j["scenario"] = s.id;
    j["regime"] = to_string(validate_assumptions(s.market, s.cps).regime);
    j["N"] = report.N;
    j["tolerance"] = report.tolerance;
    j["max_error"] = report.max_error;
    j["adjacency_violations"] = report.adjacency_violations;
    j["pass"] = report.pass;
    for (std::size_t i = 0; i < report.errors.size(); ++i) {
        const auto& e = report.empirical.cp[i];
        const auto& err = report.errors[i];
        j["cps"].push_back({{"cp", i + 1},
                            {"n", e.n},
                            {"n1", e.n1},
                            {"n2", e.n2},
                            {"err_n", err.n},
                            {"err_n1", err.n1},
                            {"err_n2", err.n2}});
    }
    write_text(f, j.dump(2) + "\n");
    return report.pass ? kOk : kOracle;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Paid-prioritization market simulator"};
    app.require_subcommand(1);
    Flags flags;
    std::string recipe;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", flags.scenario, "Scenario JSON (default: built-in calibration)");
        sub->add_option("--out", flags.out, "Output path (default: stdout)");
        sub->add_option("--grid", flags.grid, "Oracle / integration grid size")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol", flags.tol, "Oracle mass tolerance (0 = max(1e-3, 10/N))");
        sub->add_flag("--exclusive", flags.exclusive, "Offer a fast lane to one CP only");
        sub->add_flag("--allow-throttling", flags.allow_throttling,
                      "Accept delays above d0 in the scenario");
        sub->add_option("--seed", flags.seed, "Seed for random multi-starts");
    };

    auto* validate = app.add_subcommand("validate", "Assumption report and regime");
    auto* equilibrium = app.add_subcommand("equilibrium", "Masses and revenues at the scenario delays");
    auto* optimize = app.add_subcommand("optimize", "ISP offers and the induced equilibrium");
    auto* sweep = app.add_subcommand("sweep", "Run a figure recipe or the scenario's sweep");
    auto* oracle = app.add_subcommand("oracle", "Compare closed-form masses with simulated users");
    auto* welfare = app.add_subcommand("welfare", "Closed-form and numeric welfare");
    for (auto* sub : {validate, equilibrium, optimize, sweep, oracle, welfare}) common(sub);
    sweep->add_option("recipe", recipe, "fig3..fig11 or custom")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        const auto options = sweep_options(flags);
        if (validate->parsed()) return cmd_validate(flags);
        if (oracle->parsed()) return cmd_oracle(flags);
        if (equilibrium->parsed())
            return emit_rows(flags, {evaluate_equilibrium(scenario_from(flags), options)}, true);
        if (optimize->parsed())
            return emit_rows(flags, {evaluate_optimize(scenario_from(flags), options)}, true);
        if (welfare->parsed()) {
            auto o = options;
            o.numeric_welfare = true;
            return emit_rows(flags, {evaluate_equilibrium(scenario_from(flags), o)}, true);
        }
        if (sweep->parsed())
            return emit_rows(flags, run_sweep(scenario_from(flags), recipe, options), false);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const RegimeError& e) {
        std::cerr << "regime error: " << e.what() << "\n";
        return kInfeasible;
    }
    return kOk;
}
