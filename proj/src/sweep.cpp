#include "priomarket/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "parallel.hpp"
#include "priomarket/isp_optimizer.hpp"
#include "priomarket/oracle.hpp"
#include "priomarket/welfare.hpp"

namespace priomarket {

namespace {

std::vector<double> linspace(double lo, double hi, int steps) {
    return SweepSpec{"", lo, hi, steps}.values();
}

MassBreakdown masses_for(const Scenario& s, Mode mode, const DelayProfile& delays) {
    switch (mode) {
    case Mode::Single: return masses_single(s.market, s.cps, delays);
    case Mode::AllDual: return masses_all_dual(s.market, s.cps, delays);
    default:
        if (s.distribution) return masses_nonuniform(s.market, s.cps, delays, *s.distribution);
        return masses_multi(s.market, s.cps, delays);
    }
}

ResultRow blank_row(const Scenario& s) {
    ResultRow row;
    row.scenario = s.id;
    row.M = s.market.M;
    return row;
}

// Fills masses, revenues, profit and welfare for delays d and fees p; CPs
// with p > 0 hold a contract.
void fill_market(ResultRow& row, const Scenario& s, Mode mode, const DelayProfile& delays,
                 const std::vector<double>& prices, const SweepOptions& options) {
    const auto& params = s.market;
    row.mode = to_string(mode);
    row.regime = to_string(validate_assumptions(params, s.cps).regime);

    const auto masses = masses_for(s, mode, delays);
    std::vector<CPProfile> cps = s.cps;
    for (std::size_t i = 0; i < cps.size(); ++i) cps[i].z = prices[i] > 0.0;

    row.d = delays.d;
    row.p = prices;
    for (int j = 1; j <= params.M; ++j) {
        const auto& m = masses.at(j);
        const auto i = static_cast<std::size_t>(j - 1);
        row.n.push_back(m.n);
        row.n1.push_back(m.n1);
        row.n2.push_back(m.n2);
        row.R.push_back(cp_revenue(params, cps[i], m, prices[i], cps[i].z));
    }
    row.isp_profit = isp_profit(params, cps, masses, prices, delays, s.cost);

    const auto baseline = DelayProfile::uniform(params);
    if (params.theta > 0.0) {
        row.welfare_closed = total_welfare_closed(params, s.cps, delays).total;
        row.welfare_delta = *row.welfare_closed - total_welfare_closed(params, s.cps, baseline).total;
    }
    if (options.numeric_welfare) {
        row.welfare_numeric = total_welfare_numeric(params, s.cps, delays, options.grid).total;
        row.welfare_delta_numeric =
            *row.welfare_numeric - total_welfare_numeric(params, s.cps, baseline, options.grid).total;
    }
    if (options.oracle && mode == Mode::Multi && !s.distribution) {
        const auto report = run_oracle(params, s.cps, delays, options.grid, options.tol);
        row.oracle_max_error = report.max_error;
        row.meta += (row.meta.empty() ? "" : ";") + std::string("oracle_pass=") +
                    (report.pass ? "1" : "0");
    }
}

ResultRow guarded(const Scenario& s, const std::function<void(ResultRow&)>& body) {
    ResultRow row = blank_row(s);
    try {
        body(row);
    } catch (const std::exception& e) {
        ResultRow failed = blank_row(s);
        failed.swept = row.swept;
        failed.labels = row.labels;
        for (auto& [_, v] : failed.labels) v.clear();
        failed.mode = row.mode.empty() ? to_string(s.mode) : row.mode;
        failed.regime = row.regime;
        failed.meta = row.meta;
        failed.error = e.what();
        if (failed.error.empty()) failed.error = "error";
        return failed;
    }
    return row;
}

std::string join_indices(const std::vector<int>& v) {
    std::string out;
    for (int j : v) out += (out.empty() ? "" : " ") + std::to_string(j);
    return out;
}

struct Point {
    std::vector<std::pair<std::string, double>> swept;
    std::vector<std::pair<std::string, std::string>> labels;
    std::function<void(ResultRow&)> run;
};

std::vector<ResultRow> run_points(const Scenario& s, std::vector<Point>& points) {
    std::vector<ResultRow> rows(points.size());
    detail::parallel_for(static_cast<int>(points.size()), [&](int i) {
        auto& pt = points[static_cast<std::size_t>(i)];
        rows[static_cast<std::size_t>(i)] = guarded(s, [&](ResultRow& row) {
            row.swept = pt.swept;
            row.labels = pt.labels;
            pt.run(row);
        });
    });
    return rows;
}

void optimize_into(ResultRow& row, const Scenario& s, const SweepOptions& options) {
    s.validate();
    const Mode mode = s.resolved_mode();
    row.mode = to_string(mode);
    row.regime = to_string(validate_assumptions(s.market, s.cps).regime);
    JointOptions joint;
    joint.seed = options.seed;
    joint.exclusive = options.exclusive;

    OfferSet offers;
    std::string method;
    if (mode == Mode::Single) {
        offers = optimize_single_purchase(s.market, s.cps, s.cost, joint).outcome;
        method = "joint_single";
    } else if (mode == Mode::AllDual) {
        offers = optimize_all_dual(s.market, s.cps, s.cost, joint).outcome;
        method = "joint_all_dual";
    } else if (s.distribution) {
        offers = optimize_nonuniform(s.market, s.cps, s.cost, *s.distribution, joint).outcome;
        method = "joint_nonuniform";
    } else {
        offers = offer_discriminatory(s.market, s.cps, s.cost, options.exclusive);
        method = "discriminatory";
    }
    row.meta = "offers=" + method + ";exclusive=" + (options.exclusive ? "1" : "0");
    fill_market(row, s, mode, offers.delays, offers.prices, options);
}

Scenario with_cost(Scenario s, double c) {
    s.cost = CostModel::reciprocal(c);
    return s;
}

std::vector<Point> fig3_points(const Scenario& base, double c, const SweepOptions& options) {
    std::vector<Point> points;
    for (double S : linspace(6, 16, 21)) {
        for (double r : linspace(1, 4, 16)) {
            Scenario s = with_cost(base, c);
            s.mode = Mode::Multi;
            s.delays.reset();
            for (auto& cp : s.cps) cp = {cp.index, S, r, false};
            points.push_back({{{"S", S}, {"r", r}}, {}, [s, options](ResultRow& row) {
                                  optimize_into(row, s, options);
                              }});
        }
    }
    return points;
}

std::vector<Point> fig5_points(const Scenario& base, const SweepOptions& options) {
    std::vector<Point> points;
    const char* variants[] = {"both", "exclusive", "throttled"};
    for (double S : linspace(10, 16, 13)) {
        for (const char* variant : variants) {
            Scenario s = with_cost(base, 2.0);
            s.mode = Mode::Multi;
            s.delays.reset();
            for (auto& cp : s.cps) cp = {cp.index, cp.index <= 2 ? S : 6.0, 2.27, false};
            const std::string v = variant;
            points.push_back({{{"S", S}}, {{"series", v}}, [s, v, options](ResultRow& row) {
                                  const auto& p = s.market;
                                  auto delays = DelayProfile::uniform(p);
                                  std::vector<double> prices(s.cps.size(), 0.0);
                                  std::vector<int> prioritized = {2};
                                  if (v == "both") prioritized = {1, 2};
                                  if (v == "throttled") {
                                      delays.allow_throttling = true;
                                      for (int j = 1; j <= p.M; ++j) delays.at(j) = 1.01 * p.d0;
                                  }
                                  for (int j : prioritized) {
                                      const auto& cp = s.cps[static_cast<std::size_t>(j - 1)];
                                      const double d = optimal_delay(p, cp, s.cost);
                                      delays.at(j) = d;
                                      prices[static_cast<std::size_t>(j - 1)] =
                                          prioritization_price(p, cp, d);
                                  }
                                  row.meta = "variant=" + v + ";throttle=" +
                                             (v == "throttled" ? "1.01" : "1");
                                  fill_market(row, s, Mode::Multi, delays, prices, options);
                              }});
        }
    }
    return points;
}

std::vector<Point> fig6_points(const Scenario& base, const SweepOptions& options) {
    std::vector<Point> points;
    for (double S : {6.0, 10.0, 16.0}) {
        for (double d0 : linspace(5.4, 7.3, 20)) {
            Scenario s = with_cost(base, 1.0);
            s.mode = Mode::Multi;
            s.delays.reset();
            s.market.d0 = d0;
            for (auto& cp : s.cps) cp.S = S;
            points.push_back({{{"S", S}, {"d0", d0}}, {}, [s, options](ResultRow& row) {
                                  optimize_into(row, s, options);
                              }});
        }
    }
    return points;
}

std::vector<Point> fig7_points(const Scenario& base, const SweepOptions& options) {
    std::vector<Point> points;
    for (double S3 : linspace(12, 18, 13)) {
        for (double r3 : linspace(2, 4, 11)) {
            Scenario s = base;
            s.mode = Mode::Multi;
            s.delays.reset();
            for (auto& cp : s.cps) cp = {cp.index, 10.0, 2.27, false};
            s.cps[2].S = S3;
            s.cps[2].r = r3;
            points.push_back(
                {{{"S3", S3}, {"r3", r3}}, {{"accepted", ""}}, [s, options](ResultRow& row) {
                     const auto menu = uniform_menu_optimize(s.market, s.cps, s.cost);
                     auto delays = DelayProfile::uniform(s.market);
                     std::vector<double> prices(s.cps.size(), 0.0);
                     for (int j : menu.accepted) {
                         delays.at(j) = menu.d;
                         prices[static_cast<std::size_t>(j - 1)] = menu.p;
                     }
                     row.labels = {{"accepted", join_indices(menu.accepted)}};
                     std::ostringstream meta;
                     meta << "menu=single_pair;grid=" << menu.delay_points << "x"
                          << menu.price_points << ";p_max=" << format_number(menu.p_max);
                     row.meta = meta.str();
                     fill_market(row, s, Mode::Multi, delays, prices, options);
                 }});
        }
    }
    return points;
}

std::vector<Point> fig9_points(const Scenario& base, const std::vector<double>& fees,
                               const SweepOptions& options) {
    std::vector<Point> points;
    for (double S3 : fees) {
        for (double d3 : linspace(4, 6, 21)) {
            Scenario s = base;
            s.mode = Mode::Multi;
            s.delays.reset();
            for (auto& cp : s.cps) cp = {cp.index, 10.0, 2.27, false};
            s.cps[2].S = S3;
            points.push_back(
                {{{"S3", S3}, {"d3", d3}}, {}, [s, d3, options](ResultRow& row) {
                     const auto plan = capacity_reallocation(s.market, s.cps, 3, d3);
                     std::ostringstream meta;
                     meta << "capacity_policy=proportional;total=" << format_number(plan.total)
                          << ";max_residual="
                          << format_number(*std::max_element(plan.residuals.begin(),
                                                             plan.residuals.end()));
                     row.meta = meta.str();
                     fill_market(row, s, Mode::Multi, plan.delays,
                                 std::vector<double>(s.cps.size(), 0.0), options);
                 }});
        }
    }
    return points;
}

} // namespace

ResultRow evaluate_equilibrium(const Scenario& s, const SweepOptions& options) {
    return guarded(s, [&](ResultRow& row) {
        s.validate();
        const Mode mode = s.resolved_mode();
        row.mode = to_string(mode);
        std::vector<double> prices(s.cps.size(), 0.0);
        fill_market(row, s, mode, s.delay_profile(), prices, options);
    });
}

ResultRow evaluate_optimize(const Scenario& s, const SweepOptions& options) {
    return guarded(s, [&](ResultRow& row) { optimize_into(row, s, options); });
}

std::vector<std::string> sweep_recipes() {
    return {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11"};
}

std::vector<ResultRow> run_sweep(const Scenario& scenario, const std::string& command,
                                 const SweepOptions& options) {
    scenario.validate();
    std::vector<Point> points;
    if (command == "fig3") points = fig3_points(scenario, 1.0, options);
    else if (command == "fig4") points = fig3_points(scenario, 2.0, options);
    else if (command == "fig5") points = fig5_points(scenario, options);
    else if (command == "fig6") points = fig6_points(scenario, options);
    else if (command == "fig7" || command == "fig8") points = fig7_points(scenario, options);
    else if (command == "fig9" || command == "fig10") points = fig9_points(scenario, {10.0}, options);
    else if (command == "fig11") points = fig9_points(scenario, {10.0, 13.0, 16.0}, options);
    else if (command == "custom") {
        if (!scenario.sweep) throw InputError("sweep custom: scenario has no sweep spec");
        const auto spec = *scenario.sweep;
        for (double v : spec.values()) {
            Scenario s = scenario;
            s.sweep.reset();
            apply_path(s, spec.path, v);
            points.push_back({{{spec.path, v}}, {}, [s, options](ResultRow& row) {
                                  optimize_into(row, s, options);
                              }});
        }
    } else {
        throw InputError("sweep: unknown recipe '" + command + "'");
    }
    return run_points(scenario, points);
}

std::string format_number(double value) {
    if (!std::isfinite(value)) return "";
    if (value == 0.0) value = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

namespace {

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

} // namespace

std::string csv_text(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw InputError("emit_csv: no rows");
    const auto& first = rows.front();
    int M = 0;
    for (const auto& r : rows) M = std::max(M, r.M);

    std::vector<std::string> header = {"scenario"};
    for (const auto& [k, _] : first.swept) header.push_back(k);
    for (const auto& [k, _] : first.labels) header.push_back(k);
    header.insert(header.end(), {"mode", "regime"});
    for (const char* prefix : {"d_", "p_", "n_", "n1_", "n2_", "R_"})
        for (int j = 1; j <= M; ++j) header.push_back(prefix + std::to_string(j));
    header.insert(header.end(), {"isp_profit", "welfare_closed", "welfare_numeric",
                                 "welfare_delta", "welfare_delta_numeric", "oracle_max_error",
                                 "meta", "error"});

    std::ostringstream out;
    auto write = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << quote(fields[i]);
        out << "\n";
    };
    write(header);
    for (const auto& r : rows) {
        if (r.swept.size() != first.swept.size() || r.labels.size() != first.labels.size())
            throw InputError("emit_csv: rows have different column sets");
        std::vector<std::string> f = {r.scenario};
        for (const auto& [_, v] : r.swept) f.push_back(format_number(v));
        for (const auto& [_, v] : r.labels) f.push_back(v);
        f.push_back(r.mode);
        f.push_back(r.regime);
        const bool ok = r.error.empty();
        for (const auto* vec : {&r.d, &r.p, &r.n, &r.n1, &r.n2, &r.R}) {
            for (int j = 0; j < M; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                f.push_back(ok && uj < vec->size() ? format_number((*vec)[uj]) : "");
            }
        }
        for (const auto* v : {&r.isp_profit, &r.welfare_closed, &r.welfare_numeric,
                              &r.welfare_delta, &r.welfare_delta_numeric, &r.oracle_max_error})
            f.push_back(ok ? opt(*v) : "");
        f.push_back(r.meta);
        f.push_back(r.error);
        write(f);
    }
    return out.str();
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    const auto text = csv_text(rows);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("emit_csv: cannot write '" + path + "'");
    out << text;
    if (!out) throw InputError("emit_csv: write to '" + path + "' failed");
}

} // namespace priomarket
