// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "priomarket/cost_model.hpp"
#include "priomarket/equilibrium.hpp"
#include "priomarket/isp_optimizer.hpp"
#include "priomarket/market_model.hpp"
#include "priomarket/oracle.hpp"
#include "priomarket/scenario.hpp"
#include "priomarket/sweep.hpp"
#include "priomarket/welfare.hpp"

using namespace priomarket;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (pass) detail << "first failure: " << what << "; ";
        pass = false;
    }
};

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

const MarketParams kTable2{};

std::vector<CPProfile> table2_cps() { return uniform_cps(kTable2, 10.0, 2.27); }

DelayProfile one_fast(const MarketParams& p, int j, double d) {
    auto delays = DelayProfile::uniform(p);
    delays.at(j) = d;
    return delays;
}

// S in [6,16] x r in [1,4].
const std::vector<double> kGridS = linspace(6.0, 16.0, 21);
const std::vector<double> kGridR = linspace(1.0, 4.0, 16);

// Random market satisfying the full-coverage assumption. Returns false when
// the draw misses the regime.
bool random_market(std::mt19937_64& rng, MarketParams& p, std::vector<CPProfile>& cps,
                   DelayProfile& delays) {
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(rng); };
    p = MarketParams{};
    p.M = std::uniform_int_distribution<>(3, 8)(rng);
    p.d0 = u(4.0, 8.0);
    p.F = u(0.0, 40.0);
    p.lambda = u(1.0, 8.0);
    p.delta = u(0.0, 1.0);
    cps.clear();
    double max_s = 0.0, min_s = 1e300;
    for (int j = 1; j <= p.M; ++j) {
        CPProfile cp{j, u(4.0, 12.0), u(1.0, 4.0), false};
        max_s = std::max(max_s, cp.S);
        min_s = std::min(min_s, cp.S);
        cps.push_back(cp);
    }
    const double spacing_cost = 2.0 * p.d0 + max_s + u(1.0, 20.0);
    p.t = spacing_cost * (p.M - 1);
    p.V = p.d0 + spacing_cost + p.F + max_s + u(5.0, 50.0);
    const double lower = max_s / (p.V - p.d0 - 0.5 * (max_s + spacing_cost));
    const double upper = min_s / (p.V - spacing_cost);
    if (!(lower < upper)) return false;
    p.theta = lower + u(0.1, 0.9) * (upper - lower);
    delays = DelayProfile::uniform(p);
    for (auto& d : delays.d) d = u(0.6 * p.d0, p.d0);
    return validate_assumptions(p, cps).regime == Regime::FullAssumption1;
}

Verdict oracle_equivalence() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    const int N = 100001;
    const auto cps = table2_cps();
    const auto base = run_oracle(kTable2, cps, DelayProfile::uniform(kTable2), N, 1e-3);
    v.expect(base.max_error <= 1e-3, "default scenario error " + fmt(base.max_error));
    double worst = base.max_error;
    int violations = 0, accepted = 0, draws = 0;
    std::mt19937_64 rng(20240601);
    while (accepted < 24 && draws < 200000) {
        ++draws;
        MarketParams p;
        std::vector<CPProfile> rc;
        DelayProfile d;
        if (!random_market(rng, p, rc, d)) continue;
        ++accepted;
        const auto r = run_oracle(p, rc, d, N, 1e-3);
        worst = std::max(worst, r.max_error);
        violations += r.adjacency_violations;
        v.expect(r.max_error <= 1e-3, "random scenario " + std::to_string(accepted) + " error " +
                                          fmt(r.max_error));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.expect(accepted >= 20, "only " + std::to_string(accepted) + " scenarios drawn");
    v.expect(violations == 0, std::to_string(violations) + " adjacency violations");
    v.expect(secs <= 30.0, "runtime " + fmt(secs) + " s");
    v.detail << "scenarios=1+" << accepted << " max_error=" << fmt(worst)
             << " adjacency_violations=" << violations << " runtime=" << fmt(secs) << "s";
    return v;
}

Verdict optimal_delay_agreement() {
    Verdict v;
    double worst = 0.0;
    for (double c : {1.0, 2.0}) {
        const auto cost = CostModel::reciprocal(c);
        for (double S : kGridS)
            for (double r : kGridR) {
                const CPProfile cp{3, S, r, false};
                const double gap = std::abs(optimal_delay(kTable2, cp, cost) -
                                            analytic_optimal_delay(kTable2, cp, cost));
                worst = std::max(worst, gap);
                v.expect(gap <= 1e-4, "c=" + fmt(c) + " S=" + fmt(S) + " r=" + fmt(r));
            }
    }
    const CPProfile cp{3, 10.0, 2.27, false};
    const double d = optimal_delay(kTable2, cp, CostModel::reciprocal(1.0));
    const double price = prioritization_price(kTable2, cp, d);
    v.expect(std::abs(d - 4.5471) <= 1e-3, "d* " + fmt(d));
    v.expect(std::abs(price - 0.071294) <= 1e-4, "p* " + fmt(price));
    v.detail << "grid max |numeric-analytic|=" << fmt(worst) << " d*=" << fmt(d)
             << " p*=" << fmt(price);
    return v;
}

Verdict binding_revenue() {
    Verdict v;
    double worst = 0.0;
    int checked = 0;
    const auto d0 = DelayProfile::uniform(kTable2);
    for (double c : {1.0, 2.0}) {
        const auto cost = CostModel::reciprocal(c);
        for (double S : kGridS)
            for (double r : kGridR) {
                auto cps = uniform_cps(kTable2, S, r);
                const auto before = masses_multi(kTable2, cps, d0);
                for (int j : {1, 3}) {
                    const auto& cp = cps[static_cast<std::size_t>(j - 1)];
                    if (!affordability_check(kTable2, cp, cost).affordable) continue;
                    const double d = optimal_delay(kTable2, cp, cost);
                    const double price = prioritization_price(kTable2, cp, d);
                    const auto after = masses_multi(kTable2, cps, one_fast(kTable2, j, d));
                    const double r0 = cp_revenue(kTable2, cp, before.at(j), 0.0, false);
                    const double r1 = cp_revenue(kTable2, cp, after.at(j), price, true);
                    const double rel = std::abs(r1 - r0) / r0;
                    worst = std::max(worst, rel);
                    ++checked;
                    v.expect(rel <= 1e-9, "CP" + std::to_string(j) + " S=" + fmt(S) +
                                              " r=" + fmt(r) + " rel " + fmt(rel));
                }
            }
    }
    v.expect(checked > 0, "no affordable CP on the grid");
    v.detail << "affordable cases=" << checked << " max relative gap=" << fmt(worst);
    return v;
}

Verdict prioritization_deltas_check() {
    Verdict v;
    const auto cps = table2_cps();
    const auto pre = DelayProfile::uniform(kTable2);
    const auto post = one_fast(kTable2, 3, 4.5471);
    const auto deltas = prioritization_deltas(kTable2, cps, pre, post);
    const auto& d3 = deltas[2];
    const auto& d2 = deltas[1];
    v.expect(std::abs(d3.dn - 0.0058116) <= 1e-9, "dn3 " + fmt(d3.dn));
    v.expect(std::abs(d2.dn) <= 1e-12, "dn2 " + fmt(d2.dn));
    v.expect(std::abs(d2.dn1 - (-0.0014529)) <= 1e-9, "dn1_2 " + fmt(d2.dn1));
    v.expect(std::abs(d2.dR - (-0.0082452)) <= 1e-6, "dR2 " + fmt(d2.dR));

    const auto a = simulate_users(kTable2, cps, pre);
    const auto b = simulate_users(kTable2, cps, post);
    double worst = 0.0;
    for (int j = 1; j <= kTable2.M; ++j) {
        const auto& closed = deltas[static_cast<std::size_t>(j - 1)];
        const double en = b.masses.at(j).n - a.masses.at(j).n;
        const double en1 = b.masses.at(j).n1 - a.masses.at(j).n1;
        worst = std::max({worst, std::abs(en - closed.dn), std::abs(en1 - closed.dn1)});
    }
    v.expect(worst <= 1e-3, "oracle differencing gap " + fmt(worst));
    v.detail << "dn3=" << fmt(d3.dn) << " dn2=" << fmt(d2.dn) << " dn1_2=" << fmt(d2.dn1)
             << " dR2=" << fmt(d2.dR) << " oracle gap=" << fmt(worst);
    return v;
}

Verdict affordability_frontier() {
    Verdict v;
    int flips = 0;
    for (double c : {1.0, 2.0}) {
        const auto cost = CostModel::reciprocal(c);
        for (double S : kGridS)
            for (double r : kGridR) {
                const CPProfile cp{3, S, r, false};
                const auto a = affordability_check(kTable2, cp, cost);
                const bool moved = optimal_delay(kTable2, cp, cost) < kTable2.d0;
                flips += a.affordable ? 1 : 0;
                v.expect(a.affordable == moved, "c=" + fmt(c) + " S=" + fmt(S) + " r=" + fmt(r));
                v.expect(a.affordable == (a.margin > 0.0), "margin sign at S=" + fmt(S));
            }
    }
    const CPProfile cp{3, 10.0, 2.27, false};
    const auto a1 = affordability_check(kTable2, cp, CostModel::reciprocal(1.0));
    const auto a2 = affordability_check(kTable2, cp, CostModel::reciprocal(2.0));
    v.expect(std::abs(a1.bound - 0.050034) <= 1e-6, "bound " + fmt(a1.bound));
    v.expect(std::abs(a1.slope - 1.0 / 36) <= 1e-15, "slope c=1 " + fmt(a1.slope));
    v.expect(std::abs(a2.slope - 2.0 / 36) <= 1e-15, "slope c=2 " + fmt(a2.slope));
    v.expect(a1.affordable && !a2.affordable, "default-calibration flags");
    v.detail << "affordable grid points=" << flips << "/" << 2 * kGridS.size() * kGridR.size()
             << " bound=" << fmt(a1.bound) << " slopes=" << fmt(a1.slope) << "," << fmt(a2.slope);
    return v;
}

Verdict welfare_checks() {
    Verdict v;
    const auto d0 = DelayProfile::uniform(kTable2);
    double min_positive = 1e300;
    int prioritized = 0;
    for (double c : {1.0, 2.0}) {
        const auto cost = CostModel::reciprocal(c);
        for (double S : kGridS)
            for (double r : kGridR) {
                const auto cps = uniform_cps(kTable2, S, r);
                const auto offers = offer_discriminatory(kTable2, cps, cost);
                if (offers.delays == d0) continue;
                ++prioritized;
                const double delta = welfare_delta(kTable2, cps, d0, offers.delays);
                min_positive = std::min(min_positive, delta);
                v.expect(delta > 0.0, "S=" + fmt(S) + " r=" + fmt(r) + " delta " + fmt(delta));
            }
    }

    SweepOptions opts;
    opts.numeric_welfare = true;
    opts.grid = 100001;
    const auto rows = run_sweep(table2_scenario(), "fig5", opts);
    const double tol = std::max(1e-3, 5.0 / opts.grid);
    int negative = 0, positive = 0;
    double worst = 0.0;
    for (const auto& row : rows) {
        v.expect(row.error.empty(), "sweep row error " + row.error);
        if (!row.error.empty()) continue;
        const bool throttled = std::any_of(row.labels.begin(), row.labels.end(), [](auto& l) {
            return l.first == "series" && l.second == "throttled";
        });
        const double closed = row.welfare_delta.value_or(NAN);
        const double numeric = row.welfare_delta_numeric.value_or(NAN);
        const double gap = std::abs(closed - numeric);
        worst = std::max(worst, gap);
        v.expect(gap <= tol, "closed vs numeric gap " + fmt(gap));
        if (throttled) {
            negative += closed < 0.0 ? 1 : 0;
            positive += closed > 0.0 ? 1 : 0;
        }
    }
    v.expect(negative > 0 && positive > 0, "throttled sweep lacks a sign");
    v.detail << "prioritized grid points=" << prioritized << " min delta=" << fmt(min_positive)
             << " throttled signs -/+=" << negative << "/" << positive
             << " closed-numeric max gap=" << fmt(worst);
    return v;
}

Verdict single_purchase_contrast() {
    Verdict v;
    auto p = kTable2;
    p.theta = 0.0;
    double smallest_drop = 1e300;
    for (double S : {6.0, 10.0, 16.0}) {
        const auto cps = uniform_cps(p, S, 2.27);
        const auto base = masses_single(p, cps, DelayProfile::uniform(p));
        for (int j = 1; j <= p.M; ++j) {
            const auto after = masses_single(p, cps, one_fast(p, j, 5.0));
            for (int k : {j - 1, j + 1}) {
                if (k < 1 || k > p.M) continue;
                const double drop = base.at(k).n - after.at(k).n;
                smallest_drop = std::min(smallest_drop, drop);
                v.expect(drop >= 1e-6, "CP" + std::to_string(k) + " drop " + fmt(drop));
            }
        }
    }
    double worst = 0.0;
    for (double S : {6.0, 10.0, 16.0})
        for (double c : {0.25, 1.0}) {
            const auto cps = uniform_cps(p, S, 2.27);
            const auto opt = optimize_single_purchase(p, cps, CostModel::reciprocal(c));
            const auto& d = opt.outcome.delays;
            for (int j = 1; j <= p.M; ++j) {
                const double gap = std::abs(d.at(j) - d.at(p.M + 1 - j));
                worst = std::max(worst, gap);
                v.expect(gap <= 1e-6, "asymmetric optimum S=" + fmt(S) + " c=" + fmt(c));
            }
        }
    v.detail << "smallest competitor drop=" << fmt(smallest_drop)
             << " max mirror gap=" << fmt(worst);
    return v;
}

Verdict nonuniform_reduction() {
    Verdict v;
    const auto uniform = DistributionSpec::uniform();
    double worst = 0.0;
    for (double S : {6.0, 10.0, 16.0})
        for (double c : {1.0, 2.0}) {
            const auto cps = uniform_cps(kTable2, S, 2.27);
            const auto cost = CostModel::reciprocal(c);
            const auto joint = optimize_nonuniform(kTable2, cps, cost, uniform);
            const auto ref = offer_discriminatory(kTable2, cps, cost);
            const auto mj = masses_nonuniform(kTable2, cps, joint.outcome.delays, uniform);
            const auto mr = masses_multi(kTable2, cps, ref.delays);
            for (int j = 1; j <= kTable2.M; ++j) {
                const auto i = static_cast<std::size_t>(j - 1);
                const double gap = std::max(
                    {std::abs(joint.outcome.delays.at(j) - ref.delays.at(j)),
                     std::abs(joint.outcome.prices[i] - ref.prices[i]),
                     std::abs(mj.at(j).n - mr.at(j).n), std::abs(mj.at(j).n1 - mr.at(j).n1),
                     std::abs(mj.at(j).n2 - mr.at(j).n2)});
                worst = std::max(worst, gap);
                v.expect(gap <= 1e-6, "S=" + fmt(S) + " c=" + fmt(c) + " CP" + std::to_string(j));
            }
        }
    v.detail << "max gap=" << fmt(worst);
    return v;
}

Verdict uniform_menu() {
    Verdict v;
    const auto cost = CostModel::reciprocal(1.0);
    int scenarios = 0;
    bool saw_all = false, saw_dominant = false;
    for (double S3 : {12.0, 14.0, 16.0, 18.0})
        for (double r3 : {2.0, 2.5, 3.0, 3.5, 4.0}) {
            auto cps = uniform_cps(kTable2, 10.0, 2.27);
            cps[2].S = S3;
            cps[2].r = r3;
            const auto menu = uniform_menu_optimize(kTable2, cps, cost);
            const auto disc = offer_discriminatory(kTable2, cps, cost);
            ++scenarios;
            v.expect(menu.profit <= disc.isp_profit - kTable2.F + 1e-12,
                     "menu beats discrimination at S3=" + fmt(S3) + " r3=" + fmt(r3));
            saw_all |= menu.accepted.size() == static_cast<std::size_t>(kTable2.M);
            saw_dominant |= menu.accepted == std::vector<int>{3};
        }
    for (double c : {1.0, 2.0}) {
        const auto cps = table2_cps();
        const auto menu = uniform_menu_optimize(kTable2, cps, CostModel::reciprocal(c));
        const auto disc = offer_discriminatory(kTable2, cps, CostModel::reciprocal(c));
        ++scenarios;
        v.expect(menu.profit <= disc.isp_profit - kTable2.F + 1e-12, "default calibration c=" + fmt(c));
    }
    v.expect(saw_all && saw_dominant, "no transition from all CPs to {3}");
    v.detail << "scenarios=" << scenarios << " all-CP acceptance seen=" << saw_all
             << " {3}-only acceptance seen=" << saw_dominant;
    return v;
}

Verdict capacity_reallocation_check() {
    Verdict v;
    const auto cps = table2_cps();
    const auto base = masses_default(kTable2, cps);
    const auto d0 = DelayProfile::uniform(kTable2);
    double worst_residual = 0.0, worst_conservation = 0.0, max_delta = -1e300;
    int points = 0;
    for (double d3 : linspace(4.0, 5.9, 20)) {
        const auto plan = capacity_reallocation(kTable2, cps, 3, d3);
        const auto after = masses_multi(kTable2, cps, plan.delays);
        ++points;
        double sum = 0.0;
        for (double a : plan.allocation) sum += a;
        const double drift = std::abs(sum - plan.total) / plan.total;
        worst_conservation = std::max(worst_conservation, drift);
        v.expect(drift <= 1e-15, "capacity drift " + fmt(drift));
        for (int j = 1; j <= kTable2.M; ++j) {
            const double res = plan.residuals[static_cast<std::size_t>(j - 1)];
            worst_residual = std::max(worst_residual, res);
            v.expect(res <= 1e-10, "residual " + fmt(res));
            if (j == 3) continue;
            v.expect(plan.delays.at(j) > kTable2.d0, "CP" + std::to_string(j) + " not slowed");
            v.expect(after.at(j).n < base.at(j).n, "CP" + std::to_string(j) + " kept users");
        }
        const double delta = welfare_delta(kTable2, cps, d0, plan.delays);
        max_delta = std::max(max_delta, delta);
        v.expect(delta < 0.0, "d3=" + fmt(d3) + " welfare delta " + fmt(delta));
    }
    v.detail << "d3 points=" << points << " max welfare delta=" << fmt(max_delta)
             << " max residual=" << fmt(worst_residual)
             << " capacity drift=" << fmt(worst_conservation);
    return v;
}

Verdict calibration_echo() {
    Verdict v;
    const double n2 = masses_default(kTable2, table2_cps()).total_secondary();
    v.expect(std::abs(n2 - 0.48) <= 1e-12, "sum n2 " + fmt(n2));
    v.detail << "sum n2=" << fmt(n2);
    return v;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"oracle equivalence", oracle_equivalence},
        {"numeric vs analytic optimal delay", optimal_delay_agreement},
        {"binding revenue identity", binding_revenue},
        {"prioritization deltas", prioritization_deltas_check},
        {"affordability frontier", affordability_frontier},
        {"welfare signs and methods", welfare_checks},
        {"single-purchase contrast", single_purchase_contrast},
        {"non-uniform reduction", nonuniform_reduction},
        {"uniform menu", uniform_menu},
        {"capacity reallocation", capacity_reallocation_check},
        {"calibration echo", calibration_echo},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "exception: " << e.what();
        }
        failures += v.pass ? 0 : 1;
        std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", index, name.c_str(),
                    v.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", index - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
