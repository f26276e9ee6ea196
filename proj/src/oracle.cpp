#include "priomarket/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "parallel.hpp"

namespace priomarket {

namespace {

constexpr int kChunk = 8192;

struct Tally {
    std::vector<std::int64_t> primary;
    std::vector<std::int64_t> secondary;
    double welfare = 0.0;
    int opt_outs = 0;
    int violations = 0;
};

} // namespace

double default_oracle_tolerance(int N) { return std::max(1e-3, 10.0 / N); }

Simulation simulate_users(const MarketParams& params, std::span<const CPProfile> cps,
                          const DelayProfile& delays, int N) {
    params.validate();
    validate_cps(params, cps);
    validate_delays(params, delays);
    if (N < 10001 || N % 2 == 0) throw InputError("simulate_users: N must be odd and >= 10001");

    const int M = params.M;
    const double h = 1.0 / (N - 1);
    const double reach = params.spacing() + 1e-12;
    auto position = [&](int i) { return i == N - 1 ? 1.0 : i * h; };

    const int chunks = (N + kChunk - 1) / kChunk;
    std::vector<Tally> tallies(static_cast<std::size_t>(chunks));
    detail::parallel_for(chunks, [&](int c) {
        auto& tally = tallies[static_cast<std::size_t>(c)];
        tally.primary.assign(static_cast<std::size_t>(M), 0);
        tally.secondary.assign(static_cast<std::size_t>(M), 0);
        const int begin = c * kChunk;
        const int end = std::min(N, begin + kChunk);
        for (int i = begin; i < end; ++i) {
            const double x = position(i);
            const auto b = best_bundle(x, params, cps, delays);
            double u = 0.0;
            if (b.kind() == Bundle::Kind::OptOut) {
                ++tally.opt_outs;
            } else {
                u = bundle_utility(x, b, params, cps, delays) + params.F;
                ++tally.primary[static_cast<std::size_t>(b.primary() - 1)];
                bool far = std::abs(x - cp_position(b.primary(), M)) > reach;
                if (b.kind() == Bundle::Kind::Dual) {
                    ++tally.secondary[static_cast<std::size_t>(b.secondary() - 1)];
                    far = far || std::abs(x - cp_position(b.secondary(), M)) > reach;
                }
                if (far) ++tally.violations;
            }
            const double weight = (i == 0 || i == N - 1) ? 0.5 : 1.0;
            tally.welfare += weight * h * u;
        }
    });

    Simulation sim;
    sim.N = N;
    std::vector<std::int64_t> primary(static_cast<std::size_t>(M), 0);
    std::vector<std::int64_t> secondary(static_cast<std::size_t>(M), 0);
    for (const auto& tally : tallies) {
        for (std::size_t k = 0; k < primary.size(); ++k) {
            primary[k] += tally.primary[k];
            secondary[k] += tally.secondary[k];
        }
        sim.welfare += tally.welfare;
        sim.opt_outs += tally.opt_outs;
        sim.adjacency_violations += tally.violations;
    }
    sim.masses.cp.resize(static_cast<std::size_t>(M));
    for (std::size_t k = 0; k < primary.size(); ++k) {
        auto& m = sim.masses.cp[k];
        m.n1 = static_cast<double>(primary[k]) / N;
        m.n2 = static_cast<double>(secondary[k]) / N;
        m.n = static_cast<double>(primary[k] + secondary[k]) / N;
    }
    return sim;
}

OracleReport compare_masses(const MassBreakdown& analytic, const Simulation& empirical,
                            double tol) {
    if (analytic.cp.size() != empirical.masses.cp.size())
        throw InputError("compare_masses: CP counts differ");
    OracleReport report;
    report.empirical = empirical.masses;
    report.N = empirical.N;
    report.adjacency_violations = empirical.adjacency_violations;
    report.tolerance = tol > 0.0 ? tol : default_oracle_tolerance(std::max(1, empirical.N));
    for (std::size_t k = 0; k < analytic.cp.size(); ++k) {
        const auto& a = analytic.cp[k];
        const auto& e = empirical.masses.cp[k];
        CpMasses err{std::abs(a.n - e.n), std::abs(a.n1 - e.n1), std::abs(a.n2 - e.n2)};
        report.max_error = std::max({report.max_error, err.n, err.n1, err.n2});
        report.errors.push_back(err);
    }
    report.pass = report.max_error <= report.tolerance;
    return report;
}

int adjacency_check(const MarketParams& params, std::span<const CPProfile> cps,
                    const DelayProfile& delays, int N) {
    return simulate_users(params, cps, delays, N).adjacency_violations;
}

OracleReport run_oracle(const MarketParams& params, std::span<const CPProfile> cps,
                        const DelayProfile& delays, int N, double tol) {
    const auto sim = simulate_users(params, cps, delays, N);
    return compare_masses(masses_multi(params, cps, delays), sim, tol);
}

} // namespace priomarket
