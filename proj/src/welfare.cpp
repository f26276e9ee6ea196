#include "priomarket/welfare.hpp"

#include <algorithm>

#include "parallel.hpp"

namespace priomarket {

namespace {

constexpr int kChunk = 8192;

} // namespace

std::string to_string(WelfareMethod method) {
    return method == WelfareMethod::Closed ? "closed" : "numeric";
}

double segment_welfare_closed(const MarketParams& params, std::span<const CPProfile> cps, int j,
                              double d_j, double d_k) {
    if (j < 1 || j >= params.M) throw InputError("segment_welfare_closed: j must lie in 1..M-1");
    const double w = params.spacing();
    const double theta = params.theta;
    const double tau_j = thresholds(params, cps[static_cast<std::size_t>(j - 1)], d_j).secondary;
    const double tau_k = thresholds(params, cps[static_cast<std::size_t>(j)], d_k).secondary;
    const double gap = d_k - d_j;
    return (1.0 - theta) * (w * (params.V - 0.5 * (d_j + d_k) - 0.5 * params.t * w) +
                            gap * gap / (4.0 * params.t)) +
           theta * 0.5 * params.t * (tau_j * tau_j + tau_k * tau_k);
}

WelfareReport total_welfare_closed(const MarketParams& params, std::span<const CPProfile> cps,
                                   const DelayProfile& delays) {
    params.validate();
    validate_cps(params, cps);
    validate_delays(params, delays);
    WelfareReport out;
    out.method = WelfareMethod::Closed;
    for (int j = 1; j < params.M; ++j) {
        const double w = segment_welfare_closed(params, cps, j, delays.at(j), delays.at(j + 1));
        out.segments.push_back(w);
        out.total += w;
    }
    return out;
}

WelfareReport total_welfare_numeric(const MarketParams& params, std::span<const CPProfile> cps,
                                    const DelayProfile& delays, int N) {
    params.validate();
    validate_cps(params, cps);
    validate_delays(params, delays);
    if (N < 1001) throw InputError("total_welfare_numeric: N must be >= 1001");

    const int M = params.M;
    const double h = 1.0 / (N - 1);
    auto position = [&](int i) { return i == N - 1 ? 1.0 : i * h; };
    auto utility = [&](int i) {
        const double x = position(i);
        const auto b = best_bundle(x, params, cps, delays);
        if (b.kind() == Bundle::Kind::OptOut) return 0.0;
        return bundle_utility(x, b, params, cps, delays) + params.F;
    };

    // Interval i spans [x_i, x_{i+1}] and belongs to the segment holding its midpoint.
    const int intervals = N - 1;
    const int chunks = (intervals + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(chunks));
    detail::parallel_for(chunks, [&](int c) {
        auto& seg = partial[static_cast<std::size_t>(c)];
        seg.assign(static_cast<std::size_t>(M - 1), 0.0);
        const int begin = c * kChunk;
        const int end = std::min(intervals, begin + kChunk);
        double left = utility(begin);
        for (int i = begin; i < end; ++i) {
            const double right = utility(i + 1);
            const double mid = 0.5 * (position(i) + position(i + 1));
            const int k = std::min(M - 2, static_cast<int>(mid * (M - 1)));
            seg[static_cast<std::size_t>(k)] += 0.5 * h * (left + right);
            left = right;
        }
    });

    WelfareReport out;
    out.method = WelfareMethod::Numeric;
    out.segments.assign(static_cast<std::size_t>(M - 1), 0.0);
    for (const auto& seg : partial)
        for (std::size_t k = 0; k < seg.size(); ++k) out.segments[k] += seg[k];
    for (double w : out.segments) out.total += w;
    return out;
}

double welfare_delta(const MarketParams& params, std::span<const CPProfile> cps,
                     const DelayProfile& pre, const DelayProfile& post, WelfareMethod method,
                     int N) {
    if (method == WelfareMethod::Closed) {
        return total_welfare_closed(params, cps, post).total -
               total_welfare_closed(params, cps, pre).total;
    }
    return total_welfare_numeric(params, cps, post, N).total -
           total_welfare_numeric(params, cps, pre, N).total;
}

} // namespace priomarket
