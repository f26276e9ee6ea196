#pragma once

#include <span>
#include <string>
#include <vector>

#include "priomarket/market_model.hpp"

namespace priomarket {

enum class WelfareMethod { Closed, Numeric };

std::string to_string(WelfareMethod method);

struct WelfareReport {
    double total = 0.0;
    std::vector<double> segments; ///< segment k lies between CP k+1 and CP k+2
    WelfareMethod method = WelfareMethod::Closed;
    bool includes_access_fee = false;
};

/// Closed-form welfare of the users between CP j and CP j+1 at delays d_j, d_k.
/// Requires theta > 0.
double segment_welfare_closed(const MarketParams& params, std::span<const CPProfile> cps, int j,
                              double d_j, double d_k);

WelfareReport total_welfare_closed(const MarketParams& params, std::span<const CPProfile> cps,
                                   const DelayProfile& delays);

/// Trapezoidal integral over N equally spaced users of the utility of their
/// best bundle, access fee excluded; opt-outs contribute 0. N >= 1001.
WelfareReport total_welfare_numeric(const MarketParams& params, std::span<const CPProfile> cps,
                                    const DelayProfile& delays, int N = 100001);

/// post - pre welfare by the chosen method.
double welfare_delta(const MarketParams& params, std::span<const CPProfile> cps,
                     const DelayProfile& pre, const DelayProfile& post,
                     WelfareMethod method = WelfareMethod::Closed, int N = 100001);

} // namespace priomarket
