#pragma once

#include <vector>

#include "priomarket/market_model.hpp"

namespace testutil {

inline priomarket::MarketParams table2() { return priomarket::MarketParams{}; }

inline std::vector<priomarket::CPProfile> table2_cps() {
    return priomarket::uniform_cps(table2(), 10.0, 2.27);
}

/// Defaults with CP `j` at delay d, others at d0.
inline priomarket::DelayProfile one_fast(int j, double d) {
    auto delays = priomarket::DelayProfile::uniform(table2());
    delays.at(j) = d;
    return delays;
}

} // namespace testutil
