#pragma once

#include <string>

namespace priomarket {

/// Per-user, per-traffic-unit cost of serving a fast lane at delay d.
/// Must satisfy C(d0) = 0, decreasing and convex on (0, d0], C -> inf as d -> 0.
struct CostModel {
    enum class Family { Reciprocal };

    Family family = Family::Reciprocal;
    double c = 1.0;

    static CostModel reciprocal(double c) { return {Family::Reciprocal, c}; }

    /// C(d) = c (1/d - 1/d0) for the reciprocal family.
    double cost(double d, double d0) const;
    /// C'(d).
    double derivative(double d, double d0) const;

    void validate() const;
    std::string family_name() const;

    bool operator==(const CostModel&) const = default;
};

} // namespace priomarket
