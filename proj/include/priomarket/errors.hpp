#pragma once

#include <stdexcept>
#include <string>

namespace priomarket {

/// Malformed input: bad indices, invariant breaches, schema violations.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A closed form or solver left its domain of validity (negative mass,
/// infeasible capacity, non-convergence).
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, int cp = 0)
        : std::runtime_error(what), cp_(cp) {}

    /// 1-based CP index the failure is attributed to, 0 when not CP-specific.
    int cp() const noexcept { return cp_; }

private:
    int cp_;
};

/// The requested closed form does not apply in the current regime.
class RegimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace priomarket
