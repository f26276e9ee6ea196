#pragma once

#include <functional>

namespace priomarket {

struct ScalarMinimum {
    double x;
    double value;
};

struct ScalarMinimizeOptions {
    int grid_points = 256;
    /// Absolute bracket width at which golden-section refinement stops.
    double x_tolerance = 1e-10;
};

/// Minimizes f over [lo, hi]: evaluates a uniform grid, brackets the best
/// grid point by its neighbours, then refines the bracket by golden-section
/// search. Non-finite values are treated as +inf. Throws InfeasibleError when
/// f is non-finite everywhere on the grid.
ScalarMinimum bounded_minimize(const std::function<double(double)>& f, double lo, double hi,
                               const ScalarMinimizeOptions& options = {});

} // namespace priomarket
