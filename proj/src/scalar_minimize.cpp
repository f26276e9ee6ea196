#include "priomarket/scalar_minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "priomarket/errors.hpp"

namespace priomarket {

namespace {

double finite_or_inf(double v) {
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

} // namespace

ScalarMinimum bounded_minimize(const std::function<double(double)>& f, double lo, double hi,
                               const ScalarMinimizeOptions& options) {
    if (!(lo <= hi)) throw InputError("bounded_minimize: empty interval");
    const int points = std::max(2, options.grid_points);
    const double step = (hi - lo) / (points - 1);

    int best_i = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
        const double x = (i == points - 1) ? hi : lo + step * i;
        const double v = finite_or_inf(f(x));
        if (v < best_v) {
            best_v = v;
            best_i = i;
        }
    }
    if (!std::isfinite(best_v))
        throw InfeasibleError("bounded_minimize: objective is undefined on the whole interval");

    const double best_x = (best_i == points - 1) ? hi : lo + step * best_i;
    double a = std::max(lo, best_x - step);
    double b = std::min(hi, best_x + step);

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = finite_or_inf(f(c));
    double fd = finite_or_inf(f(d));
    while (b - a > options.x_tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = finite_or_inf(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = finite_or_inf(f(d));
        }
        // Bracket can no longer shrink in floating point.
        if (c >= d) break;
    }

    ScalarMinimum out{best_x, best_v};
    const double mid = 0.5 * (a + b);
    const double f_mid = finite_or_inf(f(mid));
    if (f_mid < out.value) out = {mid, f_mid};
    if (fc < out.value) out = {c, fc};
    if (fd < out.value) out = {d, fd};
    return out;
}

} // namespace priomarket
