#include "priomarket/cost_model.hpp"

#include <cmath>

#include "priomarket/errors.hpp"

namespace priomarket {

double CostModel::cost(double d, double d0) const {
    switch (family) {
    case Family::Reciprocal: return c * (1.0 / d - 1.0 / d0);
    }
    throw InputError("cost: unknown family");
}

double CostModel::derivative(double d, double /*d0*/) const {
    switch (family) {
    case Family::Reciprocal: return -c / (d * d);
    }
    throw InputError("cost: unknown family");
}

void CostModel::validate() const {
    if (!std::isfinite(c) || c < 0.0) throw InputError("cost.c must be >= 0");
}

std::string CostModel::family_name() const {
    switch (family) {
    case Family::Reciprocal: return "reciprocal";
    }
    return "?";
}

} // namespace priomarket
