#include "cloudradar/trace.hpp"

#include <algorithm>
#include <cmath>

namespace cloudradar {

bool OptTrace::nonincreasing(double slack) const {
    // Descent holds along the whole sequence of accepted iterates, whatever
    // block produced them.
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].objective > rows[i - 1].objective + slack) return false;
    }
    return true;
}

double OptTrace::max_violation() const {
    double v = 0.0;
    for (const auto& r : rows) v = std::max(v, r.max_slack);
    return v;
}

double relative_drop(double before, double after) {
    return (before - after) / std::max(std::abs(before), 1e-300);
}

}  // namespace cloudradar
