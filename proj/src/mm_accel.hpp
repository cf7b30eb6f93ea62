#pragma once

// Squared-extrapolation acceleration for MM fixed-point maps. Every point
// returned is the image of an MM step and has an objective no larger than
// two plain steps from the same start, so descent and feasibility carry over
// from the underlying map.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

namespace cloudradar::detail {

template <class T>
struct MmMap {
    std::function<std::optional<T>(const T&)> step;              // one MM update; nullopt on solver failure
    std::function<double(const T&)> objective;                   // +inf when infeasible
    std::function<T(const T&, double, const T&, double)> combine;  // ca a + cb b
    std::function<double(const T&)> norm;
    std::function<bool(const T&)> valid_anchor;                  // may an extrapolated point anchor a bound
};

inline constexpr int kMaxBacktracks = 8;

template <class T>
struct MmOutcome {
    T point;
    double objective;
};

// Returns nullopt when the first plain step does not decrease the objective.
template <class T>
std::optional<MmOutcome<T>> squarem_cycle(const T& x0, double f0, const MmMap<T>& m) {
    std::optional<T> s1 = m.step(x0);
    if (!s1) return std::nullopt;
    T x1 = std::move(*s1);
    const double f1 = m.objective(x1);
    if (!(f1 <= f0)) return std::nullopt;
    std::optional<T> s2 = m.step(x1);
    const double f2 = s2 ? m.objective(*s2) : std::numeric_limits<double>::infinity();
    if (!(f2 <= f1)) return MmOutcome<T>{std::move(x1), f1};
    T x2 = std::move(*s2);

    const T r = m.combine(x1, 1.0, x0, -1.0);
    const T v = m.combine(m.combine(x2, 1.0, x1, -2.0), 1.0, x0, 1.0);
    const double nv = m.norm(v);
    double alpha = nv > 0.0 ? -m.norm(r) / nv : -1.0;
    // (alpha - 1) / 2 only approaches -1 geometrically; a few halvings are
    // enough before settling for the plain double step.
    for (int tries = 0; tries < kMaxBacktracks && alpha < -1.0; ++tries) {
        const T xp = m.combine(m.combine(x0, 1.0, r, -2.0 * alpha), 1.0, v, alpha * alpha);
        if (m.valid_anchor(xp)) {
            std::optional<T> x3 = m.step(xp);
            if (x3) {
                const double f3 = m.objective(*x3);
                if (f3 <= f2) return MmOutcome<T>{std::move(*x3), f3};
            }
        }
        alpha = 0.5 * (alpha - 1.0);
    }
    // alpha = -1 reproduces x2, so the last resort is a third plain step.
    if (std::optional<T> x3 = m.step(x2)) {
        const double f3 = m.objective(*x3);
        if (f3 <= f2) return MmOutcome<T>{std::move(*x3), f3};
    }
    return MmOutcome<T>{std::move(x2), f2};
}

}  // namespace cloudradar::detail
