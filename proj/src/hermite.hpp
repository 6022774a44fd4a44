#pragma once

// Cubic Hermite helpers shared by the integrator and crossing search.

#include <cmath>
#include <optional>

namespace kgbohm::detail {

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

/// Scalar cubic Hermite interpolant on [0, h] in the unit variable t = theta/h.
struct Hermite {
    double y0, y1, m0, m1, h;

    double value(double t) const
    {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * y1 +
               (t3 - t2) * h * m1;
    }

    /// d/dtheta (not d/dt).
    double slope(double t) const
    {
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * m0 + (-6 * t2 + 6 * t) * y1 +
                (3 * t2 - 2 * t) * h * m1) /
               h;
    }

    /// Smallest t in (0,1) at an interior extremum whose value lies strictly on
    /// the side opposite to `side`.
    std::optional<double> excursion(int side) const
    {
        const double A = 6 * y0 + 3 * h * m0 - 6 * y1 + 3 * h * m1;
        const double B = -6 * y0 - 4 * h * m0 + 6 * y1 - 2 * h * m1;
        const double C = h * m0;
        double roots[2];
        int count = 0;
        if (std::abs(A) < 1e-300) {
            if (std::abs(B) > 1e-300) {
                roots[count++] = -C / B;
            }
        } else {
            const double disc = B * B - 4 * A * C;
            if (disc >= 0) {
                const double sq = std::sqrt(disc);
                const double q = -0.5 * (B + (B >= 0 ? sq : -sq));
                roots[count++] = q / A;
                if (q != 0.0) {
                    roots[count++] = C / q;
                }
            }
        }
        std::optional<double> best;
        for (int i = 0; i < count; ++i) {
            const double t = roots[i];
            if (t > 0.0 && t < 1.0 && sign_of(value(t)) == -side) {
                if (!best || t < *best) {
                    best = t;
                }
            }
        }
        return best;
    }
};

}  // namespace kgbohm::detail
