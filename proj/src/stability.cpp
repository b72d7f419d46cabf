#include "ctrlsynth/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ctrlsynth {

const char* to_string(StabilityMethod m) {
    switch (m) {
    case StabilityMethod::routh: return "routh";
    case StabilityMethod::roots: return "roots";
    case StabilityMethod::simulation: return "simulation";
    }
    return "unknown";
}

StabilityVerdict roots_stable(const Polynomial& p) {
    if (p.degree() < 1) {
        throw std::domain_error("constant polynomial");
    }
    StabilityVerdict v;
    v.method = StabilityMethod::roots;
    v.max_real_part = -std::numeric_limits<double>::infinity();
    for (const auto& r : poly_roots(p)) {
        v.max_real_part = std::max(v.max_real_part, r.real());
        if (std::abs(r.real()) < kBoundaryMargin) {
            v.near_boundary = true;
        }
    }
    // A root this close to the axis is marginal, not asymptotically stable.
    v.stable = v.max_real_part < 0.0 && !v.near_boundary;
    return v;
}

StabilityVerdict routh_stable(const Polynomial& p) {
    const int n = p.degree();
    if (n < 1) {
        throw std::domain_error("constant polynomial");
    }
    constexpr double kEpsilon = 1e-12;
    constexpr double kSmallPivot = 1e-9;

    const double scale = p.max_abs_coeff();
    const auto c = p.coeffs();
    const size_t width = static_cast<size_t>(n / 2 + 1);
    std::vector<double> upper(width, 0.0);
    std::vector<double> lower(width, 0.0);
    for (size_t i = 0; i < c.size(); ++i) {
        (i % 2 == 0 ? upper : lower)[i / 2] = c[i] / scale;
    }

    const double lead_sign = upper[0] > 0 ? 1.0 : -1.0;
    bool all_same_sign = true;
    bool small_pivot = false;

    // Rows s^n and s^(n-1) are seeded from the coefficients; each further row
    // is formed from the two above it.
    for (int row = 1; row <= n; ++row) {
        double row_max = 0.0;
        for (double x : lower) {
            row_max = std::max(row_max, std::abs(x));
        }
        double pivot = lower[0];
        if (std::abs(pivot) <= kSmallPivot * std::max(row_max, 1.0)) {
            small_pivot = true;
        }
        if (pivot == 0.0) {
            pivot = kEpsilon;
            lower[0] = pivot;
        }
        if (pivot * lead_sign <= 0.0) {
            all_same_sign = false;
        }
        if (row == n) {
            break;
        }
        std::vector<double> next(width, 0.0);
        for (size_t j = 0; j + 1 < width; ++j) {
            next[j] = (lower[0] * upper[j + 1] - upper[0] * lower[j + 1]) / lower[0];
        }
        upper = std::move(lower);
        lower = std::move(next);
    }

    StabilityVerdict roots = roots_stable(p);
    if (small_pivot || roots.near_boundary) {
        return roots;
    }
    roots.method = StabilityMethod::routh;
    roots.stable = all_same_sign;
    return roots;
}

}  // namespace ctrlsynth
