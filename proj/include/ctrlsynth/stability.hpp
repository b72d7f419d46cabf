#pragma once

#include "ctrlsynth/polynomial.hpp"

namespace ctrlsynth {

enum class StabilityMethod { routh, roots, simulation };

[[nodiscard]] const char* to_string(StabilityMethod m);

struct StabilityVerdict {
    bool stable = false;
    // Largest real part over the roots of the rational characteristic polynomial.
    double max_real_part = 0.0;
    StabilityMethod method = StabilityMethod::routh;
    // Some root lies within kBoundaryMargin of the imaginary axis.
    bool near_boundary = false;
};

// Roots with |Re| below this are reported as boundary cases and make the
// verdict unstable.
inline constexpr double kBoundaryMargin = 1e-6;

// Routh-Hurwitz sign test on the first column. A vanishing pivot is replaced
// by 1e-12; whenever some pivot falls below 1e-9 (relative to its row), or a
// root lies within kBoundaryMargin of the axis, the verdict is taken from the
// roots instead and method is set to `roots`.
[[nodiscard]] StabilityVerdict routh_stable(const Polynomial& p);

// Stability from the sign of the largest root real part.
[[nodiscard]] StabilityVerdict roots_stable(const Polynomial& p);

}  // namespace ctrlsynth
