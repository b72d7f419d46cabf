#include <cmath>

#include "ctrlsynth/kernels/freq_kernels.hpp"

namespace ctrlsynth::kernels::detail {

void poly_eval_jw_scalar(std::span<const double> coeffs, std::span<const double> omega,
                         std::span<double> re, std::span<double> im) {
    for (size_t i = 0; i < omega.size(); ++i) {
        const double w = omega[i];
        double ar = 0.0;
        double ai = 0.0;
        // (ar + j ai) * (j w) + c
        for (double c : coeffs) {
            const double nr = std::fma(-ai, w, c);
            ai = ar * w;
            ar = nr;
        }
        re[i] = ar;
        im[i] = ai;
    }
}

void quotient_scalar(std::span<const double> nr, std::span<const double> ni,
                     std::span<const double> dr, std::span<const double> di,
                     std::span<double> magnitude, std::span<double> qr, std::span<double> qi) {
    for (size_t i = 0; i < nr.size(); ++i) {
        const double num2 = std::fma(nr[i], nr[i], ni[i] * ni[i]);
        const double den2 = std::fma(dr[i], dr[i], di[i] * di[i]);
        magnitude[i] = std::sqrt(num2 / den2);
        qr[i] = std::fma(nr[i], dr[i], ni[i] * di[i]);
        qi[i] = std::fma(ni[i], dr[i], -(nr[i] * di[i]));
    }
}

}  // namespace ctrlsynth::kernels::detail
