// Compiled with -mavx2 -mfma; only entered after a runtime CPU check.
#include "ctrlsynth/kernels/freq_kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace ctrlsynth::kernels::detail {

#if defined(__AVX2__) && defined(__FMA__)

void poly_eval_jw_avx2(std::span<const double> coeffs, std::span<const double> omega,
                       std::span<double> re, std::span<double> im) {
    const size_t n = omega.size();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d w = _mm256_loadu_pd(omega.data() + i);
        __m256d ar = _mm256_setzero_pd();
        __m256d ai = _mm256_setzero_pd();
        for (double c : coeffs) {
            const __m256d next_r = _mm256_fnmadd_pd(ai, w, _mm256_set1_pd(c));
            ai = _mm256_mul_pd(ar, w);
            ar = next_r;
        }
        _mm256_storeu_pd(re.data() + i, ar);
        _mm256_storeu_pd(im.data() + i, ai);
    }
    if (i < n) {
        poly_eval_jw_scalar(coeffs, omega.subspan(i), re.subspan(i), im.subspan(i));
    }
}

void quotient_avx2(std::span<const double> nr, std::span<const double> ni,
                   std::span<const double> dr, std::span<const double> di,
                   std::span<double> magnitude, std::span<double> qr, std::span<double> qi) {
    const size_t n = nr.size();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(nr.data() + i);
        const __m256d b = _mm256_loadu_pd(ni.data() + i);
        const __m256d c = _mm256_loadu_pd(dr.data() + i);
        const __m256d d = _mm256_loadu_pd(di.data() + i);
        const __m256d num2 = _mm256_fmadd_pd(a, a, _mm256_mul_pd(b, b));
        const __m256d den2 = _mm256_fmadd_pd(c, c, _mm256_mul_pd(d, d));
        _mm256_storeu_pd(magnitude.data() + i, _mm256_sqrt_pd(_mm256_div_pd(num2, den2)));
        _mm256_storeu_pd(qr.data() + i, _mm256_fmadd_pd(a, c, _mm256_mul_pd(b, d)));
        _mm256_storeu_pd(qi.data() + i, _mm256_fmsub_pd(b, c, _mm256_mul_pd(a, d)));
    }
    if (i < n) {
        quotient_scalar(nr.subspan(i), ni.subspan(i), dr.subspan(i), di.subspan(i),
                        magnitude.subspan(i), qr.subspan(i), qi.subspan(i));
    }
}

#else

void poly_eval_jw_avx2(std::span<const double> coeffs, std::span<const double> omega,
                       std::span<double> re, std::span<double> im) {
    poly_eval_jw_scalar(coeffs, omega, re, im);
}

void quotient_avx2(std::span<const double> nr, std::span<const double> ni,
                   std::span<const double> dr, std::span<const double> di,
                   std::span<double> magnitude, std::span<double> qr, std::span<double> qi) {
    quotient_scalar(nr, ni, dr, di, magnitude, qr, qi);
}

#endif

}  // namespace ctrlsynth::kernels::detail
