#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ctrlsynth/kernels/freq_kernels.hpp"

namespace ctrlsynth::kernels {

const char* to_string(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

Isa detect_isa() {
    static const Isa cached = [] {
        if (const char* env = std::getenv("CTRLSYNTH_ISA"); env && std::strcmp(env, "scalar") == 0) {
            return Isa::scalar;
        }
        return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
    }();
    return cached;
}

namespace {

void check_sizes(size_t n, std::span<double> a, std::span<double> b) {
    if (a.size() != n || b.size() != n) {
        throw std::invalid_argument("kernel output spans must match omega.size()");
    }
}

}  // namespace

void poly_eval_jw(Isa isa, std::span<const double> coeffs, std::span<const double> omega,
                  std::span<double> re, std::span<double> im) {
    check_sizes(omega.size(), re, im);
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::poly_eval_jw_avx2(coeffs, omega, re, im);
    } else {
        detail::poly_eval_jw_scalar(coeffs, omega, re, im);
    }
}

void poly_eval_jw(std::span<const double> coeffs, std::span<const double> omega,
                  std::span<double> re, std::span<double> im) {
    poly_eval_jw(detect_isa(), coeffs, omega, re, im);
}

void rational_response(Isa isa, std::span<const double> num, std::span<const double> den,
                       double delay, std::span<const double> omega, std::span<double> magnitude,
                       std::span<double> phase) {
    const size_t n = omega.size();
    check_sizes(n, magnitude, phase);
    std::vector<double> work(4 * n);
    std::span<double> nr(work.data(), n);
    std::span<double> ni(work.data() + n, n);
    std::span<double> dr(work.data() + 2 * n, n);
    std::span<double> di(work.data() + 3 * n, n);
    poly_eval_jw(isa, num, omega, nr, ni);
    poly_eval_jw(isa, den, omega, dr, di);
    std::vector<double> qr(n);
    std::vector<double> qi(n);
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::quotient_avx2(nr, ni, dr, di, magnitude, qr, qi);
    } else {
        detail::quotient_scalar(nr, ni, dr, di, magnitude, qr, qi);
    }
    for (size_t i = 0; i < n; ++i) {
        if (dr[i] == 0.0 && di[i] == 0.0) {
            magnitude[i] = std::numeric_limits<double>::infinity();
            phase[i] = 0.0;
            continue;
        }
        double ph = std::atan2(qi[i], qr[i]);
        if (delay > 0.0) {
            ph = std::remainder(ph - omega[i] * delay, 2.0 * std::numbers::pi);
        }
        phase[i] = ph;
    }
}

void rational_response(std::span<const double> num, std::span<const double> den, double delay,
                       std::span<const double> omega, std::span<double> magnitude,
                       std::span<double> phase) {
    rational_response(detect_isa(), num, den, delay, omega, magnitude, phase);
}

}  // namespace ctrlsynth::kernels
