#pragma once

#include <span>

namespace ctrlsynth::kernels {

// Instruction-set variants of the frequency-sweep kernels. `scalar` is the
// reference; every other variant must agree with it to rounding.
enum class Isa { scalar, avx2 };

[[nodiscard]] const char* to_string(Isa isa);

// Best variant the running CPU supports. CTRLSYNTH_ISA=scalar in the
// environment pins the reference path.
[[nodiscard]] Isa detect_isa();
[[nodiscard]] bool isa_available(Isa isa);

// p(j*omega[i]) for every i. coeffs are in descending degree order.
// All output spans must have omega.size() elements.
void poly_eval_jw(std::span<const double> coeffs, std::span<const double> omega,
                  std::span<double> re, std::span<double> im);
void poly_eval_jw(Isa isa, std::span<const double> coeffs, std::span<const double> omega,
                  std::span<double> re, std::span<double> im);

// Magnitude and principal phase (radians, in (-pi, pi]) of
// num(jw)/den(jw) * e^{-jw*delay}. A vanishing denominator gives an
// infinite magnitude and zero phase.
void rational_response(std::span<const double> num, std::span<const double> den, double delay,
                       std::span<const double> omega, std::span<double> magnitude,
                       std::span<double> phase);
void rational_response(Isa isa, std::span<const double> num, std::span<const double> den,
                       double delay, std::span<const double> omega, std::span<double> magnitude,
                       std::span<double> phase);

namespace detail {

void poly_eval_jw_scalar(std::span<const double> coeffs, std::span<const double> omega,
                         std::span<double> re, std::span<double> im);
void poly_eval_jw_avx2(std::span<const double> coeffs, std::span<const double> omega,
                       std::span<double> re, std::span<double> im);

// |n|/|d| and the real/imag parts of n*conj(d), given n(jw) and d(jw).
void quotient_scalar(std::span<const double> nr, std::span<const double> ni,
                     std::span<const double> dr, std::span<const double> di,
                     std::span<double> magnitude, std::span<double> qr, std::span<double> qi);
void quotient_avx2(std::span<const double> nr, std::span<const double> ni,
                   std::span<const double> dr, std::span<const double> di,
                   std::span<double> magnitude, std::span<double> qr, std::span<double> qi);

}  // namespace detail

}  // namespace ctrlsynth::kernels
