#pragma once

#include <complex>
#include <string>

#include "ctrlsynth/polynomial.hpp"

namespace ctrlsynth {

// Rational SISO model num(s)/den(s) with an optional transport delay
// e^{-delay*s}. The constructor rejects improper models and negative delays.
class TransferFunction {
public:
    TransferFunction() : num_(Polynomial::constant(1.0)), den_(Polynomial::constant(1.0)) {}
    TransferFunction(Polynomial num, Polynomial den, double delay = 0.0);

    static TransferFunction gain(double k) { return {Polynomial::constant(k), Polynomial::constant(1.0)}; }
    static TransferFunction pure_delay(double theta) {
        return {Polynomial::constant(1.0), Polynomial::constant(1.0), theta};
    }

    [[nodiscard]] const Polynomial& num() const { return num_; }
    [[nodiscard]] const Polynomial& den() const { return den_; }
    [[nodiscard]] double delay() const { return delay_; }
    [[nodiscard]] bool has_delay() const { return delay_ > 0.0; }
    [[nodiscard]] int order() const { return den_.degree(); }

    // Exact evaluation including the delay term.
    [[nodiscard]] std::complex<double> operator()(std::complex<double> s) const;
    [[nodiscard]] std::complex<double> at_frequency(double omega) const { return (*this)({0.0, omega}); }

    // e.g. "19.95 / (s + 0.3897)" or "8.79 e^(-0.14 s) / (s + 4)".
    [[nodiscard]] std::string to_string(int precision = 6) const;

    friend bool operator==(const TransferFunction&, const TransferFunction&) = default;

private:
    Polynomial num_;
    Polynomial den_;
    double delay_ = 0.0;
};

// L = a*b with delays summed. Common factors are not cancelled.
[[nodiscard]] TransferFunction tf_series(const TransferFunction& a, const TransferFunction& b);

// T = L/(1+L) for a delay-free loop. Throws std::invalid_argument when
// L carries a delay.
[[nodiscard]] TransferFunction tf_feedback_unity(const TransferFunction& loop);

// num(0)/den(0); +-infinity for an uncancelled integrator. Throws
// std::domain_error when both vanish.
[[nodiscard]] double tf_dc_gain(const TransferFunction& g);

// Third-order Pade rational approximation of e^{-theta*s}.
[[nodiscard]] TransferFunction pade3(double theta);

// Replaces the delay of g by its Pade(3) approximation.
[[nodiscard]] TransferFunction rationalize_delay(const TransferFunction& g);

}  // namespace ctrlsynth
