#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ctrlsynth {

// Real polynomial with coefficients in descending degree order:
// coeffs[0]*s^n + coeffs[1]*s^(n-1) + ... + coeffs[n].
//
// Leading coefficients smaller than 1e-12 * max|coeff| are trimmed on
// construction. The zero polynomial is stored as a single 0 coefficient.
class Polynomial {
public:
    Polynomial();
    Polynomial(std::initializer_list<double> coeffs);
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial constant(double c) { return Polynomial({c}); }

    [[nodiscard]] int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    [[nodiscard]] std::span<const double> coeffs() const { return coeffs_; }
    [[nodiscard]] const std::vector<double>& coeff_vector() const { return coeffs_; }
    [[nodiscard]] double leading() const { return coeffs_.front(); }
    // Coefficient of s^0.
    [[nodiscard]] double constant_term() const { return coeffs_.back(); }
    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] double max_abs_coeff() const;

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] std::complex<double> operator()(std::complex<double> z) const;

    // Human-readable form, e.g. "3.317 s^2 + 9.951 s".
    [[nodiscard]] std::string to_string(int precision = 6) const;

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void normalize();

    std::vector<double> coeffs_;
};

[[nodiscard]] Polynomial poly_mul(const Polynomial& a, const Polynomial& b);
[[nodiscard]] Polynomial poly_add(const Polynomial& a, const Polynomial& b);
[[nodiscard]] Polynomial poly_scale(const Polynomial& p, double k);

// Roots via eigenvalues of the balanced companion matrix. Throws
// std::domain_error("constant polynomial") when degree < 1.
[[nodiscard]] std::vector<std::complex<double>> poly_roots(const Polynomial& p);

// |p(r)| / (max|coeff| * max(1,|r|)^deg), the scaled residual used to judge a root.
[[nodiscard]] double root_residual(const Polynomial& p, std::complex<double> r);

}  // namespace ctrlsynth
