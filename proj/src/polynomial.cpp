#include "ctrlsynth/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

namespace ctrlsynth {

namespace {

constexpr double kTrimRelative = 1e-12;

// Parlett-Reinsch style balancing with power-of-two scalings, so the
// similarity transform introduces no rounding.
void balance_companion(Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    constexpr double gamma = 0.95;
    bool changed = true;
    for (int sweep = 0; changed && sweep < 100; ++sweep) {
        changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double row_norm = m.row(i).lpNorm<1>() - std::abs(m(i, i));
            const double col_norm = m.col(i).lpNorm<1>() - std::abs(m(i, i));
            if (row_norm == 0.0 || col_norm == 0.0) {
                continue;
            }
            int exponent = 0;
            std::frexp(row_norm / col_norm, &exponent);
            exponent /= 2;
            if (exponent == 0) {
                continue;
            }
            const double scaled_col = std::ldexp(col_norm, exponent);
            const double scaled_row = std::ldexp(row_norm, -exponent);
            if (scaled_col + scaled_row < gamma * (col_norm + row_norm)) {
                m.col(i) *= std::ldexp(1.0, exponent);
                m.row(i) *= std::ldexp(1.0, -exponent);
                changed = true;
            }
        }
    }
}

}  // namespace

Polynomial::Polynomial() : coeffs_{0.0} {}

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { normalize(); }

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { normalize(); }

void Polynomial::normalize() {
    if (coeffs_.empty()) {
        coeffs_.push_back(0.0);
        return;
    }
    for (double c : coeffs_) {
        if (!std::isfinite(c)) {
            throw std::invalid_argument("polynomial coefficient is not finite");
        }
    }
    const double scale = max_abs_coeff();
    if (scale == 0.0) {
        coeffs_.assign(1, 0.0);
        return;
    }
    const double cutoff = kTrimRelative * scale;
    auto first = std::find_if(coeffs_.begin(), coeffs_.end(),
                              [cutoff](double c) { return std::abs(c) > cutoff; });
    coeffs_.erase(coeffs_.begin(), first);
}

bool Polynomial::is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

double Polynomial::max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

double Polynomial::operator()(double x) const {
    double acc = 0.0;
    for (double c : coeffs_) {
        acc = acc * x + c;
    }
    return acc;
}

std::complex<double> Polynomial::operator()(std::complex<double> z) const {
    std::complex<double> acc = 0.0;
    for (double c : coeffs_) {
        acc = acc * z + c;
    }
    return acc;
}

std::string Polynomial::to_string(int precision) const {
    std::string out;
    const int n = degree();
    char buf[64];
    for (int i = 0; i <= n; ++i) {
        const double c = coeffs_[static_cast<size_t>(i)];
        const int power = n - i;
        if (c == 0.0 && n > 0) {
            continue;
        }
        if (!out.empty()) {
            out += c < 0 ? " - " : " + ";
        } else if (c < 0) {
            out += "-";
        }
        const double mag = std::abs(c);
        const bool unit = mag == 1.0 && power > 0;
        if (!unit) {
            std::snprintf(buf, sizeof buf, "%.*g", precision, mag);
            out += buf;
            if (power > 0) {
                out += " ";
            }
        }
        if (power == 1) {
            out += "s";
        } else if (power > 1) {
            out += "s^" + std::to_string(power);
        }
    }
    return out.empty() ? "0" : out;
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
    const auto ca = a.coeffs();
    const auto cb = b.coeffs();
    std::vector<double> out(ca.size() + cb.size() - 1, 0.0);
    for (size_t i = 0; i < ca.size(); ++i) {
        for (size_t j = 0; j < cb.size(); ++j) {
            out[i + j] += ca[i] * cb[j];
        }
    }
    return Polynomial(std::move(out));
}

Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
    const auto ca = a.coeffs();
    const auto cb = b.coeffs();
    const size_t n = std::max(ca.size(), cb.size());
    std::vector<double> out(n, 0.0);
    // Align on the constant term.
    for (size_t i = 0; i < ca.size(); ++i) {
        out[n - ca.size() + i] += ca[i];
    }
    for (size_t i = 0; i < cb.size(); ++i) {
        out[n - cb.size() + i] += cb[i];
    }
    return Polynomial(std::move(out));
}

Polynomial poly_scale(const Polynomial& p, double k) {
    std::vector<double> out(p.coeffs().begin(), p.coeffs().end());
    for (double& c : out) {
        c *= k;
    }
    return Polynomial(std::move(out));
}

std::vector<std::complex<double>> poly_roots(const Polynomial& p) {
    const int n = p.degree();
    if (n < 1) {
        throw std::domain_error("constant polynomial");
    }
    const auto c = p.coeffs();
    std::vector<std::complex<double>> roots;
    roots.reserve(static_cast<size_t>(n));

    // Exact zero roots are peeled off; the companion matrix would otherwise
    // carry a zero column that balancing cannot scale.
    int trailing_zeros = 0;
    while (trailing_zeros < n && c[static_cast<size_t>(n - trailing_zeros)] == 0.0) {
        ++trailing_zeros;
    }
    roots.insert(roots.end(), static_cast<size_t>(trailing_zeros), {0.0, 0.0});
    const int m = n - trailing_zeros;
    if (m == 0) {
        return roots;
    }
    if (m == 1) {
        roots.emplace_back(-c[1] / c[0], 0.0);
        return roots;
    }

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        companion(0, j) = -c[static_cast<size_t>(j + 1)] / c[0];
    }
    for (int i = 1; i < m; ++i) {
        companion(i, i - 1) = 1.0;
    }
    balance_companion(companion);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("companion eigenvalue iteration did not converge");
    }
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        roots.push_back(ev[i]);
    }
    return roots;
}

double root_residual(const Polynomial& p, std::complex<double> r) {
    const double scale = p.max_abs_coeff() * std::pow(std::max(1.0, std::abs(r)), p.degree());
    return std::abs(p(r)) / scale;
}

}  // namespace ctrlsynth
