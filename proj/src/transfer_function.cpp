#include "ctrlsynth/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ctrlsynth {

TransferFunction::TransferFunction(Polynomial num, Polynomial den, double delay)
    : num_(std::move(num)), den_(std::move(den)), delay_(delay) {
    if (den_.is_zero()) {
        throw std::invalid_argument("transfer function denominator is identically zero");
    }
    if (!(delay_ >= 0.0) || !std::isfinite(delay_)) {
        throw std::invalid_argument("transfer function delay must be finite and nonnegative");
    }
    if (!num_.is_zero() && num_.degree() > den_.degree()) {
        throw std::invalid_argument("transfer function is improper (deg num > deg den)");
    }
}

std::complex<double> TransferFunction::operator()(std::complex<double> s) const {
    std::complex<double> value = num_(s) / den_(s);
    if (delay_ > 0.0) {
        value *= std::exp(-delay_ * s);
    }
    return value;
}

namespace {

std::string wrap_factor(const Polynomial& p, int precision) {
    std::string text = p.to_string(precision);
    const auto nonzero = std::count_if(p.coeffs().begin(), p.coeffs().end(),
                                       [](double c) { return c != 0.0; });
    return nonzero > 1 ? "(" + text + ")" : text;
}

}  // namespace

std::string TransferFunction::to_string(int precision) const {
    std::string out = wrap_factor(num_, precision);
    if (delay_ > 0.0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " e^(-%.*g s)", precision, delay_);
        out += buf;
    }
    out += " / " + wrap_factor(den_, precision);
    return out;
}

TransferFunction tf_series(const TransferFunction& a, const TransferFunction& b) {
    return {poly_mul(a.num(), b.num()), poly_mul(a.den(), b.den()), a.delay() + b.delay()};
}

TransferFunction tf_feedback_unity(const TransferFunction& loop) {
    if (loop.has_delay()) {
        throw std::invalid_argument("rational feedback requires delay-free loop");
    }
    return {loop.num(), poly_add(loop.den(), loop.num())};
}

double tf_dc_gain(const TransferFunction& g) {
    const double n0 = g.num().constant_term();
    const double d0 = g.den().constant_term();
    if (d0 == 0.0) {
        if (n0 == 0.0) {
            throw std::domain_error("cancel common integrator before DC evaluation");
        }
        // Sign of the limit s -> 0+ is set by the lowest nonzero den coefficient.
        const auto dc = g.den().coeffs();
        double lowest = 0.0;
        for (auto it = dc.rbegin(); it != dc.rend() && lowest == 0.0; ++it) {
            lowest = *it;
        }
        return std::copysign(std::numeric_limits<double>::infinity(), n0 / lowest);
    }
    return n0 / d0;
}

TransferFunction pade3(double theta) {
    if (theta <= 0.0) {
        return TransferFunction::gain(1.0);
    }
    const double t1 = theta / 2.0;
    const double t2 = theta * theta / 10.0;
    const double t3 = theta * theta * theta / 120.0;
    return {Polynomial({-t3, t2, -t1, 1.0}), Polynomial({t3, t2, t1, 1.0})};
}

TransferFunction rationalize_delay(const TransferFunction& g) {
    if (!g.has_delay()) {
        return g;
    }
    const TransferFunction rational(g.num(), g.den());
    return tf_series(rational, pade3(g.delay()));
}

}  // namespace ctrlsynth
