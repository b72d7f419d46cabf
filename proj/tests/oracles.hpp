#pragma once

// Reference computations used as test oracles. They share no code with the
// library beyond TransferFunction evaluation and favour brute force over speed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ctrlsynth/eval_harness.hpp"
#include "ctrlsynth/transfer_function.hpp"

namespace oracle {

struct Margins {
    double pm_deg = std::numeric_limits<double>::infinity();
    double gm_upper_db = std::numeric_limits<double>::infinity();
    double gm_lower_db = -std::numeric_limits<double>::infinity();
};

inline std::complex<double> eval(const std::vector<double>& c, double w) {
    std::complex<double> acc = 0.0;
    for (double x : c) acc = acc * std::complex<double>(0.0, w) + x;
    return acc;
}

// Dense log sweep of n points on [lo, hi]. PM from the sample nearest to each
// |L| = 1 crossing; GM from linear interpolation of log|L| at each unwrapped
// -180 + 360k phase crossing.
inline Margins sweep_margins(const std::vector<double>& num, const std::vector<double>& den, double delay,
                             double lo = 1e-4, double hi = 1e6, size_t n = 1'000'000) {
    Margins m;
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    double prev_mag = 0.0, prev_phase = 0.0, prev_w = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double w = lo * std::exp(step * static_cast<double>(i));
        const auto v = eval(num, w) / eval(den, w);
        const double mag = std::abs(v);
        double phase = std::arg(v) * 180.0 / std::numbers::pi - w * delay * 180.0 / std::numbers::pi;
        if (i > 0) {
            phase += 360.0 * std::round((prev_phase - phase) / 360.0);
            if ((prev_mag - 1.0) * (mag - 1.0) < 0.0) {
                const bool take_this = std::abs(mag - 1.0) < std::abs(prev_mag - 1.0);
                double p = take_this ? phase : prev_phase;
                p = std::remainder(180.0 + p, 360.0);
                if (p <= -180.0) p += 360.0;
                m.pm_deg = std::min(m.pm_deg, p);
            }
            const double k0 = std::floor((prev_phase + 180.0) / 360.0);
            const double k1 = std::floor((phase + 180.0) / 360.0);
            if (k0 != k1) {
                const double target = -180.0 + 360.0 * std::max(k0, k1);
                const double t = (target - prev_phase) / (phase - prev_phase);
                const double lm = std::log(prev_mag) + t * (std::log(mag) - std::log(prev_mag));
                const double gm = -20.0 * lm / std::log(10.0);
                if (lm < 0.0) m.gm_upper_db = std::min(m.gm_upper_db, gm);
                else if (lm > 0.0) m.gm_lower_db = std::max(m.gm_lower_db, gm);
            }
        }
        prev_mag = mag;
        prev_phase = phase;
        prev_w = w;
    }
    (void)prev_w;
    return m;
}

// Row-by-row double loops over the outcome matrix.
inline double asr(const std::vector<std::vector<int>>& s) {
    const size_t n = s.size(), t = s.empty() ? 0 : s[0].size();
    double total = 0.0;
    for (size_t j = 0; j < t; ++j) {
        double col = 0.0;
        for (size_t i = 0; i < n; ++i) col += s[i][j];
        total += col / static_cast<double>(n) * 100.0;
    }
    return t == 0 ? 0.0 : total / static_cast<double>(t);
}

inline double agsr(const std::vector<std::vector<int>>& s) {
    double solved = 0.0;
    for (const auto& row : s) {
        int sum = 0;
        for (int v : row) sum += v;
        solved += sum > 0 ? 1.0 : 0.0;
    }
    return s.empty() ? 0.0 : solved / static_cast<double>(s.size()) * 100.0;
}

inline std::vector<std::vector<int>> random_matrix(std::mt19937_64& gen, size_t n, size_t t) {
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.95)(gen));
    std::vector<std::vector<int>> s(n, std::vector<int>(t));
    for (auto& row : s)
        for (int& v : row) v = coin(gen) ? 1 : 0;
    return s;
}

// Random open loop: a first/second order plant times a loop-shape style PI.
struct RandomLoop {
    std::vector<double> num, den;
};

inline RandomLoop random_loop(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.1, 10.0);
    std::uniform_real_distribution<double> z(0.1, 0.99);
    RandomLoop l;
    const double k = u(gen);
    std::vector<double> plant_den;
    switch (gen() % 3) {
    case 0: plant_den = {1.0, u(gen)}; break;
    case 1: {
        const double wn = u(gen) / 2.0, zeta = z(gen);
        plant_den = {1.0, 2.0 * zeta * wn, wn * wn};
        break;
    }
    default: plant_den = {1.0, u(gen), u(gen), u(gen) / 4.0}; break;
    }
    const double wl = u(gen), beta = 0.5 + u(gen) / 2.0;
    const double kp = std::abs(eval(plant_den, wl)) / k;
    l.num = {k * kp * beta, k * kp * wl};
    l.den.assign(plant_den.size() + 1, 0.0);
    for (size_t i = 0; i < plant_den.size(); ++i) l.den[i] = plant_den[i] * std::sqrt(beta * beta + 1.0);
    return l;
}

}  // namespace oracle

#include <sstream>
#include <string>

#include "ctrlsynth/dataset.hpp"

namespace oracle {

// Recovers the sampled parameters of a generated entry from its coefficients
// and checks each against its sampling interval. Returns an empty string when
// every field is in range, otherwise a description of the first violation.
inline std::string range_violation(ctrlsynth::SystemClass family, const ctrlsynth::DatasetEntry& e) {
    using ctrlsynth::ResponseMode;
    using ctrlsynth::SystemClass;
    constexpr double eps = 1e-9;
    std::ostringstream why;
    auto in = [&](const char* name, double v, double lo, double hi) {
        if (lo > hi) std::swap(lo, hi);
        const bool ok = v >= lo * (1 - eps) - eps && v <= hi * (1 + eps) + eps;
        if (!ok && why.tellp() == 0) why << "id " << e.id << ": " << name << "=" << v << " not in [" << lo << "," << hi << "]";
        return ok;
    };
    auto window = [&](ResponseMode m) -> const ctrlsynth::SettlingWindow* {
        for (const auto& [mode, w] : e.windows)
            if (mode == m) return &w;
        return nullptr;
    };
    auto need = [&](ResponseMode m) {
        const auto* w = window(m);
        if (!w && why.tellp() == 0) why << "id " << e.id << ": missing window";
        return w;
    };
    for (const auto& [mode, w] : e.windows)
        if (!(w.min < w.max) && why.tellp() == 0) why << "id " << e.id << ": window not ordered";
    in("ess_max", e.steadystate_error_max, 1e-4, 1e-4);

    switch (family) {
    case SystemClass::first_order_stable:
    case SystemClass::first_order_delay:
    case SystemClass::first_order_unstable: {
        if (e.num.size() != 1 || e.den.size() != 2 || e.den[0] != 1.0) return "id " + std::to_string(e.id) + ": shape";
        const double k = e.num[0];
        const double b = family == SystemClass::first_order_unstable ? -e.den[1] : e.den[1];
        const double tau = 3.0 / b;
        in("K", k, 0.1, 20);
        in("B", b, 0.1, 20);
        if (family == SystemClass::first_order_stable) {
            in("pm", e.phase_margin_min, 45, 90);
            if (e.delay != 0.0) in("delay", e.delay, 0, 0);
            if (const auto* w = need(ResponseMode::fast)) { in("fast_min", w->min, 0, 0.001 * tau); in("fast_max", w->max, 0.3 * tau, 0.5 * tau); }
            if (const auto* w = need(ResponseMode::moderate)) { in("moderate_min", w->min, 0.1 * tau, 0.5 * tau); in("moderate_max", w->max, tau, 5 * tau); }
            if (const auto* w = need(ResponseMode::slow)) { in("slow_min", w->min, 5 * tau, 10 * tau); in("slow_max", w->max, 20 * tau, 30 * tau); }
        } else if (family == SystemClass::first_order_delay) {
            in("pm", e.phase_margin_min, 45, 65);
            in("delay/tau", e.delay / tau, 0.1, 0.2);
            if (const auto* w = need(ResponseMode::unspecified)) { in("ts_min", w->min, 4 * tau, 5 * tau); in("ts_max", w->max, 40 * tau, 50 * tau); }
        } else {
            in("pm", e.phase_margin_min, 45, 65);
            if (const auto* w = need(ResponseMode::unspecified)) { in("ts_min", w->min, 0, 0.05 * tau); in("ts_max", w->max, tau, 1.5 * tau); }
        }
        break;
    }
    case SystemClass::second_order_stable: {
        if (e.num.size() != 1 || e.den.size() != 3) return "id " + std::to_string(e.id) + ": shape";
        const double w = std::sqrt(e.den[2]);
        const double zeta = e.den[1] / (2 * w);
        const double tau = 4 / (zeta * w);
        in("a", e.num[0], 0.1, 20);
        in("omega", w, 0.1, 5);
        in("zeta", zeta, 0.1, 0.99);
        in("pm", e.phase_margin_min, 45, 65);
        if (const auto* x = need(ResponseMode::fast)) { in("fast_min", x->min, 0, 0.005 * tau); in("fast_max", x->max, tau, 1.5 * tau); }
        if (const auto* x = need(ResponseMode::moderate)) { in("moderate_min", x->min, 2 * tau, 2.5 * tau); in("moderate_max", x->max, 3 * tau, 4 * tau); }
        if (const auto* x = need(ResponseMode::slow)) { in("slow_min", x->min, 4 * tau, 5 * tau); in("slow_max", x->max, 6 * tau, 10 * tau); }
        break;
    }
    case SystemClass::second_order_unstable: {
        if (e.num.size() != 1 || e.den.size() != 3) return "id " + std::to_string(e.id) + ": shape";
        in("a", e.num[0], 0.1, 20);
        in("pm", e.phase_margin_min, 45, 65);
        double scale = 0.0;
        if (e.den[2] > 0.0) {
            const double w = std::sqrt(e.den[2]);
            const double zeta = -e.den[1] / (2 * w);
            in("omega", w, 0.1, 5);
            in("zeta", zeta, 0.1, 0.99);
            scale = 4 / (w * zeta);
        } else {
            // (s + b)(s + c), b > 0 > c.
            const double p = e.den[1], q = e.den[2];
            const double disc = std::sqrt(p * p - 4 * q);
            const double b = (p + disc) / 2, c = (p - disc) / 2;
            in("B", b, 0.1, 20);
            in("C", c, -20, 0);
            scale = 3 / std::min(b, std::abs(c));
        }
        if (const auto* x = need(ResponseMode::unspecified)) { in("ts_min", x->min, 0, 0.05 * scale); in("ts_max", x->max, scale, 1.5 * scale); }
        break;
    }
    default: return "unsupported family";
    }
    return why.str();
}

}  // namespace oracle
