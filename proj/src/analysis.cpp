#include "ctrlsynth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "ctrlsynth/kernels/freq_kernels.hpp"

namespace ctrlsynth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Wraps an angle in degrees into (-180, 180].
double wrap_deg(double deg) {
    double w = std::remainder(deg, 360.0);
    if (w <= -180.0) {
        w += 360.0;
    }
    return w;
}

double magnitude_at(const TransferFunction& loop, double omega) {
    return std::abs(loop.num()(std::complex<double>(0.0, omega))) /
           std::abs(loop.den()(std::complex<double>(0.0, omega)));
}

double principal_phase_deg(const TransferFunction& loop, double omega) {
    return std::arg(loop.at_frequency(omega)) * kRadToDeg;
}

// Phase continued from a reference value: the branch of arg L(jw) closest
// to `reference`.
double phase_near(const TransferFunction& loop, double omega, double reference) {
    const double p = principal_phase_deg(loop, omega);
    return p + 360.0 * std::round((reference - p) / 360.0);
}

// Bisection in log(omega) on a sign change of f between lo and hi.
template <class F>
double bisect_log(F&& f, double lo, double hi) {
    double f_lo = f(lo);
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-10 * lo; ++iter) {
        const double mid = std::sqrt(lo * hi);
        const double f_mid = f(mid);
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

// Controllable-canonical realization of a proper rational transfer function
// with monic denominator s^n + a[n-1] s^(n-1) + ... + a[0].
class CanonicalSystem {
public:
    explicit CanonicalSystem(const TransferFunction& g) {
        const auto den = g.den().coeffs();
        const int n = g.den().degree();
        const double lead = den[0];
        order_ = static_cast<size_t>(n);
        a_.resize(order_);
        for (size_t i = 0; i < order_; ++i) {
            a_[i] = den[order_ - i] / lead;  // a_[i] multiplies s^i
        }
        std::vector<double> b(order_ + 1, 0.0);  // b[i] multiplies s^i
        const auto num = g.num().coeffs();
        const int m = g.num().degree();
        for (int i = 0; i <= m; ++i) {
            b[static_cast<size_t>(i)] = num[static_cast<size_t>(m - i)] / lead;
        }
        feedthrough_ = b[order_];
        c_.resize(order_);
        for (size_t i = 0; i < order_; ++i) {
            c_[i] = b[i] - feedthrough_ * a_[i];
        }
        x_.assign(order_, 0.0);
        k1_.resize(order_);
        k2_.resize(order_);
        k3_.resize(order_);
        k4_.resize(order_);
        tmp_.resize(order_);
    }

    [[nodiscard]] double output(double u) const {
        double y = feedthrough_ * u;
        for (size_t i = 0; i < order_; ++i) {
            y += c_[i] * x_[i];
        }
        return y;
    }

    [[nodiscard]] double feedthrough() const { return feedthrough_; }

    // Classical RK4 step given the input at the stage times.
    void advance(double dt, double u0, double u_mid, double u1) {
        if (order_ == 0) {
            return;
        }
        derivative(x_, u0, k1_);
        for (size_t i = 0; i < order_; ++i) tmp_[i] = x_[i] + 0.5 * dt * k1_[i];
        derivative(tmp_, u_mid, k2_);
        for (size_t i = 0; i < order_; ++i) tmp_[i] = x_[i] + 0.5 * dt * k2_[i];
        derivative(tmp_, u_mid, k3_);
        for (size_t i = 0; i < order_; ++i) tmp_[i] = x_[i] + dt * k3_[i];
        derivative(tmp_, u1, k4_);
        for (size_t i = 0; i < order_; ++i) {
            x_[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        }
    }

private:
    void derivative(const std::vector<double>& x, double u, std::vector<double>& dx) const {
        double last = u;
        for (size_t i = 0; i < order_; ++i) {
            last -= a_[i] * x[i];
        }
        for (size_t i = 0; i + 1 < order_; ++i) {
            dx[i] = x[i + 1];
        }
        dx[order_ - 1] = last;
    }

    size_t order_ = 0;
    std::vector<double> a_;
    std::vector<double> c_;
    double feedthrough_ = 0.0;
    std::vector<double> x_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

size_t step_count(double horizon_s, double dt_s) {
    if (!(dt_s > 0.0) || !(horizon_s >= 0.0)) {
        throw std::invalid_argument("step response needs dt > 0 and horizon >= 0");
    }
    return static_cast<size_t>(std::ceil(horizon_s / dt_s - 1e-9)) + 1;
}

bool record(Trajectory& traj, double y) {
    if (!std::isfinite(y) || std::abs(y) > kDivergenceLimit) {
        traj.diverged = true;
        return false;
    }
    traj.y.push_back(y);
    return true;
}

double closed_loop_final_value(const TransferFunction& loop) {
    if (loop.num().is_zero()) {
        return 0.0;
    }
    const double n0 = loop.num().constant_term();
    const double d0 = loop.den().constant_term();
    if (d0 == 0.0) {
        return 1.0;
    }
    return n0 / (d0 + n0);
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int points_per_decade) {
    const double decades = std::log10(hi / lo);
    const auto n = static_cast<size_t>(std::llround(decades * points_per_decade)) + 1;
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        out[i] = lo * std::pow(10.0, static_cast<double>(i) / points_per_decade);
    }
    out.back() = hi;
    return out;
}

std::vector<FrequencyPoint> freq_response(const TransferFunction& loop,
                                          std::span<const double> omegas) {
    for (size_t i = 0; i < omegas.size(); ++i) {
        if (!(omegas[i] > 0.0) || (i > 0 && !(omegas[i] > omegas[i - 1]))) {
            throw std::invalid_argument("frequency grid must be positive and strictly increasing");
        }
    }
    std::vector<double> mag(omegas.size());
    std::vector<double> phase(omegas.size());
    kernels::rational_response(loop.num().coeffs(), loop.den().coeffs(), loop.delay(), omegas,
                               mag, phase);
    std::vector<FrequencyPoint> out(omegas.size());
    double previous = 0.0;
    bool have_previous = false;
    for (size_t i = 0; i < omegas.size(); ++i) {
        double deg = phase[i] * kRadToDeg;
        if (!std::isfinite(mag[i])) {
            deg = have_previous ? previous : 0.0;
        } else if (have_previous) {
            deg += 360.0 * std::round((previous - deg) / 360.0);
        }
        out[i] = {omegas[i], mag[i], deg};
        previous = deg;
        have_previous = true;
    }
    return out;
}

MarginReport compute_margins(const TransferFunction& loop) {
    MarginReport report;
    if (loop.num().is_zero()) {
        return report;
    }
    const auto grid = log_grid(kMarginOmegaMin, kMarginOmegaMax, kMarginPointsPerDecade);
    const auto sweep = freq_response(loop, grid);

    auto log_mag = [&](double w) { return std::log(magnitude_at(loop, w)); };

    double worst_pm = kInf;
    for (size_t i = 0; i + 1 < sweep.size(); ++i) {
        const double f0 = sweep[i].magnitude - 1.0;
        const double f1 = sweep[i + 1].magnitude - 1.0;
        if (!std::isfinite(f0) || !std::isfinite(f1)) {
            continue;
        }
        const bool crosses = (f0 < 0.0) != (f1 < 0.0);
        if (!crosses) {
            continue;
        }
        const double wc = bisect_log(log_mag, sweep[i].omega, sweep[i + 1].omega);
        const double pm = wrap_deg(180.0 + principal_phase_deg(loop, wc));
        ++report.crossover_count;
        if (pm < worst_pm) {
            worst_pm = pm;
            report.gain_crossover_omega = wc;
        }
    }
    report.phase_margin_deg = worst_pm;

    // Phase crossings of -180 + 360k on the unwrapped sweep.
    for (size_t i = 0; i + 1 < sweep.size(); ++i) {
        if (!std::isfinite(sweep[i].magnitude) || !std::isfinite(sweep[i + 1].magnitude)) {
            continue;
        }
        const double k0 = std::floor((sweep[i].phase_deg + 180.0) / 360.0);
        const double k1 = std::floor((sweep[i + 1].phase_deg + 180.0) / 360.0);
        if (k0 == k1) {
            continue;
        }
        // Target branch is the multiple of 360 crossed between the two samples.
        const double target = -180.0 + 360.0 * std::max(k0, k1);
        const double reference = sweep[i].phase_deg;
        auto phase_offset = [&](double w) { return phase_near(loop, w, reference) - target; };
        const double wp = bisect_log(phase_offset, sweep[i].omega, sweep[i + 1].omega);
        const double mag = magnitude_at(loop, wp);
        const double gm_db = -20.0 * std::log10(mag);
        if (mag < 1.0) {
            report.gain_margin_upper_db = std::min(report.gain_margin_upper_db, gm_db);
        } else if (mag > 1.0) {
            report.gain_margin_lower_db = std::max(report.gain_margin_lower_db, gm_db);
        }
    }
    return report;
}

Trajectory step_response(const TransferFunction& closed_loop, double horizon_s, double dt_s) {
    const size_t steps = step_count(horizon_s, dt_s);
    Trajectory traj;
    traj.dt = dt_s;
    traj.y.reserve(steps);
    CanonicalSystem sys(TransferFunction(closed_loop.num(), closed_loop.den()));
    const double delay = closed_loop.delay();
    // Input is the delayed unit step, u(t) = 1 for t >= delay.
    const auto input = [&](double t) { return t >= delay - 1e-12 ? 1.0 : 0.0; };
    for (size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt_s;
        if (!record(traj, sys.output(input(t)))) {
            break;
        }
        if (k + 1 < steps) {
            // The input is piecewise constant, so each step sees its interior value.
            const double u = input(t + 0.5 * dt_s);
            sys.advance(dt_s, u, u, u);
        }
    }
    return traj;
}

Trajectory closed_loop_step_response(const TransferFunction& loop, double horizon_s, double dt_s) {
    const size_t lag = static_cast<size_t>(std::llround(loop.delay() / dt_s));
    if (lag == 0) {
        return step_response(tf_feedback_unity(TransferFunction(loop.num(), loop.den())), horizon_s,
                             dt_s);
    }
    const size_t steps = step_count(horizon_s, dt_s);
    Trajectory traj;
    traj.dt = dt_s;
    traj.y.reserve(steps);
    CanonicalSystem sys(TransferFunction(loop.num(), loop.den()));
    // error[k] = 1 - y[k]; the rational part sees error[k - lag].
    std::vector<double> ring(lag + 1, 0.0);
    auto delayed = [&](size_t k) { return k >= lag ? ring[(k - lag) % ring.size()] : 0.0; };
    for (size_t k = 0; k < steps; ++k) {
        const double u = delayed(k);
        const double y = sys.output(u);
        if (!record(traj, y)) {
            break;
        }
        ring[k % ring.size()] = 1.0 - y;
        if (k + 1 < steps) {
            const double u_next = delayed(k + 1);
            sys.advance(dt_s, u, 0.5 * (u + u_next), u_next);
        }
    }
    return traj;
}

double settling_time(const Trajectory& trajectory, double final_value) {
    if (trajectory.diverged || trajectory.y.empty() || final_value == 0.0) {
        return kInf;
    }
    const double band = kSettlingBand * std::abs(final_value);
    const auto& y = trajectory.y;
    if (std::abs(y.back() - final_value) > band) {
        return kInf;
    }
    size_t first_inside = y.size() - 1;
    while (first_inside > 0 && std::abs(y[first_inside - 1] - final_value) <= band) {
        --first_inside;
    }
    return trajectory.time(first_inside);
}

double steady_state_error(const TransferFunction& loop) {
    if (loop.num().is_zero()) {
        return 1.0;
    }
    const double n0 = loop.num().constant_term();
    const double d0 = loop.den().constant_term();
    if (d0 == 0.0) {
        return 0.0;
    }
    if (d0 + n0 == 0.0) {
        return kInf;
    }
    return std::abs(d0 / (d0 + n0));
}

void apply_requirement(PerformanceReport& r, const TaskRequirement& req) {
    r.pass_stability = r.stable;
    r.pass_settling = r.step.settling_time_s >= req.settling_time_min &&
                      r.step.settling_time_s <= req.settling_time_max;
    r.pass_phase_margin = r.margins.phase_margin_deg >= req.phase_margin_min;
    r.pass_ess = r.step.steady_state_error <= req.ess_max;
    r.pass_gain_margin = r.margins.gain_margin_upper_db >= 6.0 && r.margins.gain_margin_lower_db <= -6.0;
    r.success = r.pass_stability && r.pass_settling && r.pass_phase_margin && r.pass_ess;
    if (req.require_gain_margin_6db) {
        r.success = r.success && r.pass_gain_margin;
    }
}

PerformanceReport evaluate_closed_loop(const TransferFunction& plant,
                                       const TransferFunction& controller,
                                       const TaskRequirement& req) {
    return evaluate_closed_loop(plant, controller, req, {}).report;
}

Evaluation evaluate_closed_loop(const TransferFunction& plant, const TransferFunction& controller,
                                const TaskRequirement& req, const EvaluationOptions& options) {
    const TransferFunction loop = tf_series(plant, controller);
    const TransferFunction rational_loop = rationalize_delay(loop);
    const TransferFunction closed = tf_feedback_unity(rational_loop);

    Evaluation eval;
    PerformanceReport& r = eval.report;
    r.stability = routh_stable(closed.den());
    r.margins = compute_margins(loop);
    r.step.steady_state_error = steady_state_error(loop);
    r.step.final_value = closed_loop_final_value(loop);

    // Integration grid from the closed-loop pole spread and the crossover.
    const auto poles = poly_roots(closed.den());
    double fastest = 1.0;
    double slowest_rate = kInf;
    for (const auto& p : poles) {
        fastest = std::max(fastest, std::abs(p));
        if (p.real() < 0.0) {
            slowest_rate = std::min(slowest_rate, -p.real());
        }
    }
    if (r.margins.gain_crossover_omega) {
        fastest = std::max(fastest, *r.margins.gain_crossover_omega);
    }
    double dt = std::min(req.settling_time_max / 2000.0, 0.02 / fastest);
    if (options.dt_override > 0.0) {
        dt = options.dt_override;
    }
    double horizon = 3.0 * req.settling_time_max;
    if (std::isfinite(slowest_rate)) {
        horizon = std::max(horizon, 30.0 / slowest_rate);
    }
    const double max_horizon = dt * static_cast<double>(kMaxSimulationSteps - 1);
    horizon = std::min(horizon, max_horizon);

    const bool simulate = loop.has_delay() || r.stability.stable;
    Trajectory traj;
    traj.diverged = !simulate;
    if (simulate) {
        for (int extension = 0;; ++extension) {
            traj = loop.has_delay() ? closed_loop_step_response(loop, horizon, dt)
                                    : step_response(closed, horizon, dt);
            r.step.settling_time_s = settling_time(traj, r.step.final_value);
            if (traj.diverged || std::isfinite(r.step.settling_time_s) || extension == 3 ||
                2.0 * horizon > max_horizon) {
                break;
            }
            // Extend only when the band has been entered but not yet held.
            const double band = kSettlingBand * std::abs(r.step.final_value);
            const bool entered = std::any_of(traj.y.begin(), traj.y.end(), [&](double y) {
                return std::abs(y - r.step.final_value) <= band;
            });
            if (!entered) {
                break;
            }
            horizon *= 2.0;
        }
    }
    r.step.diverged = traj.diverged;
    if (traj.diverged) {
        r.step.settling_time_s = kInf;
    }
    r.step.horizon_s = simulate ? traj.horizon() : 0.0;
    r.step.dt_s = dt;

    if (loop.has_delay()) {
        const bool algebraic = r.stability.stable;
        r.stable = algebraic && !traj.diverged;
        r.delay_stability_disagreement =
            (algebraic && traj.diverged) || (!algebraic && std::isfinite(r.step.settling_time_s));
        if (algebraic && traj.diverged) {
            r.stability.method = StabilityMethod::simulation;
        }
    } else {
        r.stable = r.stability.stable;
    }
    apply_requirement(r, req);
    if (options.keep_trajectory) {
        eval.trajectory = std::move(traj);
    }
    return eval;
}

void write_step_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "t,y\n";
    char buf[96];
    for (size_t i = 0; i < trajectory.y.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.12g\n", trajectory.time(i), trajectory.y[i]);
        out << buf;
    }
}

void write_bode_csv(std::ostream& out, std::span<const FrequencyPoint> points) {
    out << "omega,mag_db,phase_deg\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.omega, 20.0 * std::log10(p.magnitude),
                      p.phase_deg);
        out << buf;
    }
}

}  // namespace ctrlsynth
