#include "ctrlsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctrlsynth {

std::string_view to_string(ControllerFamily f) {
    return f == ControllerFamily::pid ? "pid" : "loop_shape";
}

std::vector<double> ControllerDesign::parameter_list() const {
    if (const auto* ls = std::get_if<LoopShapeParams>(&params)) {
        return {ls->omega_L, ls->beta_b};
    }
    const auto& pid = std::get<PidParams>(params);
    return {pid.kp, pid.ki, pid.kd, pid.tau_f};
}

ControllerDesign loopshape_controller(const TransferFunction& plant, const LoopShapeParams& p) {
    if (!(p.omega_L > 0.0) || !std::isfinite(p.omega_L)) {
        throw std::invalid_argument("loop bandwidth omega_L must be positive");
    }
    if (!(p.beta_b >= 0.0)) {
        throw std::invalid_argument("integral boost beta_b must be nonnegative");
    }
    const double g = std::abs(plant.at_frequency(p.omega_L));
    if (g == 0.0 || !std::isfinite(g)) {
        throw std::domain_error("bandwidth coincides with plant zero");
    }
    const double kp = (p.gain_sign < 0 ? -1.0 : 1.0) / g;
    ControllerDesign d;
    d.family = ControllerFamily::loop_shape;
    d.params = p;
    d.kp = kp;
    d.tf = TransferFunction(Polynomial({kp * p.beta_b, kp * p.omega_L}),
                            Polynomial({std::sqrt(p.beta_b * p.beta_b + 1.0), 0.0}));
    return d;
}

ControllerDesign pid_controller(const PidParams& p) {
    if (p.kd != 0.0 && !(p.tau_f > 0.0)) {
        throw std::invalid_argument("PID derivative filter tau_f must be positive");
    }
    ControllerDesign d;
    d.family = ControllerFamily::pid;
    d.params = p;
    const double t = p.tau_f;
    if (p.ki != 0.0 && p.kd != 0.0) {
        d.tf = TransferFunction(Polynomial({p.kp * t + p.kd, p.kp + p.ki * t, p.ki}),
                                Polynomial({t, 1.0, 0.0}));
    } else if (p.ki != 0.0) {
        d.tf = TransferFunction(Polynomial({p.kp, p.ki}), Polynomial({1.0, 0.0}));
    } else if (p.kd != 0.0) {
        d.tf = TransferFunction(Polynomial({p.kp * t + p.kd, p.kp}), Polynomial({t, 1.0}));
    } else {
        d.tf = TransferFunction::gain(p.kp);
    }
    return d;
}

int stabilizing_gain_sign(const TransferFunction& plant) {
    // Closed loop of an integrating controller: s*den + k*num, whose constant
    // term is k*num(0). Fall back to the high-frequency sign for plants with
    // a zero at the origin.
    const double lead = plant.den().leading();
    double n0 = plant.num().constant_term();
    if (n0 == 0.0) {
        n0 = plant.num().leading();
    }
    return n0 * lead < 0.0 ? -1 : 1;
}

double initial_bandwidth(const TaskRequirement& req) {
    if (!(req.settling_time_max > 0.0)) {
        throw std::invalid_argument("settling_time_max must be positive");
    }
    const double ts_min = std::max(req.settling_time_min, req.settling_time_max / 100.0);
    return 4.0 / std::sqrt(ts_min * req.settling_time_max);
}

PidParams pid_from_loop_shape(const TransferFunction& plant, const LoopShapeParams& p) {
    const ControllerDesign ls = loopshape_controller(plant, p);
    const double root = std::sqrt(p.beta_b * p.beta_b + 1.0);
    PidParams pid;
    pid.kp = ls.kp * p.beta_b / root;
    pid.ki = ls.kp * p.omega_L / root;
    pid.kd = 0.0;
    pid.tau_f = 0.01 / p.omega_L;
    return pid;
}

PidParams pid_for_crossover(const TransferFunction& plant, double omega_c,
                            double phase_margin_target_deg) {
    if (!(omega_c > 0.0)) {
        throw std::invalid_argument("crossover frequency must be positive");
    }
    const double sign = stabilizing_gain_sign(plant);
    const std::complex<double> g = sign * plant.at_frequency(omega_c);
    if (std::abs(g) == 0.0 || !std::isfinite(std::abs(g))) {
        throw std::domain_error("bandwidth coincides with plant zero");
    }
    const double target = (-180.0 + phase_margin_target_deg) * std::numbers::pi / 180.0;
    const std::complex<double> c = std::polar(1.0, target) / g;
    PidParams pid;
    pid.tau_f = 0.01 / omega_c;
    pid.kp = c.real();
    if (c.imag() >= 0.0) {
        pid.kd = c.imag() / (0.75 * omega_c);
        pid.ki = pid.kd * omega_c * omega_c / 4.0;
    } else {
        pid.kd = 0.0;
        pid.ki = -c.imag() * omega_c;
    }
    pid.kp *= sign;
    pid.ki *= sign;
    pid.kd *= sign;
    return pid;
}

bool pole_placement_applicable(const TransferFunction& plant) {
    return !plant.has_delay() && plant.den().degree() == 2 && plant.num().degree() == 0 &&
           !plant.num().is_zero();
}

PidParams pid_pole_placement(const TransferFunction& plant, double omega, double zeta) {
    if (!pole_placement_applicable(plant)) {
        throw std::invalid_argument("pole placement needs a delay-free plant n0/(d2 s^2 + d1 s + d0)");
    }
    if (!(omega > 0.0) || !(zeta > 0.0)) {
        throw std::invalid_argument("pole placement needs positive omega and zeta");
    }
    const auto& d = plant.den().coeffs();
    const double k = plant.num().coeffs().front() / d[0];
    const double a1 = d[1] / d[0];
    const double a0 = d[2] / d[0];
    // s^3 + (a1 + k kd) s^2 + (a0 + k kp) s + k ki = (s + omega)(s^2 + 2 zeta omega s + omega^2)
    PidParams pid;
    pid.tau_f = 0.01 / omega;
    pid.kd = ((2.0 * zeta + 1.0) * omega - a1) / k;
    pid.kp = ((1.0 + 2.0 * zeta) * omega * omega - a0) / k;
    pid.ki = omega * omega * omega / k;
    return pid;
}

double damping_for_phase_margin(double phase_margin_deg) {
    return std::clamp(phase_margin_deg / 100.0, 0.2, 1.5);
}

PidParams pid_for_target(const TransferFunction& plant, const CrossoverTarget& target) {
    if (pole_placement_applicable(plant)) {
        return pid_pole_placement(plant, target.omega_c, damping_for_phase_margin(target.phase_margin_deg));
    }
    return pid_for_crossover(plant, target.omega_c, target.phase_margin_deg);
}

ControllerDesign initial_params(const TaskRequirement& req, const TransferFunction& plant,
                                ControllerFamily family) {
    LoopShapeParams ls;
    ls.omega_L = initial_bandwidth(req);
    ls.beta_b = kInitialBeta;
    ls.gain_sign = stabilizing_gain_sign(plant);
    if (family == ControllerFamily::loop_shape) {
        return loopshape_controller(plant, ls);
    }
    return pid_controller(pid_from_loop_shape(plant, ls));
}

}  // namespace ctrlsynth
