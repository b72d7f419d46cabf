#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "ctrlsynth/task.hpp"
#include "ctrlsynth/transfer_function.hpp"

namespace ctrlsynth {

enum class ControllerFamily { loop_shape, pid };

[[nodiscard]] std::string_view to_string(ControllerFamily f);

// K(s) = Kp * (beta_b*s + omega_L) / (s*sqrt(beta_b^2 + 1)), with
// Kp = gain_sign / |G(j*omega_L)|.
struct LoopShapeParams {
    double omega_L = 1.0;  // rad/s
    double beta_b = 3.1622776601683795;
    int gain_sign = 1;

    friend bool operator==(const LoopShapeParams&, const LoopShapeParams&) = default;
};

// C(s) = kp + ki/s + kd*s/(tau_f*s + 1).
struct PidParams {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double tau_f = 0.01;

    friend bool operator==(const PidParams&, const PidParams&) = default;
};

// Frequency-domain target a PID design was derived from.
struct CrossoverTarget {
    double omega_c = 1.0;
    double phase_margin_deg = 60.0;
};

struct ControllerDesign {
    ControllerFamily family = ControllerFamily::loop_shape;
    std::variant<LoopShapeParams, PidParams> params;
    TransferFunction tf;
    // Proportional gain actually applied (loop-shape family only).
    double kp = 0.0;
    std::optional<CrossoverTarget> target;

    // Parameter list in the order used by prompts and traces:
    // [omega_L, beta_b] or [kp, ki, kd, tau_f].
    [[nodiscard]] std::vector<double> parameter_list() const;
};

inline constexpr double kInitialBeta = 3.1622776601683795;  // sqrt(10)

// Throws std::domain_error("bandwidth coincides with plant zero") when
// |G(j*omega_L)| vanishes, std::invalid_argument when omega_L <= 0.
[[nodiscard]] ControllerDesign loopshape_controller(const TransferFunction& plant,
                                                    const LoopShapeParams& p);

// Terms with zero gain are dropped from the common denominator, so
// kd = 0 yields (kp*s + ki)/s and ki = kd = 0 yields kp.
[[nodiscard]] ControllerDesign pid_controller(const PidParams& p);

// Sign of Kp that makes the constant and leading coefficients of the
// closed-loop characteristic polynomial agree for an integrating controller.
[[nodiscard]] int stabilizing_gain_sign(const TransferFunction& plant);

// Cold-start omega_L from the settling window: 4/sqrt(Ts_min' * Ts_max),
// Ts_min' = max(Ts_min, Ts_max/100). Throws when Ts_max <= 0.
[[nodiscard]] double initial_bandwidth(const TaskRequirement& req);

[[nodiscard]] ControllerDesign initial_params(const TaskRequirement& req,
                                              const TransferFunction& plant,
                                              ControllerFamily family);

// PI gains equal to a loop-shape controller (exact: the loop-shape family is a PI).
[[nodiscard]] PidParams pid_from_loop_shape(const TransferFunction& plant,
                                            const LoopShapeParams& p);

// PID gains placing the gain crossover at omega_c with the given phase
// margin target (degrees), using ki = kd*omega_c^2/4 when phase lead is
// needed and kd = 0 otherwise.
[[nodiscard]] PidParams pid_for_crossover(const TransferFunction& plant, double omega_c,
                                          double phase_margin_target_deg);

// Exact pole placement for a delay-free plant n0/(d2 s^2 + d1 s + d0):
// closed-loop poles at s = -omega and the roots of s^2 + 2*zeta*omega*s + omega^2
// (derivative filter neglected). Throws std::invalid_argument for other plants.
[[nodiscard]] PidParams pid_pole_placement(const TransferFunction& plant, double omega, double zeta);

// True when pid_pole_placement accepts the plant.
[[nodiscard]] bool pole_placement_applicable(const TransferFunction& plant);

// Damping ratio used for a phase-margin target, PM/100 clamped to [0.2, 1.5].
[[nodiscard]] double damping_for_phase_margin(double phase_margin_deg);

// Dispatches to pid_pole_placement when applicable, pid_for_crossover otherwise.
[[nodiscard]] PidParams pid_for_target(const TransferFunction& plant, const CrossoverTarget& target);

}  // namespace ctrlsynth
