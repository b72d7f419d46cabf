#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ctrlsynth/stability.hpp"
#include "ctrlsynth/task.hpp"
#include "ctrlsynth/transfer_function.hpp"

namespace ctrlsynth {

struct FrequencyPoint {
    double omega = 0.0;      // rad/s
    double magnitude = 0.0;  // |L(jw)|
    double phase_deg = 0.0;  // unwrapped along the sweep
};

struct MarginReport {
    double phase_margin_deg = std::numeric_limits<double>::infinity();
    std::optional<double> gain_crossover_omega;
    double gain_margin_upper_db = std::numeric_limits<double>::infinity();
    double gain_margin_lower_db = -std::numeric_limits<double>::infinity();
    int crossover_count = 0;
};

struct Trajectory {
    std::vector<double> y;  // y[i] sampled at t = i*dt
    double dt = 0.0;
    bool diverged = false;

    [[nodiscard]] double time(size_t i) const { return static_cast<double>(i) * dt; }
    [[nodiscard]] double horizon() const { return y.empty() ? 0.0 : time(y.size() - 1); }
};

struct StepMetrics {
    double settling_time_s = std::numeric_limits<double>::infinity();
    double steady_state_error = 0.0;
    double final_value = 0.0;
    bool diverged = false;
    double horizon_s = 0.0;
    double dt_s = 0.0;
};

struct PerformanceReport {
    bool stable = false;
    StabilityVerdict stability;
    MarginReport margins;
    StepMetrics step;
    bool pass_stability = false;
    bool pass_settling = false;
    bool pass_phase_margin = false;
    bool pass_ess = false;
    bool pass_gain_margin = false;
    bool success = false;
    // Pade(3) verdict and exact-delay simulation disagree.
    bool delay_stability_disagreement = false;
};

// Grid used by compute_margins.
inline constexpr double kMarginOmegaMin = 1e-4;
inline constexpr double kMarginOmegaMax = 1e6;
inline constexpr int kMarginPointsPerDecade = 400;

// 2% settling band.
inline constexpr double kSettlingBand = 0.02;

// Trajectories whose |y| exceed this are truncated and marked diverged.
inline constexpr double kDivergenceLimit = 1e9;

// Upper bound on the number of integration steps a single evaluation takes;
// the horizon is shortened to respect it.
inline constexpr size_t kMaxSimulationSteps = 4'000'000;

[[nodiscard]] std::vector<double> log_grid(double lo, double hi, int points_per_decade);

// Evaluates L(jw) at strictly increasing positive omegas. Throws
// std::invalid_argument on a malformed grid.
[[nodiscard]] std::vector<FrequencyPoint> freq_response(const TransferFunction& loop,
                                                        std::span<const double> omegas);

[[nodiscard]] MarginReport compute_margins(const TransferFunction& loop);

// Unit-step response of T by RK4 on a controllable-canonical realization.
// A delay on T is applied to the input.
[[nodiscard]] Trajectory step_response(const TransferFunction& closed_loop, double horizon_s,
                                       double dt_s);

// Unit-step response of the unity-feedback loop around `loop`, with the
// loop's transport delay kept exact (ring buffer of round(delay/dt) samples).
[[nodiscard]] Trajectory closed_loop_step_response(const TransferFunction& loop, double horizon_s,
                                                   double dt_s);

// First sampled time after which the trajectory stays within 2% of
// final_value; +infinity when the band is violated at the horizon end or
// the trajectory diverged.
[[nodiscard]] double settling_time(const Trajectory& trajectory, double final_value);

// |1/(1 + L(0))| for a unit step; 0 for loops with a free integrator.
[[nodiscard]] double steady_state_error(const TransferFunction& loop);

struct EvaluationOptions {
    // Overrides the automatic integration step when > 0.
    double dt_override = 0.0;
    // Keeps the trajectory used for the settling-time measurement.
    bool keep_trajectory = false;
};

struct Evaluation {
    PerformanceReport report;
    Trajectory trajectory;
};

// Full closed-loop check of controller against plant under req. Throws
// std::invalid_argument when the loop is improper.
[[nodiscard]] PerformanceReport evaluate_closed_loop(const TransferFunction& plant,
                                                     const TransferFunction& controller,
                                                     const TaskRequirement& req);
[[nodiscard]] Evaluation evaluate_closed_loop(const TransferFunction& plant,
                                              const TransferFunction& controller,
                                              const TaskRequirement& req,
                                              const EvaluationOptions& options);

// Re-derives the pass flags and success from the measured metrics.
void apply_requirement(PerformanceReport& report, const TaskRequirement& req);

// CSV dumps: "t,y" and "omega,mag_db,phase_deg".
void write_step_csv(std::ostream& out, const Trajectory& trajectory);
void write_bode_csv(std::ostream& out, std::span<const FrequencyPoint> points);

}  // namespace ctrlsynth
