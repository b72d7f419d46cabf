#include "ctrlsynth/design_loop.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>

#include "ctrlsynth/rng.hpp"

namespace ctrlsynth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kParamMin = 1e-4;
constexpr double kParamMax = 1e6;
constexpr double kBetaMin = 1e-3;
constexpr int kBacktrackSteps = 4;
constexpr double kDetachedCrossover = 1.5;

std::string format(const char* fmt, double a, double b = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

bool is_unstable_plant_class(SystemClass c) {
    return c == SystemClass::first_order_unstable || c == SystemClass::second_order_unstable;
}

bool same_design(const ControllerDesign& a, const ControllerDesign& b) {
    if (a.family != b.family) {
        return false;
    }
    const auto pa = a.parameter_list();
    const auto pb = b.parameter_list();
    for (size_t i = 0; i < pa.size(); ++i) {
        if (std::abs(pa[i] - pb[i]) > 1e-9 * std::max(std::abs(pa[i]), std::abs(pb[i]))) {
            return false;
        }
    }
    return true;
}

bool in_memory(const MemoryBuffer& memory, const ControllerDesign& d) {
    return std::any_of(memory.records().begin(), memory.records().end(),
                       [&](const DesignRecord& r) { return !r.policy_failed && same_design(r.design, d); });
}

// Number of evaluated records after the current best.
int stalled_iterations(const MemoryBuffer& memory) {
    const DesignRecord* best = memory.best();
    if (best == nullptr) {
        return static_cast<int>(memory.size());
    }
    return static_cast<int>(memory.records().back().iteration - best->iteration);
}

double collision_factor(const HeuristicConfig& cfg, int iteration, int attempt) {
    if (cfg.stream == 0) {
        return cfg.collision_factor;
    }
    SplitMix64 rng(derive_seed(cfg.stream, static_cast<std::uint64_t>(iteration) * 64 +
                                               static_cast<std::uint64_t>(attempt)));
    return 1.0 + (cfg.collision_factor - 1.0) * (1.0 + rng.uniform01());
}

double clamp_param(double v) { return std::clamp(v, kParamMin, kParamMax); }

// omega_L range already explored on each side of the settling window, used
// to bisect instead of stepping past a record with the opposite verdict.
struct Bracket {
    double too_slow = 0.0;  // largest omega with Ts above the window
    double too_fast = kInf; // smallest omega with Ts below the window
};

// Shape knob other than bandwidth: beta_b or the PM target. Records with a
// different shape say nothing about where the window lies.
double shape_knob(const ControllerDesign& d) {
    if (const auto* ls = std::get_if<LoopShapeParams>(&d.params)) {
        return ls->beta_b;
    }
    return d.target ? d.target->phase_margin_deg : 0.0;
}

Bracket bandwidth_bracket(const MemoryBuffer& memory, const TaskRequirement& req,
                          const ControllerDesign& anchor) {
    Bracket b;
    const double knob = shape_knob(anchor);
    for (const auto& r : memory.records()) {
        if (r.policy_failed || r.design.family != anchor.family || !r.report.stable) {
            continue;
        }
        if (std::abs(shape_knob(r.design) - knob) > 1e-9 * std::max(1.0, std::abs(knob))) {
            continue;
        }
        double omega = 0.0;
        if (const auto* ls = std::get_if<LoopShapeParams>(&r.design.params)) {
            omega = ls->omega_L;
        } else if (r.design.target) {
            omega = r.design.target->omega_c;
        } else {
            continue;
        }
        if (r.report.step.settling_time_s > req.settling_time_max) {
            b.too_slow = std::max(b.too_slow, omega);
        } else if (r.report.step.settling_time_s < req.settling_time_min) {
            b.too_fast = std::min(b.too_fast, omega);
        }
    }
    return b;
}

double step_bandwidth(double omega, int direction, double gamma, const Bracket& bracket) {
    if (direction > 0) {
        const double next = omega * gamma;
        if (bracket.too_fast < kInf && next >= bracket.too_fast && bracket.too_fast > omega) {
            return std::sqrt(omega * bracket.too_fast);
        }
        return next;
    }
    if (direction < 0) {
        const double next = omega / gamma;
        if (bracket.too_slow > 0.0 && next <= bracket.too_slow && bracket.too_slow < omega) {
            return std::sqrt(omega * bracket.too_slow);
        }
        return next;
    }
    return omega;
}

// Direction of the bandwidth move implied by a report: +1 faster, -1 slower.
int settling_direction(const PerformanceReport& r, const TaskRequirement& req, SystemClass cls) {
    if (!r.stable) {
        return is_unstable_plant_class(cls) ? +1 : -1;
    }
    if (r.step.settling_time_s > req.settling_time_max) {
        return +1;
    }
    if (r.step.settling_time_s < req.settling_time_min) {
        return -1;
    }
    return 0;
}

// Largest PM a loop-shape (PI) controller can reach with crossover at
// omega_L: the PI factor contributes atan(beta) - 90 deg, so beta -> inf
// leaves only the plant phase.
double loop_shape_pm_ceiling(const TaskRequirement& req, const LoopShapeParams& p) {
    const std::complex<double> g = static_cast<double>(p.gain_sign) * req.plant.at_frequency(p.omega_L);
    double phase = std::arg(g) * 180.0 / std::numbers::pi;
    return std::remainder(180.0 + phase, 360.0);
}

// A stable loop-shape record that misses PM while the settling time does
// not allow a slower crossover, and whose bandwidth has no phase left to gain.
bool phase_budget_exhausted(const DesignRecord& r, const TaskRequirement& req, SystemClass cls) {
    if (r.policy_failed || r.design.family != ControllerFamily::loop_shape || !r.report.stable ||
        r.feedback.phase_margin_error_pct >= 0.0 || settling_direction(r.report, req, cls) < 0) {
        return false;
    }
    const auto& p = std::get<LoopShapeParams>(r.design.params);
    return loop_shape_pm_ceiling(req, p) < req.phase_margin_min + 15.0;
}

bool use_pid(const MemoryBuffer& memory, const TaskRequirement& req, SystemClass cls) {
    const auto& recs = memory.records();
    if (!recs.empty() && phase_budget_exhausted(recs.back(), req, cls)) {
        return true;
    }
    for (const auto& r : recs) {
        if (!r.policy_failed && r.design.family == ControllerFamily::pid) {
            return true;
        }
    }
    // Two consecutive unstable loop-shape evaluations switch the family.
    if (recs.size() >= 2) {
        const auto& a = recs[recs.size() - 1];
        const auto& b = recs[recs.size() - 2];
        return !a.policy_failed && !b.policy_failed && !a.report.stable && !b.report.stable;
    }
    return false;
}

const DesignRecord* best_of_family(const MemoryBuffer& memory, ControllerFamily family) {
    const DesignRecord* best = nullptr;
    for (const auto& r : memory.records()) {
        if (r.policy_failed || r.design.family != family) {
            continue;
        }
        if (best == nullptr || r.feedback.total_error() < best->feedback.total_error()) {
            best = &r;
        }
    }
    return best;
}

ControllerDesign propose_loop_shape(SystemClass cls, const TaskRequirement& req,
                                    const MemoryBuffer& memory, const HeuristicConfig& cfg,
                                    const DesignRecord& anchor, bool escalate) {
    const auto& prev = std::get<LoopShapeParams>(anchor.design.params);
    const double gamma = escalate ? cfg.gamma * cfg.gamma : cfg.gamma;
    const double delta = escalate ? cfg.delta * cfg.delta : cfg.delta;
    const PerformanceReport& r = anchor.report;

    LoopShapeParams next = prev;
    next.gain_sign = stabilizing_gain_sign(req.plant);
    const int direction = settling_direction(r, req, cls);
    next.omega_L = step_bandwidth(prev.omega_L, direction, gamma,
                                  bandwidth_bracket(memory, req, anchor.design));

    const double wgc = r.margins.gain_crossover_omega.value_or(prev.omega_L);
    const bool detached = r.stable && wgc > kDetachedCrossover * prev.omega_L;
    if (detached && anchor.feedback.phase_margin_error_pct < 0.0) {
        // The worst crossover sits on a resonance above omega_L; only the
        // controller's high-frequency gain Kp*beta/sqrt(beta^2+1) moves it.
        next.beta_b = std::max(kBetaMin, prev.beta_b / (delta * delta));
    } else if (!r.stable || anchor.feedback.phase_margin_error_pct < 0.0) {
        next.beta_b = prev.beta_b * delta;
    } else if (direction > 0 && r.margins.phase_margin_deg > req.phase_margin_min + 10.0) {
        next.beta_b = std::max(cfg.beta_floor, prev.beta_b / delta);
    }
    next.omega_L = clamp_param(next.omega_L);
    next.beta_b = std::clamp(next.beta_b, kBetaMin, kParamMax);

    ControllerDesign d = loopshape_controller(req.plant, next);
    // A repeated step from the anchor already lost to it: backtrack halfway
    // (geometrically) toward the anchor before falling back to a nudge.
    for (int halving = 0; in_memory(memory, d) && halving < kBacktrackSteps; ++halving) {
        next.omega_L = std::sqrt(next.omega_L * prev.omega_L);
        next.beta_b = std::sqrt(next.beta_b * prev.beta_b);
        d = loopshape_controller(req.plant, next);
    }
    for (int attempt = 0; in_memory(memory, d) && attempt < 50; ++attempt) {
        next.omega_L = clamp_param(next.omega_L * collision_factor(cfg, static_cast<int>(memory.size()), attempt));
        d = loopshape_controller(req.plant, next);
    }
    return d;
}

ControllerDesign propose_pid(SystemClass cls, const TaskRequirement& req, const MemoryBuffer& memory,
                             const HeuristicConfig& cfg, bool escalate) {
    const double gamma = escalate ? cfg.gamma * cfg.gamma : cfg.gamma;
    const double delta = escalate ? cfg.delta * cfg.delta : cfg.delta;
    CrossoverTarget target;
    const DesignRecord* anchor = best_of_family(memory, ControllerFamily::pid);
    if (anchor == nullptr || !anchor->design.target) {
        // Family switch: start from the best loop-shape bandwidth.
        const DesignRecord* ls = best_of_family(memory, ControllerFamily::loop_shape);
        target.omega_c = ls != nullptr ? std::get<LoopShapeParams>(ls->design.params).omega_L
                                       : initial_bandwidth(req);
        target.phase_margin_deg = std::min(req.phase_margin_min + 10.0, 89.0);
    } else {
        const PerformanceReport& r = anchor->report;
        target = *anchor->design.target;
        const int direction = settling_direction(r, req, cls);
        target.omega_c = step_bandwidth(target.omega_c, direction, gamma,
                                        bandwidth_bracket(memory, req, anchor->design));
        if (!r.stable || anchor->feedback.phase_margin_error_pct < 0.0) {
            // Phase deficit scaled up by the ladder, capped short of a pure differentiator.
            const double deficit = std::max(req.phase_margin_min - r.margins.phase_margin_deg, 5.0);
            target.phase_margin_deg =
                std::min(target.phase_margin_deg + (delta - 1.0) * std::min(deficit * 2.5, 60.0), 150.0);
        }
    }
    target.omega_c = clamp_param(target.omega_c);

    ControllerDesign d = pid_controller(pid_for_target(req.plant, target));
    d.target = target;
    if (anchor != nullptr && anchor->design.target) {
        const CrossoverTarget from = *anchor->design.target;
        for (int halving = 0; in_memory(memory, d) && halving < kBacktrackSteps; ++halving) {
            target.omega_c = std::sqrt(target.omega_c * from.omega_c);
            target.phase_margin_deg = 0.5 * (target.phase_margin_deg + from.phase_margin_deg);
            d = pid_controller(pid_for_target(req.plant, target));
            d.target = target;
        }
    }
    for (int attempt = 0; in_memory(memory, d) && attempt < 50; ++attempt) {
        target.omega_c = clamp_param(target.omega_c * collision_factor(cfg, static_cast<int>(memory.size()), attempt));
        d = pid_controller(pid_for_target(req.plant, target));
        d.target = target;
    }
    return d;
}

}  // namespace

SystemClass classify_system(const TransferFunction& plant) {
    const int order = plant.den().degree();
    if (order >= 3 || order < 1) {
        return SystemClass::higher_order;
    }
    if (order == 1 && plant.has_delay()) {
        return SystemClass::first_order_delay;
    }
    const bool stable = routh_stable(plant.den()).stable;
    if (order == 1) {
        return stable ? SystemClass::first_order_stable : SystemClass::first_order_unstable;
    }
    return stable ? SystemClass::second_order_stable : SystemClass::second_order_unstable;
}

int default_n_max(SystemClass c) {
    switch (c) {
    case SystemClass::first_order_stable:
    case SystemClass::second_order_stable: return 10;
    case SystemClass::first_order_unstable:
    case SystemClass::second_order_unstable:
    case SystemClass::first_order_delay: return 20;
    case SystemClass::higher_order: return 30;
    }
    return 30;
}

bool Feedback::empty() const {
    return settling_time_error_pct == 0.0 && phase_margin_error_pct == 0.0 && !stability_violated &&
           !ess_violated;
}

double Feedback::total_error() const {
    if (stability_violated) {
        return kInf;
    }
    return std::abs(settling_time_error_pct) + std::abs(phase_margin_error_pct);
}

Feedback generate_feedback(const PerformanceReport& report, const TaskRequirement& req) {
    Feedback fb;
    const double window = req.settling_time_max - req.settling_time_min;
    const double ts = report.step.settling_time_s;
    if (ts > req.settling_time_max) {
        fb.settling_time_error_pct = (ts - req.settling_time_max) / window * 100.0;
    } else if (ts < req.settling_time_min) {
        fb.settling_time_error_pct = (req.settling_time_min - ts) / window * 100.0;
    }
    const double pm = report.margins.phase_margin_deg;
    if (pm < req.phase_margin_min) {
        fb.phase_margin_error_pct = (pm - req.phase_margin_min) / req.phase_margin_min * 100.0;
    }
    fb.stability_violated = !report.pass_stability;
    fb.ess_violated = !report.pass_ess;
    fb.gain_margin_violated = req.require_gain_margin_6db && !report.pass_gain_margin;

    if (fb.stability_violated) {
        fb.directives.emplace_back("The closed loop is unstable; the loop must be stabilized before tuning performance.");
    }
    if (ts > req.settling_time_max) {
        if (std::isfinite(ts)) {
            fb.directives.push_back(format(
                "Settling time %.4g s exceeds the maximum %.4g s; increase omega_L to make the response faster.",
                ts, req.settling_time_max));
        } else {
            fb.directives.push_back(format(
                "The response did not settle within the 2%% band; settling time must be at most %.4g s.",
                req.settling_time_max));
        }
    } else if (ts < req.settling_time_min) {
        fb.directives.push_back(format(
            "Settling time %.4g s is below the minimum %.4g s; decrease omega_L to slow the response.", ts,
            req.settling_time_min));
    }
    if (pm < req.phase_margin_min) {
        fb.directives.push_back(format(
            "Phase margin %.4g deg is below the required %.4g deg; increase beta_b to add phase at crossover.",
            pm, req.phase_margin_min));
    }
    if (fb.ess_violated) {
        fb.directives.push_back(format("Steady-state error %.4g exceeds the maximum %.4g.",
                                       report.step.steady_state_error, req.ess_max));
    }
    if (fb.gain_margin_violated) {
        fb.directives.emplace_back("Gain margin is outside +/-6 dB.");
    }
    return fb;
}

void MemoryBuffer::append(DesignRecord record) {
    if (!records_.empty() && record.iteration <= records_.back().iteration) {
        throw std::logic_error("memory buffer iterations must be strictly increasing");
    }
    if (capacity_ != 0 && records_.size() >= capacity_) {
        throw std::logic_error("memory buffer is full");
    }
    records_.push_back(std::move(record));
}

const DesignRecord* MemoryBuffer::best() const {
    const DesignRecord* best = nullptr;
    for (const auto& r : records_) {
        if (r.policy_failed) {
            continue;
        }
        if (best == nullptr || r.feedback.total_error() < best->feedback.total_error()) {
            best = &r;
        }
    }
    return best;
}

ControllerDesign heuristic_propose(SystemClass cls, const TaskRequirement& req,
                                   const MemoryBuffer& memory, const Feedback& /*fb*/,
                                   const HeuristicConfig& config) {
    const bool escalate = stalled_iterations(memory) >= config.patience;
    if (use_pid(memory, req, cls)) {
        return propose_pid(cls, req, memory, config, escalate);
    }
    const DesignRecord* anchor = best_of_family(memory, ControllerFamily::loop_shape);
    if (anchor == nullptr) {
        return initial_params(req, req.plant, ControllerFamily::loop_shape);
    }
    return propose_loop_shape(cls, req, memory, config, *anchor, escalate);
}

DesignOutcome run_design(const TaskRequirement& req, DesignPolicy& policy, int n_max) {
    if (n_max < 1) {
        throw std::invalid_argument("n_max must be at least 1");
    }
    DesignOutcome outcome;
    outcome.system_class = classify_system(req.plant);
    outcome.trace = MemoryBuffer(static_cast<size_t>(n_max));
    policy.begin_task(req, outcome.system_class);
    Feedback feedback;
    for (int k = 1; k <= n_max; ++k) {
        DesignRecord record;
        record.iteration = k;
        try {
            const DesignContext ctx{outcome.system_class, req, outcome.trace, feedback, k};
            record.design = policy.propose(ctx);
            record.report = evaluate_closed_loop(req.plant, record.design.tf, req);
            record.feedback = generate_feedback(record.report, req);
        } catch (const std::exception& e) {
            record.policy_failed = true;
            record.diagnostic = e.what();
            record.report = PerformanceReport{};
            record.feedback = Feedback{};
            record.feedback.stability_violated = true;
            record.feedback.directives.push_back(std::string("previous proposal failed: ") + e.what());
        }
        outcome.iterations_used = k;
        const bool success = !record.policy_failed && record.report.success;
        feedback = record.feedback;
        outcome.trace.append(std::move(record));
        if (success) {
            outcome.success = true;
            outcome.final = outcome.trace.records().back().design;
            return outcome;
        }
    }
    return outcome;
}

}  // namespace ctrlsynth
