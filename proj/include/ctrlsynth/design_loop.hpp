#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctrlsynth/analysis.hpp"
#include "ctrlsynth/synthesis.hpp"
#include "ctrlsynth/task.hpp"

namespace ctrlsynth {

[[nodiscard]] SystemClass classify_system(const TransferFunction& plant);

// Iteration budget per class: 10 for stable first/second order, 20 for
// delay and unstable first/second order, 30 for higher order.
[[nodiscard]] int default_n_max(SystemClass c);

struct Feedback {
    double settling_time_error_pct = 0.0;
    // Signed: (phi - phi_min)/phi_min*100, negative on a violation.
    double phase_margin_error_pct = 0.0;
    bool stability_violated = false;
    bool ess_violated = false;
    bool gain_margin_violated = false;
    std::vector<std::string> directives;

    [[nodiscard]] bool empty() const;
    // |st_err| + |pm_err|, +infinity for an unstable loop.
    [[nodiscard]] double total_error() const;
};

[[nodiscard]] Feedback generate_feedback(const PerformanceReport& report, const TaskRequirement& req);

struct DesignRecord {
    int iteration = 0;
    ControllerDesign design;
    PerformanceReport report;
    Feedback feedback;
    // Set when the policy could not produce a design this iteration.
    bool policy_failed = false;
    std::string diagnostic;
};

class MemoryBuffer {
public:
    explicit MemoryBuffer(size_t capacity = 0) : capacity_(capacity) {}

    // Throws std::logic_error when the iteration does not increase or the
    // buffer is full.
    void append(DesignRecord record);

    [[nodiscard]] const std::vector<DesignRecord>& records() const { return records_; }
    [[nodiscard]] size_t size() const { return records_.size(); }
    [[nodiscard]] bool empty() const { return records_.empty(); }
    [[nodiscard]] size_t capacity() const { return capacity_; }

    // Record with the lowest total error among evaluated designs, earliest on ties.
    [[nodiscard]] const DesignRecord* best() const;

private:
    std::vector<DesignRecord> records_;
    size_t capacity_ = 0;
};

// Everything a policy sees when proposing C_k.
struct DesignContext {
    SystemClass system_class;
    const TaskRequirement& requirement;
    const MemoryBuffer& memory;
    const Feedback& feedback;
    int iteration = 1;
};

// Raised by a policy that could not produce a design (e.g. unparseable LLM
// output after retries). run_design records it and continues.
class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DesignPolicy {
public:
    virtual ~DesignPolicy() = default;
    virtual ControllerDesign propose(const DesignContext& ctx) = 0;
    // Called once per run, before the first proposal.
    virtual void begin_task(const TaskRequirement& /*req*/, SystemClass /*cls*/) {}
};

struct HeuristicConfig {
    double gamma = 1.5;  // omega_L step
    double delta = 1.4;  // beta_b step
    int patience = 3;    // non-improving iterations before gamma <- gamma^2
    double collision_factor = 1.01;
    double beta_floor = 1.0;
    // Trial stream; 0 keeps the canonical perturbation, others jitter it.
    std::uint64_t stream = 0;
};

// Deterministic proposal from (class, req, memory, feedback).
[[nodiscard]] ControllerDesign heuristic_propose(SystemClass cls, const TaskRequirement& req,
                                                 const MemoryBuffer& memory, const Feedback& fb,
                                                 const HeuristicConfig& config = {});

class HeuristicPolicy final : public DesignPolicy {
public:
    explicit HeuristicPolicy(HeuristicConfig config = {}) : config_(config) {}
    ControllerDesign propose(const DesignContext& ctx) override {
        return heuristic_propose(ctx.system_class, ctx.requirement, ctx.memory, ctx.feedback,
                                 config_);
    }

private:
    HeuristicConfig config_;
};

struct DesignOutcome {
    bool success = false;
    std::optional<ControllerDesign> final;
    int iterations_used = 0;
    SystemClass system_class = SystemClass::first_order_stable;
    MemoryBuffer trace;
};

// Propose/evaluate/feedback loop for at most n_max iterations; returns as
// soon as a design meets every requirement.
[[nodiscard]] DesignOutcome run_design(const TaskRequirement& req, DesignPolicy& policy, int n_max);

}  // namespace ctrlsynth
