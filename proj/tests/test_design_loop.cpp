#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "ctrlsynth/design_loop.hpp"

using namespace ctrlsynth;

namespace {

TransferFunction tf(std::vector<double> num, std::vector<double> den, double delay = 0.0) {
    return {Polynomial(std::move(num)), Polynomial(std::move(den)), delay};
}

TaskRequirement demo_task() {
    TaskRequirement req;
    req.plant = tf({19.95}, {1.0, 0.3897});
    req.phase_margin_min = 71.542;
    req.settling_time_min = 0.005;
    req.settling_time_max = 3.726;
    req.ess_max = 1e-4;
    return req;
}

class ThrowingPolicy final : public DesignPolicy {
public:
    ControllerDesign propose(const DesignContext&) override {
        ++calls;
        throw PolicyError("no design");
    }
    int calls = 0;
};

// Replays a fixed controller and records what it was shown.
class FixedPolicy final : public DesignPolicy {
public:
    explicit FixedPolicy(ControllerDesign d) : design_(std::move(d)) {}
    ControllerDesign propose(const DesignContext& ctx) override {
        seen_memory.push_back(ctx.memory.size());
        return design_;
    }
    std::vector<size_t> seen_memory;

private:
    ControllerDesign design_;
};

}  // namespace

TEST_CASE("classification by order, delay and stability") {
    CHECK(classify_system(tf({1.0}, {1.0, 2.0})) == SystemClass::first_order_stable);
    CHECK(classify_system(tf({1.0}, {1.0, -2.0})) == SystemClass::first_order_unstable);
    CHECK(classify_system(tf({1.0}, {1.0, 2.0}, 0.3)) == SystemClass::first_order_delay);
    CHECK(classify_system(tf({1.0}, {1.0, 1.0, 4.0})) == SystemClass::second_order_stable);
    CHECK(classify_system(tf({1.0}, {1.0, -2.0, 4.0})) == SystemClass::second_order_unstable);
    CHECK(classify_system(tf({1.0}, {1.0, 1.0, 1.0, 1.0})) == SystemClass::higher_order);
}

TEST_CASE("iteration budgets") {
    CHECK(default_n_max(SystemClass::first_order_stable) == 10);
    CHECK(default_n_max(SystemClass::second_order_stable) == 10);
    CHECK(default_n_max(SystemClass::first_order_unstable) == 20);
    CHECK(default_n_max(SystemClass::second_order_unstable) == 20);
    CHECK(default_n_max(SystemClass::first_order_delay) == 20);
    CHECK(default_n_max(SystemClass::higher_order) == 30);
}

TEST_CASE("feedback percentages") {
    const auto req = demo_task();
    PerformanceReport r;
    r.stable = true;
    r.step.settling_time_s = 3.993;
    r.margins.phase_margin_deg = 83.48;
    apply_requirement(r, req);
    const auto fb = generate_feedback(r, req);
    CHECK(fb.settling_time_error_pct == doctest::Approx(7.1755).epsilon(1e-4));
    CHECK(fb.phase_margin_error_pct == 0.0);
    REQUIRE_FALSE(fb.directives.empty());
    CHECK(fb.directives.front().find("Settling time") != std::string::npos);

    r.step.settling_time_s = 1.0;
    r.margins.phase_margin_deg = 60.0;
    apply_requirement(r, req);
    const auto pm = generate_feedback(r, req);
    CHECK(pm.settling_time_error_pct == 0.0);
    CHECK(pm.phase_margin_error_pct == doctest::Approx((60.0 - 71.542) / 71.542 * 100.0));
    CHECK(pm.total_error() == doctest::Approx(std::abs(pm.phase_margin_error_pct)));

    r.stable = false;
    apply_requirement(r, req);
    CHECK(std::isinf(generate_feedback(r, req).total_error()));
}

TEST_CASE("memory buffer ordering, capacity and best") {
    MemoryBuffer m(2);
    DesignRecord a;
    a.iteration = 1;
    a.feedback.settling_time_error_pct = 10;
    m.append(a);
    DesignRecord same = a;
    CHECK_THROWS_AS(m.append(same), std::logic_error);
    DesignRecord b;
    b.iteration = 2;
    b.feedback.settling_time_error_pct = 3;
    m.append(b);
    DesignRecord c;
    c.iteration = 3;
    CHECK_THROWS_AS(m.append(c), std::logic_error);
    REQUIRE(m.best() != nullptr);
    CHECK(m.best()->iteration == 2);

    MemoryBuffer ties;
    DesignRecord x;
    x.iteration = 1;
    ties.append(x);
    x.iteration = 2;
    ties.append(x);
    CHECK(ties.best()->iteration == 1);

    MemoryBuffer failed;
    DesignRecord f;
    f.iteration = 1;
    f.policy_failed = true;
    failed.append(f);
    CHECK(failed.best() == nullptr);
}

TEST_CASE("heuristic policy solves the demo task") {
    const auto req = demo_task();
    HeuristicPolicy policy;
    const auto out = run_design(req, policy, 10);
    CHECK(out.success);
    CHECK(out.iterations_used <= 10);
    CHECK(out.system_class == SystemClass::first_order_stable);
    REQUIRE(out.final);
    CHECK(out.trace.records().back().report.success);
}

TEST_CASE("run_design respects n_max and records failures") {
    auto req = demo_task();
    ThrowingPolicy thrower;
    const auto out = run_design(req, thrower, 4);
    CHECK_FALSE(out.success);
    CHECK(thrower.calls == 4);
    CHECK(out.iterations_used == 4);
    REQUIRE(out.trace.size() == 4);
    for (const auto& r : out.trace.records()) {
        CHECK(r.policy_failed);
        CHECK(r.diagnostic == "no design");
    }
    CHECK_THROWS_AS((void)run_design(req, thrower, 0), std::invalid_argument);

    // An unreachable window: never succeeds, stops at the budget.
    req.settling_time_min = 100.0;
    req.settling_time_max = 100.5;
    FixedPolicy fixed(loopshape_controller(req.plant, {1.0, 3.0, 1}));
    const auto capped = run_design(req, fixed, 5);
    CHECK_FALSE(capped.success);
    CHECK(capped.trace.size() == 5);
    CHECK(fixed.seen_memory == std::vector<size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("heuristic proposals are deterministic and never repeat") {
    const auto req = demo_task();
    auto tighter = req;
    tighter.settling_time_min = 2.0;
    tighter.settling_time_max = 2.5;
    tighter.phase_margin_min = 80.0;
    HeuristicPolicy p1, p2;
    const auto a = run_design(tighter, p1, 10);
    const auto b = run_design(tighter, p2, 10);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace.records()[i].design.parameter_list() == b.trace.records()[i].design.parameter_list());
        for (size_t j = 0; j < i; ++j) {
            CHECK(a.trace.records()[i].design.parameter_list() != a.trace.records()[j].design.parameter_list());
        }
    }
}

TEST_CASE("trial streams perturb collisions differently") {
    auto req = demo_task();
    req.settling_time_min = 2.0;
    req.settling_time_max = 2.5;
    req.phase_margin_min = 88.0;
    HeuristicPolicy canonical, jittered({.stream = 5});
    const auto a = run_design(req, canonical, 10);
    const auto b = run_design(req, jittered, 10);
    // The first proposal is the cold start either way.
    CHECK(a.trace.records()[0].design.parameter_list() == b.trace.records()[0].design.parameter_list());
}
