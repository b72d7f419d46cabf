#include <deque>

#include "doctest.h"

#include "ctrlsynth/llm_backend.hpp"

using namespace ctrlsynth;

namespace {

TaskRequirement demo_task() {
    TaskRequirement req;
    req.plant = TransferFunction(Polynomial({19.95}), Polynomial({1.0, 0.3897}));
    req.phase_margin_min = 71.542;
    req.settling_time_min = 0.005;
    req.settling_time_max = 3.726;
    req.ess_max = 1e-4;
    return req;
}

DesignRecord evaluated(int iteration, double omega, double beta) {
    const auto req = demo_task();
    DesignRecord r;
    r.iteration = iteration;
    r.design = loopshape_controller(req.plant, {omega, beta, 1});
    r.report = evaluate_closed_loop(req.plant, r.design.tf, req);
    r.feedback = generate_feedback(r.report, req);
    return r;
}

bool ends_with(const std::string& s, const std::string& tail) {
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

// Replies from a script, remembering every user text it was sent.
class ScriptedTransport final : public ChatTransport {
public:
    explicit ScriptedTransport(std::deque<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const LlmConfig&, const std::string&, const std::string& user) override {
        sent.push_back(user);
        if (replies_.empty()) return "still not json";
        auto r = replies_.front();
        replies_.pop_front();
        return r;
    }
    std::vector<std::string> sent;

private:
    std::deque<std::string> replies_;
};

}  // namespace

TEST_CASE("central prompt lists the agents and the task") {
    const auto b = render_central_prompt(demo_task());
    CHECK(b.system_text.find("- Agent 1: First-order stable system") != std::string::npos);
    CHECK(b.system_text.find("- Agent 6: Higher-order system") != std::string::npos);
    CHECK(b.user_text.find("G(s) = 19.95 / (s + 0.3897)") != std::string::npos);
    CHECK(b.user_text.find("Phase margin greater or equal 71.542 degrees") != std::string::npos);
    CHECK(b.user_text.find("less or equal to 3.726 sec") != std::string::npos);
    CHECK(b.user_text.find("'Agent Number'") != std::string::npos);
}

TEST_CASE("central reply parsing") {
    const auto r = parse_central_reply(
        R"({"Task Requirement": "x", "Task Analysis": "y", "Agent": "Agent 1 for first-order stable systems controller design."})");
    CHECK(r.agent_number == 1);
    CHECK(parse_central_reply(R"({"Agent Number": 4})").agent_number == 4);
    CHECK(parse_agent_number("Agent 1 for first-order stable systems controller design.") == 1);
    CHECK(parse_agent_number("agent seven") == std::nullopt);
    CHECK(parse_agent_number("Agent 9") == std::nullopt);
    CHECK_THROWS_AS((void)parse_central_reply(R"({"Task Analysis": "y"})"), LlmError);
}

TEST_CASE("task prompt sections") {
    const auto req = demo_task();
    MemoryBuffer empty;
    const auto first = render_task_prompt(SystemClass::first_order_stable, req, empty, {});
    CHECK(first.user_text.find("## History of designs:") == std::string::npos);
    CHECK(first.user_text.find("19.95 / (s + 0.3897)") != std::string::npos);
    CHECK(first.system_text.find("loop shaping") != std::string::npos);

    MemoryBuffer memory;
    memory.append(evaluated(1, 10.735373054213634, 3.1622776601683795));
    memory.append(evaluated(2, 2.0, 3.1622776601683795));
    const Feedback fb = memory.records().back().feedback;
    const auto b = render_task_prompt(SystemClass::first_order_stable, req, memory, fb);
    CHECK(b.user_text.find("Design 1: parameters [10.735373054213634, 3.1622776601683795]") != std::string::npos);
    CHECK(b.user_text.find("Design 2: parameters [2, 3.1622776601683795]") != std::string::npos);
    CHECK(b.user_text.find("Design 3") == std::string::npos);
    // omega_L = 2 settles too slowly, so the feedback section says so.
    const auto fsec = b.user_text.find("## Feedback on the latest design:");
    REQUIRE(fsec != std::string::npos);
    CHECK(b.user_text.find("Settling time", fsec) != std::string::npos);
    CHECK(b.user_text.find("increase omega_L", fsec) != std::string::npos);
    // Sections appear in order and the response instruction closes the message.
    CHECK(b.user_text.find("## History of designs:") < fsec);
    const auto instr = b.user_text.find("## Response Instructions:");
    CHECK(instr > fsec);
    CHECK(ends_with(b.user_text, "  \"parameter\": \"[List of Parameters]\"\n}\n"));
    // Rendering is a pure function of its inputs.
    CHECK(render_task_prompt(SystemClass::first_order_stable, req, memory, fb).user_text == b.user_text);
}

TEST_CASE("class notes differ by class") {
    const auto req = demo_task();
    MemoryBuffer m;
    const auto a = render_task_prompt(SystemClass::first_order_stable, req, m, {});
    const auto b = render_task_prompt(SystemClass::second_order_unstable, req, m, {});
    CHECK(a.system_text != b.system_text);
    CHECK(b.system_text.find("[kp, ki, kd, tau_f]") != std::string::npos);
}

TEST_CASE("history lines for failures and unstable loops") {
    DesignRecord f;
    f.iteration = 3;
    f.policy_failed = true;
    f.diagnostic = "bad reply";
    CHECK(history_line(f) == "Design 3: no valid design (bad reply)");

    const auto req = demo_task();
    DesignRecord u;
    u.iteration = 4;
    u.design = loopshape_controller(req.plant, {1.0, 1.0, -1});
    u.report = evaluate_closed_loop(req.plant, u.design.tf, req);
    REQUIRE_FALSE(u.report.stable);
    CHECK(history_line(u).find("closed loop unstable") != std::string::npos);
}

TEST_CASE("JSON extraction and reply parsing") {
    const std::string bare = R"({"design": "raise omega", "parameter": [2, 3.1623]})";
    const std::string fenced = "Here you go:\n```json\n" + bare + "\n```\nThanks";
    const auto a = parse_design_reply(bare);
    const auto b = parse_design_reply(fenced);
    CHECK(a.parameters == std::vector<double>{2.0, 3.1623});
    CHECK(a.parameters == b.parameters);
    CHECK(a.design_rationale == "raise omega");

    const auto s = parse_design_reply(R"({"design": "x", "parameter": "[2, 3.1623]"})");
    CHECK(s.parameters == std::vector<double>{2.0, 3.1623});
    CHECK(parse_number_list("[2, 3.1623]") == std::vector<double>{2.0, 3.1623});
    CHECK(parse_number_list("2, 3.1623") == std::vector<double>{2.0, 3.1623});
    CHECK_FALSE(parse_number_list("two, three"));

    CHECK(extract_json_object("prefix {\"a\": {\"b\": 1}} suffix") == std::string("{\"a\": {\"b\": 1}}"));
    CHECK_FALSE(extract_json_object("{not json}"));
    CHECK_FALSE(extract_json_object("no braces"));

    CHECK_THROWS_AS((void)parse_design_reply("{\"design\": \"x\"}"), LlmError);
    CHECK_THROWS_AS((void)parse_design_reply(R"({"design": "x", "parameter": [1, 2, 3]})"), LlmError);
    CHECK_THROWS_AS((void)parse_design_reply("nothing here"), LlmError);
}

TEST_CASE("parameters round-trip through a reply") {
    const auto req = demo_task();
    const auto d = loopshape_controller(req.plant, {10.735373054213634, 3.1622776601683795, 1});
    std::string text = "{\"design\": \"d\", \"parameter\": [";
    const auto p = d.parameter_list();
    char buf[64];
    for (size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? ", " : "", p[i]);
        text += buf;
    }
    text += "]}";
    const auto back = design_from_parameters(req.plant, parse_design_reply(text).parameters);
    const auto q = back.parameter_list();
    REQUIRE(q.size() == p.size());
    for (size_t i = 0; i < p.size(); ++i) CHECK(std::abs(q[i] - p[i]) <= 1e-12 * std::abs(p[i]));
}

TEST_CASE("parameter lists select the controller family") {
    const auto plant = demo_task().plant;
    CHECK(design_from_parameters(plant, {2.0, 3.0}).family == ControllerFamily::loop_shape);
    CHECK(design_from_parameters(plant, {1.0, 2.0, 0.1, 0.01}).family == ControllerFamily::pid);
    const auto clamped = design_from_parameters(plant, {1e9, 0.0});
    CHECK(clamped.parameter_list() == std::vector<double>{1e6, 1e-4});
    CHECK_THROWS_AS((void)design_from_parameters(plant, {1.0}), LlmError);
    CHECK_THROWS_AS((void)design_from_parameters(plant, {std::nan(""), 1.0}), LlmError);
}

TEST_CASE("sampling defaults and config parsing") {
    CHECK(sampling_defaults("gpt-4o").temperature == 0.0);
    CHECK(sampling_defaults("gpt-4o").max_tokens == 1024);
    CHECK(sampling_defaults("claude-3-5-sonnet").temperature == 1.0);
    CHECK(sampling_defaults("gemini-1.5-pro").max_tokens == 8192);

    const auto cfg = llm_config_from_json(R"({"endpoint": "http://localhost:9/v1/chat/completions", "model": "gpt-4o"})");
    CHECK(cfg.retries == 3);
    CHECK(cfg.temperature == 0.0);
    CHECK(cfg.api_key_env == "CTRLSYNTH_API_KEY");
    CHECK_THROWS_AS((void)llm_config_from_json(R"({"endpoint": "ftp://x", "model": "m"})"), std::invalid_argument);
    CHECK_THROWS_AS((void)llm_config_from_json(R"({"model": "m"})"), std::invalid_argument);
}

TEST_CASE("call_llm retries with a nudge") {
    LlmConfig cfg;
    cfg.retries = 3;
    const PromptBundle bundle{"sys", "user"};

    ScriptedTransport recovering({"not json", R"({"design": "ok", "parameter": [1, 2]})"});
    const auto r = call_llm(bundle, cfg, recovering);
    CHECK(r.parameters == std::vector<double>{1.0, 2.0});
    REQUIRE(recovering.sent.size() == 2);
    CHECK(recovering.sent[0] == "user");
    CHECK(ends_with(recovering.sent[1], "respond with valid JSON only"));

    ScriptedTransport hopeless({});
    CHECK_THROWS_AS((void)call_llm(bundle, cfg, hopeless), LlmError);
    CHECK(hopeless.sent.size() == 4);
}

TEST_CASE("LLM policy inside the design loop") {
    auto transport = std::make_shared<ScriptedTransport>(std::deque<std::string>{
        R"({"Task Requirement": "r", "Task Analysis": "a", "Agent": "Agent 3"})",
        R"({"design": "first try", "parameter": [2, 3.1622776601683795]})",
        R"({"design": "faster", "parameter": [10.735373054213634, 3.1622776601683795]})",
    });
    LlmConfig cfg;
    LlmPolicy policy(cfg, transport);
    const auto out = run_design(demo_task(), policy, 5);
    CHECK(out.success);
    CHECK(out.iterations_used == 2);
    CHECK(policy.central_agent() == 3);
    REQUIRE(policy.notes().size() == 1);
    CHECK(policy.notes()[0].find("Agent 3") != std::string::npos);
    // The second design prompt carried the first design in its history.
    REQUIRE(transport->sent.size() == 3);
    CHECK(transport->sent[2].find("Design 1: parameters [2, 3.1622776601683795]") != std::string::npos);
}
