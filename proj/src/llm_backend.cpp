#include "ctrlsynth/llm_backend.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "ctrlsynth/serialize.hpp"

namespace ctrlsynth {

using json = nlohmann::json;

namespace {

constexpr double kParamMin = 1e-4;
constexpr double kParamMax = 1e6;
constexpr const char* kNudge = "respond with valid JSON only";

// Shortest representation that parses back to the same double.
std::string num(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::to_string(v);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

const char* const kCentralPrompt =
    "You are an expert control engineer tasked with analyzing the provided control task and assigning it "
    "to the most suitable task-specific agent, each specializing in designing controllers for specific "
    "system types.\n\n"
    "First, analyze the dynamic system to identify its type, such as a first-order stable system, "
    "second-order unstable system, first-order with time delay, higher-order system, etc. Based on this "
    "analysis, assign the task to the corresponding task-specific agent that specializes in the "
    "identified system type.\n\n"
    "Here are the available task-specific agents:\n"
    "- Agent 1: First-order stable system\n"
    "- Agent 2: First-order unstable system\n"
    "- Agent 3: Second-order stable system\n"
    "- Agent 4: Second-order unstable system\n"
    "- Agent 5: First-order system with time delay\n"
    "- Agent 6: Higher-order system\n\n"
    "Ensure the selected agent can effectively tailor the control design process.\n";

const char* const kCentralInstruction =
    "## Response Instructions:\n\n"
    "Your response should strictly follow the JSON format below, containing three keys: 'Task "
    "Requirement' and 'Task Analysis', and 'Agent Number':\n"
    "- Task Requirement: Summarize the task requirements, including the system dynamics and performance "
    "criteria provided by the user.\n"
    "- Task Analysis: Provide a brief analysis of the system and justify the selection of the "
    "task-specific agent.\n"
    "- Agent Number: Specify the task-specific agent number (choose from 1 to 6).\n"
    "### Example of the expected JSON format:\n\n"
    "{\n"
    "  \"Task Requirement\": \"[Summarize the system dynamics and performance criteria provided by the user]\",\n"
    "  \"Task Analysis\": \"[High level task analysis]\",\n"
    "  \"Agent\": \"[Task-specific agent number: 1, 2, 3, 4, 5, or 6]\"\n"
    "}\n";

const char* const kLoopShapePrompt =
    "You are a control engineer expert, and your goal is to design a controller K(s) for a system with "
    "transfer function G(s) using loop shaping method.\n"
    "The loop transfer function is L(s) = G(s)K(s) and here are the basic loop shaping steps:\n\n"
    "[Step1] Choose a proper loop bandwidth omega_L for the given plant G(s).\n"
    "Note: Increasing omega_L will make the response faster, therefore smaller settling time. On the "
    "other hand, decreasing omega_L corresponds to larger settling time.\n\n"
    "[Step2] Compute the proportional gain K_p to set the desired loop bandwidth omega_L, where "
    "K_p = +/- 1/|G(j omega_L)|.\n\n"
    "[Step3] Design an integral boost to increase the low frequency loop gain thus improving both "
    "tracking and disturbance rejection at low frequencies. Specifically, select "
    "K_i(s) = (beta_b s + omega_L)/(s sqrt(beta_b^2 + 1)) with beta >= 0. A reasonable initial choice of "
    "beta_b is sqrt(10).\n"
    "Note: Decreasing beta will: (i) increase the low frequency gain and reduce the high frequency gain "
    "thus improving both tracking and noise rejection performance, and (ii) reduce the phase at loop "
    "crossover thus degrading robustness. Hence a smaller beta_b should only be used if the loop can "
    "tolerate the reduced phase. On the other hand, increasing beta will increase the phase margin.\n\n"
    "Thus the final controller is then: K = K_p K_i(s). There are two key design parameters for loop "
    "shaping: omega_L and beta_b. Your goal is to find a proper combination of these two parameters such "
    "that the designed controller achieves satisfactory performance, such as phase margin and settling "
    "time requirements.\n"
    "You will also be provided by a list of your history design and the corresponding performance if "
    "there is any. And you should improve your previous design based on the user request.\n"
    "Note: If you could not see an improvement within 3 rounds, to make the tuning process more "
    "efficient, please be more aggressive and try to increase design step based on the previous "
    "designs.\n";

const char* const kDesignInstruction =
    "## Response Instructions:\n"
    "Please provide the controller design to the given plant G(s). Your response should strictly adhere "
    "to the following JSON format, which includes two keys: 'design' and 'parameter'. The 'design' key "
    "can contain design steps and rationale about the parameters choice or the reason to update specific "
    "parameter based on the previous design and performance, and the 'parameter' key should ONLY provide "
    "a list of numerical values of the chosen parameters.\n\n"
    "### Example of the expected JSON format:\n\n"
    "{\n"
    "  \"design\": \"[Detailed design steps and rationale behind parameters choice]\",\n"
    "  \"parameter\": \"[List of Parameters]\"\n"
    "}\n";

// Class-specific notes appended to the loop-shaping template.
std::string class_notes(SystemClass cls) {
    switch (cls) {
    case SystemClass::first_order_stable:
        return "";
    case SystemClass::first_order_unstable:
        return "\nThe plant has a pole in the right half plane. The sign of K_p is chosen so the closed "
               "loop is stabilized, and omega_L must be well above the unstable pole for a usable phase "
               "margin.\n";
    case SystemClass::second_order_stable:
        return "\nThe plant is second order and may be lightly damped. If the loop crosses over near a "
               "resonance, reducing beta_b lowers the high frequency gain of the controller.\n";
    case SystemClass::second_order_unstable:
        return "\nThe plant is second order with unstable poles. A loop shaping controller may not "
               "stabilize it; you may instead return four parameters [kp, ki, kd, tau_f] for the PID "
               "controller C(s) = kp + ki/s + kd s/(tau_f s + 1).\n";
    case SystemClass::first_order_delay:
        return "\nThe plant has a transport delay, which removes phase in proportion to frequency. Keep "
               "omega_L low enough that the delay does not consume the phase margin.\n";
    case SystemClass::higher_order:
        return "\nThe plant is higher order. Check the phase of G(j omega_L) before choosing omega_L; you "
               "may instead return four parameters [kp, ki, kd, tau_f] for the PID controller "
               "C(s) = kp + ki/s + kd s/(tau_f s + 1).\n";
    }
    return "";
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

}  // namespace

SamplingDefaults sampling_defaults(std::string_view model) {
    if (contains_ci(model, "gemini")) {
        return {1.0, 8192};
    }
    if (contains_ci(model, "claude")) {
        return {1.0, 1024};
    }
    return {0.0, 1024};
}

LlmConfig llm_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("llm config: ") + e.what());
    }
    if (!j.is_object()) {
        throw std::invalid_argument("llm config: expected an object");
    }
    LlmConfig c;
    try {
        c.endpoint = j.at("endpoint").get<std::string>();
        c.model = j.at("model").get<std::string>();
        const SamplingDefaults d = sampling_defaults(c.model);
        c.temperature = j.value("temperature", d.temperature);
        c.max_tokens = j.value("max_tokens", d.max_tokens);
        c.retries = j.value("retries", c.retries);
        c.in_flight_cap = j.value("in_flight_cap", c.in_flight_cap);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.use_central_agent = j.value("use_central_agent", c.use_central_agent);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("llm config: ") + e.what());
    }
    if (c.retries < 0 || c.in_flight_cap < 1 || c.max_tokens < 1 || c.timeout_s <= 0.0) {
        throw std::invalid_argument("llm config: retries >= 0, in_flight_cap >= 1, max_tokens >= 1, timeout_s > 0");
    }
    if (c.endpoint.rfind("http://", 0) != 0 && c.endpoint.rfind("https://", 0) != 0) {
        throw std::invalid_argument("llm config: endpoint must start with http:// or https://");
    }
    return c;
}

LlmConfig load_llm_config(const std::filesystem::path& path) { return llm_config_from_json(read_text_file(path)); }

std::string requirement_text(const TaskRequirement& req) {
    std::ostringstream s;
    s << "Please design the controller for the following system:\n"
      << "G(s) = " << req.plant.to_string() << "\n"
      << "Design the controller to meet the following specifications:\n"
      << "- The system should be stable and steady state error less or equal " << num(req.ess_max) << ".\n"
      << "- Phase margin greater or equal " << num(req.phase_margin_min) << " degrees,\n"
      << "- Settling time greater or equal " << num(req.settling_time_min) << " sec,\n"
      << "- Settling time should also be less or equal to " << num(req.settling_time_max) << " sec.\n";
    return s.str();
}

PromptBundle render_central_prompt(const TaskRequirement& req) {
    PromptBundle b;
    b.system_text = kCentralPrompt;
    b.user_text = requirement_text(req) + "\n" + kCentralInstruction;
    return b;
}

std::string history_line(const DesignRecord& r) {
    std::ostringstream s;
    s << "Design " << r.iteration << ": ";
    if (r.policy_failed) {
        s << "no valid design (" << r.diagnostic << ")";
        return s.str();
    }
    s << "parameters [";
    const auto p = r.design.parameter_list();
    for (size_t i = 0; i < p.size(); ++i) {
        s << (i ? ", " : "") << num(p[i]);
    }
    s << "] -> ";
    if (!r.report.stable) {
        s << "closed loop unstable, success: no";
        return s.str();
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "phase margin %.4g deg, settling time %.4g sec, success: %s",
                  r.report.margins.phase_margin_deg, r.report.step.settling_time_s,
                  r.report.success ? "yes" : "no");
    s << buf;
    return s.str();
}

PromptBundle render_task_prompt(SystemClass cls, const TaskRequirement& req, const MemoryBuffer& memory,
                                const Feedback& fb) {
    PromptBundle b;
    b.system_text = std::string(kLoopShapePrompt) + class_notes(cls);
    std::ostringstream u;
    u << requirement_text(req);
    if (!memory.empty()) {
        u << "\n## History of designs:\n";
        for (const auto& r : memory.records()) {
            u << history_line(r) << "\n";
        }
    }
    if (!fb.directives.empty()) {
        u << "\n## Feedback on the latest design:\n";
        for (const auto& d : fb.directives) {
            u << "- " << d << "\n";
        }
    }
    u << "\n" << kDesignInstruction;
    b.user_text = u.str();
    return b;
}

std::optional<std::string> extract_json_object(std::string_view text) {
    // Prefer the body of a fenced block when there is one.
    const auto fence = text.find("```");
    if (fence != std::string_view::npos) {
        auto body_start = text.find('\n', fence);
        const auto close = body_start == std::string_view::npos ? std::string_view::npos
                                                                 : text.find("```", body_start);
        if (close != std::string_view::npos) {
            if (auto inner = extract_json_object(text.substr(body_start, close - body_start))) {
                return inner;
            }
        }
    }
    for (size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                std::string candidate(text.substr(start, i - start + 1));
                if (json::accept(candidate)) {
                    return candidate;
                }
                break;
            }
        }
    }
    return std::nullopt;
}

std::optional<std::vector<double>> parse_number_list(std::string_view text) {
    std::string s(text);
    std::erase_if(s, [](char c) { return c == '[' || c == ']'; });
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) {
            return std::nullopt;
        }
        const auto e = item.find_last_not_of(" \t\r\n");
        const std::string token = item.substr(b, e - b + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size()) {
            return std::nullopt;
        }
        out.push_back(v);
    }
    if (out.empty()) {
        return std::nullopt;
    }
    return out;
}

LlmReply parse_design_reply(const std::string& text) {
    const auto obj = extract_json_object(text);
    if (!obj) {
        throw LlmError("reply contains no JSON object");
    }
    const json j = json::parse(*obj);
    if (!j.contains("parameter")) {
        throw LlmError("reply lacks the 'parameter' key");
    }
    LlmReply r;
    r.raw = text;
    if (j.contains("design")) {
        r.design_rationale = j.at("design").is_string() ? j.at("design").get<std::string>() : j.at("design").dump();
    }
    const json& p = j.at("parameter");
    if (p.is_array()) {
        for (const auto& v : p) {
            if (!v.is_number()) {
                throw LlmError("'parameter' array must contain numbers");
            }
            r.parameters.push_back(v.get<double>());
        }
    } else if (p.is_string()) {
        auto list = parse_number_list(p.get<std::string>());
        if (!list) {
            throw LlmError("'parameter' string is not a number list");
        }
        r.parameters = std::move(*list);
    } else {
        throw LlmError("'parameter' must be a list");
    }
    if (r.parameters.size() != 2 && r.parameters.size() != 4) {
        throw LlmError("'parameter' must hold 2 (loop shaping) or 4 (PID) values");
    }
    return r;
}

std::optional<int> parse_agent_number(std::string_view text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            const int v = text[i] - '0';
            const bool single = i + 1 >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i + 1]));
            if (single && v >= 1 && v <= 6) {
                return v;
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

LlmReply parse_central_reply(const std::string& text) {
    const auto obj = extract_json_object(text);
    if (!obj) {
        throw LlmError("reply contains no JSON object");
    }
    const json j = json::parse(*obj);
    LlmReply r;
    r.raw = text;
    r.design_rationale = j.value("Task Analysis", std::string{});
    for (const char* key : {"Agent", "Agent Number"}) {
        if (!j.contains(key)) {
            continue;
        }
        const json& a = j.at(key);
        if (a.is_number_integer() && a.get<int>() >= 1 && a.get<int>() <= 6) {
            r.agent_number = a.get<int>();
        } else if (a.is_string()) {
            r.agent_number = parse_agent_number(a.get<std::string>());
        }
        if (r.agent_number) {
            return r;
        }
    }
    throw LlmError("reply lacks a valid agent number");
}

HttpChatTransport::HttpChatTransport(int in_flight_cap) : slots_(std::clamp(in_flight_cap, 1, 1024)) {}

std::string HttpChatTransport::complete(const LlmConfig& cfg, const std::string& system_text,
                                        const std::string& user_text) {
    const auto scheme_end = cfg.endpoint.find("://");
    const auto path_start = cfg.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string base = cfg.endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : cfg.endpoint.substr(path_start);

    json body;
    body["model"] = cfg.model;
    body["messages"] = json::array({{{"role", "system"}, {"content", system_text}},
                                    {{"role", "user"}, {"content", user_text}}});
    body["temperature"] = cfg.temperature;
    body["max_tokens"] = cfg.max_tokens;

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    slots_.acquire();
    httplib::Result res;
    try {
        httplib::Client client(base);
        const auto seconds = static_cast<time_t>(cfg.timeout_s);
        client.set_connection_timeout(seconds, 0);
        client.set_read_timeout(seconds, 0);
        client.set_write_timeout(seconds, 0);
        res = client.Post(path, headers, body.dump(), "application/json");
    } catch (...) {
        slots_.release();
        throw;
    }
    slots_.release();

    if (!res) {
        throw LlmError("request to " + cfg.endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw LlmError("endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw LlmError(std::string("unexpected chat-completion body: ") + e.what());
    }
}

LlmReply call_llm(const PromptBundle& bundle, const LlmConfig& cfg, ChatTransport& transport, ReplyKind kind) {
    std::string user = bundle.user_text;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        const std::string text = transport.complete(cfg, bundle.system_text, user);
        try {
            return kind == ReplyKind::design ? parse_design_reply(text) : parse_central_reply(text);
        } catch (const LlmError& e) {
            last_error = e.what();
        } catch (const json::exception& e) {
            last_error = e.what();
        }
        if (attempt == 0) {
            user += std::string("\n\n") + kNudge;
        }
    }
    throw LlmError("no parseable reply after " + std::to_string(cfg.retries) + " retries: " + last_error);
}

ControllerDesign design_from_parameters(const TransferFunction& plant, std::vector<double> params) {
    for (double& v : params) {
        if (!std::isfinite(v)) {
            throw LlmError("parameters must be finite");
        }
    }
    if (params.size() == 2) {
        LoopShapeParams p;
        p.omega_L = std::clamp(params[0], kParamMin, kParamMax);
        p.beta_b = std::clamp(params[1], kParamMin, kParamMax);
        p.gain_sign = stabilizing_gain_sign(plant);
        return loopshape_controller(plant, p);
    }
    if (params.size() == 4) {
        PidParams p{params[0], params[1], params[2], std::clamp(params[3], kParamMin, kParamMax)};
        return pid_controller(p);
    }
    throw LlmError("expected 2 or 4 parameters");
}

LlmPolicy::LlmPolicy(LlmConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) {
        transport_ = std::make_shared<HttpChatTransport>(config_.in_flight_cap);
    }
}

void LlmPolicy::begin_task(const TaskRequirement& req, SystemClass cls) {
    central_agent_.reset();
    if (!config_.use_central_agent) {
        return;
    }
    std::string note;
    try {
        const LlmReply r = call_llm(render_central_prompt(req), config_, *transport_, ReplyKind::central);
        central_agent_ = r.agent_number;
        if (central_agent_ && *central_agent_ != agent_number(cls)) {
            note = "central agent chose Agent " + std::to_string(*central_agent_) + ", analytic class is Agent " +
                   std::to_string(agent_number(cls)) + " (" + std::string(to_string(cls)) + "); using the analytic class";
        }
    } catch (const std::exception& e) {
        note = std::string("central agent unavailable: ") + e.what();
    }
    if (!note.empty()) {
        std::lock_guard lock(mu_);
        notes_.push_back(std::move(note));
    }
}

ControllerDesign LlmPolicy::propose(const DesignContext& ctx) {
    const PromptBundle bundle = render_task_prompt(ctx.system_class, ctx.requirement, ctx.memory, ctx.feedback);
    const LlmReply reply = call_llm(bundle, config_, *transport_, ReplyKind::design);
    return design_from_parameters(ctx.requirement.plant, reply.parameters);
}

std::vector<std::string> LlmPolicy::notes() const {
    std::lock_guard lock(mu_);
    return notes_;
}

}  // namespace ctrlsynth
