#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "ctrlsynth/design_loop.hpp"

namespace ctrlsynth {

struct PromptBundle {
    std::string system_text;
    // Requirements first; always ends with the response instruction.
    std::string user_text;
};

struct LlmReply {
    std::string raw;
    std::string design_rationale;
    std::vector<double> parameters;
    std::optional<int> agent_number;  // central replies only
};

// Transport or protocol failure, or a reply that never parsed. Derives from
// PolicyError so run_design records it as a failed iteration.
class LlmError : public PolicyError {
public:
    using PolicyError::PolicyError;
};

struct LlmConfig {
    std::string endpoint;  // e.g. http://localhost:8080/v1/chat/completions
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
    int retries = 3;
    int in_flight_cap = 4;
    std::string api_key_env = "CTRLSYNTH_API_KEY";
    double timeout_s = 120.0;
    // Ask the central agent for a class before the first design (advisory).
    bool use_central_agent = true;
};

struct SamplingDefaults {
    double temperature = 0.0;
    int max_tokens = 1024;
};

// Per-model sampling settings: temperature 1 for Claude and Gemini models
// (Gemini with 8192 tokens), temperature 0 and 1024 tokens otherwise.
[[nodiscard]] SamplingDefaults sampling_defaults(std::string_view model);

// Keys: endpoint, model, temperature, max_tokens, retries, in_flight_cap,
// api_key_env, timeout_s, use_central_agent. Throws std::invalid_argument.
[[nodiscard]] LlmConfig llm_config_from_json(const std::string& text);
[[nodiscard]] LlmConfig load_llm_config(const std::filesystem::path& path);

// Specification lines in the user-request format.
[[nodiscard]] std::string requirement_text(const TaskRequirement& req);

[[nodiscard]] PromptBundle render_central_prompt(const TaskRequirement& req);

// One line per evaluated record, e.g.
// "Design 2: parameters [2, 3.1622776601683795] -> phase margin 83.48 deg, settling time 3.993 sec, success: no"
[[nodiscard]] std::string history_line(const DesignRecord& record);

[[nodiscard]] PromptBundle render_task_prompt(SystemClass cls, const TaskRequirement& req,
                                              const MemoryBuffer& memory, const Feedback& fb);

// First balanced JSON object in text, preferring a ```json fenced block.
[[nodiscard]] std::optional<std::string> extract_json_object(std::string_view text);

// Number list from "[2, 3.1623]" or "2, 3.1623".
[[nodiscard]] std::optional<std::vector<double>> parse_number_list(std::string_view text);

// Reply with keys 'design' and 'parameter' (array or string-encoded array).
// Throws LlmError when either is missing or malformed.
[[nodiscard]] LlmReply parse_design_reply(const std::string& text);

// Reply with 'Task Requirement', 'Task Analysis' and 'Agent' (or 'Agent Number').
[[nodiscard]] LlmReply parse_central_reply(const std::string& text);

// "Agent 1 for first-order stable systems controller design." -> 1.
[[nodiscard]] std::optional<int> parse_agent_number(std::string_view text);

// Chat-completion transport: returns the assistant message text.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const LlmConfig& cfg, const std::string& system_text,
                                 const std::string& user_text) = 0;
};

// OpenAI-compatible HTTP(S) POST with a bearer token read from
// cfg.api_key_env. Concurrent calls are capped at cfg.in_flight_cap.
class HttpChatTransport final : public ChatTransport {
public:
    explicit HttpChatTransport(int in_flight_cap = 4);
    std::string complete(const LlmConfig& cfg, const std::string& system_text,
                         const std::string& user_text) override;

private:
    std::counting_semaphore<1024> slots_;
};

enum class ReplyKind { design, central };

// Sends the bundle; on a reply that does not parse, resends with
// "respond with valid JSON only" appended, up to cfg.retries times.
[[nodiscard]] LlmReply call_llm(const PromptBundle& bundle, const LlmConfig& cfg, ChatTransport& transport,
                                ReplyKind kind = ReplyKind::design);

// Design policy backed by a chat model. Parameters are clamped to
// [1e-4, 1e6]; two values select loop shaping, four select PID.
class LlmPolicy final : public DesignPolicy {
public:
    LlmPolicy(LlmConfig config, std::shared_ptr<ChatTransport> transport);

    void begin_task(const TaskRequirement& req, SystemClass cls) override;
    ControllerDesign propose(const DesignContext& ctx) override;

    // Advisory notes, e.g. a central-agent class that disagrees with the analytic one.
    [[nodiscard]] std::vector<std::string> notes() const;
    [[nodiscard]] std::optional<int> central_agent() const { return central_agent_; }

private:
    LlmConfig config_;
    std::shared_ptr<ChatTransport> transport_;
    std::optional<int> central_agent_;
    mutable std::mutex mu_;
    std::vector<std::string> notes_;
};

// Builds a design from a parameter list: [omega_L, beta_b] or [kp, ki, kd, tau_f].
[[nodiscard]] ControllerDesign design_from_parameters(const TransferFunction& plant, std::vector<double> params);

}  // namespace ctrlsynth
