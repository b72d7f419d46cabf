#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ctrlsynth/transfer_function.hpp"

namespace ctrlsynth {

enum class ResponseMode { fast, moderate, slow, unspecified };

enum class SystemClass {
    first_order_stable,
    first_order_unstable,
    second_order_stable,
    second_order_unstable,
    first_order_delay,
    higher_order,
};

[[nodiscard]] std::string_view to_string(ResponseMode m);
[[nodiscard]] std::string_view to_string(SystemClass c);
[[nodiscard]] std::optional<ResponseMode> parse_response_mode(std::string_view s);
[[nodiscard]] std::optional<SystemClass> parse_system_class(std::string_view s);

// Agent number 1..6 in the central-agent roster.
[[nodiscard]] int agent_number(SystemClass c);
[[nodiscard]] std::optional<SystemClass> class_from_agent_number(int agent);

// A plant and the closed-loop criteria a controller must meet.
struct TaskRequirement {
    TransferFunction plant;
    double phase_margin_min = 45.0;  // degrees
    double settling_time_min = 0.0;  // seconds
    double settling_time_max = 1.0;  // seconds
    double ess_max = 1e-4;
    ResponseMode mode = ResponseMode::unspecified;
    bool require_gain_margin_6db = false;

    // Throws std::invalid_argument naming the violated invariant.
    void validate() const;
};

}  // namespace ctrlsynth
