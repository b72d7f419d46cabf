#include "ctrlsynth/task.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace ctrlsynth {

namespace {

constexpr std::array<std::pair<ResponseMode, std::string_view>, 4> kModes{{
    {ResponseMode::fast, "fast"},
    {ResponseMode::moderate, "moderate"},
    {ResponseMode::slow, "slow"},
    {ResponseMode::unspecified, "unspecified"},
}};

constexpr std::array<std::pair<SystemClass, std::string_view>, 6> kClasses{{
    {SystemClass::first_order_stable, "first_order_stable"},
    {SystemClass::first_order_unstable, "first_order_unstable"},
    {SystemClass::second_order_stable, "second_order_stable"},
    {SystemClass::second_order_unstable, "second_order_unstable"},
    {SystemClass::first_order_delay, "first_order_delay"},
    {SystemClass::higher_order, "higher_order"},
}};

}  // namespace

std::string_view to_string(ResponseMode m) {
    for (const auto& [mode, name] : kModes) {
        if (mode == m) return name;
    }
    return "unspecified";
}

std::string_view to_string(SystemClass c) {
    for (const auto& [cls, name] : kClasses) {
        if (cls == c) return name;
    }
    return "higher_order";
}

std::optional<ResponseMode> parse_response_mode(std::string_view s) {
    for (const auto& [mode, name] : kModes) {
        if (name == s) return mode;
    }
    return std::nullopt;
}

std::optional<SystemClass> parse_system_class(std::string_view s) {
    for (const auto& [cls, name] : kClasses) {
        if (name == s) return cls;
    }
    return std::nullopt;
}

int agent_number(SystemClass c) {
    switch (c) {
    case SystemClass::first_order_stable: return 1;
    case SystemClass::first_order_unstable: return 2;
    case SystemClass::second_order_stable: return 3;
    case SystemClass::second_order_unstable: return 4;
    case SystemClass::first_order_delay: return 5;
    case SystemClass::higher_order: return 6;
    }
    return 6;
}

std::optional<SystemClass> class_from_agent_number(int agent) {
    for (const auto& [cls, name] : kClasses) {
        if (agent_number(cls) == agent) return cls;
    }
    return std::nullopt;
}

void TaskRequirement::validate() const {
    if (!(settling_time_min >= 0.0) || !(settling_time_min < settling_time_max)) {
        throw std::invalid_argument("requirement needs 0 <= settling_time_min < settling_time_max");
    }
    if (!(phase_margin_min > 0.0 && phase_margin_min < 180.0)) {
        throw std::invalid_argument("requirement phase_margin_min must lie in (0, 180) degrees");
    }
    if (!(ess_max >= 0.0)) {
        throw std::invalid_argument("requirement ess_max must be nonnegative");
    }
}

}  // namespace ctrlsynth
