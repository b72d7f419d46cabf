#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ctrlsynth/design_loop.hpp"
#include "ctrlsynth/synthesis.hpp"
#include "ctrlsynth/task.hpp"

namespace ctrlsynth {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// {"family", "params", "num", "den"}.
[[nodiscard]] std::string controller_to_json(const ControllerDesign& d);
// Reads a controller file. "num"/"den" win when present; otherwise a PID is
// rebuilt from its params. Loop-shape files must carry num/den because Kp
// depends on the plant.
[[nodiscard]] TransferFunction controller_tf_from_json(const std::string& text);

// Array of {iteration, family, params, pm_deg, ts_s, ess, success, st_err_pct, pm_err_pct}.
[[nodiscard]] std::string trace_to_json(const MemoryBuffer& trace);

// {"num", "den", "delay"?}.
[[nodiscard]] std::string plant_to_json(const TransferFunction& plant);
[[nodiscard]] TransferFunction plant_from_json(const std::string& text);

// Plant fields plus phase_margin_min, settling_time_min, settling_time_max,
// steadystate_error_max (optional) and mode (optional).
[[nodiscard]] std::string task_to_json(const TaskRequirement& req);
[[nodiscard]] TaskRequirement task_from_json(const std::string& text);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ctrlsynth
