#include "ctrlsynth/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ctrlsynth {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

// JSON has no infinity; unbounded metrics are written as null.
ordered_json number_or_null(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

json parse(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

std::vector<double> coeffs(const json& j, const char* key, const char* what) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty()) {
        throw FormatError(std::string(what) + ": field '" + key + "' must be a non-empty number array");
    }
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) {
            throw FormatError(std::string(what) + ": field '" + key + "' must contain numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

double number(const json& j, const char* key, const char* what) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw FormatError(std::string(what) + ": missing numeric field '" + key + "'");
    }
    return j.at(key).get<double>();
}

TransferFunction plant_from(const json& j, const char* what) {
    const double delay = j.contains("delay") ? number(j, "delay", what) : 0.0;
    try {
        return TransferFunction(Polynomial(coeffs(j, "num", what)), Polynomial(coeffs(j, "den", what)), delay);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string controller_to_json(const ControllerDesign& d) {
    ordered_json j;
    j["family"] = std::string(to_string(d.family));
    j["params"] = d.parameter_list();
    j["num"] = d.tf.num().coeffs();
    j["den"] = d.tf.den().coeffs();
    return j.dump(2) + "\n";
}

TransferFunction controller_tf_from_json(const std::string& text) {
    const json j = parse(text, "controller");
    if (j.contains("num") && j.contains("den")) {
        return plant_from(j, "controller");
    }
    if (j.value("family", "") == "pid" && j.contains("params")) {
        const auto p = j.at("params").get<std::vector<double>>();
        if (p.size() != 4) {
            throw FormatError("controller: pid params must be [kp, ki, kd, tau_f]");
        }
        return pid_controller(PidParams{p[0], p[1], p[2], p[3]}).tf;
    }
    throw FormatError("controller: needs num/den, or family 'pid' with params");
}

std::string trace_to_json(const MemoryBuffer& trace) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : trace.records()) {
        ordered_json j;
        j["iteration"] = r.iteration;
        j["family"] = std::string(to_string(r.design.family));
        j["params"] = r.policy_failed ? std::vector<double>{} : r.design.parameter_list();
        j["pm_deg"] = number_or_null(r.report.margins.phase_margin_deg);
        j["ts_s"] = number_or_null(r.report.step.settling_time_s);
        j["ess"] = number_or_null(r.report.step.steady_state_error);
        j["success"] = !r.policy_failed && r.report.success;
        j["st_err_pct"] = number_or_null(r.feedback.settling_time_error_pct);
        j["pm_err_pct"] = number_or_null(r.feedback.phase_margin_error_pct);
        if (!r.diagnostic.empty()) {
            j["diagnostic"] = r.diagnostic;
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string plant_to_json(const TransferFunction& plant) {
    ordered_json j;
    j["num"] = plant.num().coeffs();
    j["den"] = plant.den().coeffs();
    if (plant.has_delay()) {
        j["delay"] = plant.delay();
    }
    return j.dump(2) + "\n";
}

TransferFunction plant_from_json(const std::string& text) { return plant_from(parse(text, "plant"), "plant"); }

std::string task_to_json(const TaskRequirement& req) {
    ordered_json j;
    j["num"] = req.plant.num().coeffs();
    j["den"] = req.plant.den().coeffs();
    if (req.plant.has_delay()) {
        j["delay"] = req.plant.delay();
    }
    j["phase_margin_min"] = req.phase_margin_min;
    j["settling_time_min"] = req.settling_time_min;
    j["settling_time_max"] = req.settling_time_max;
    j["steadystate_error_max"] = req.ess_max;
    j["mode"] = std::string(to_string(req.mode));
    return j.dump(2) + "\n";
}

TaskRequirement task_from_json(const std::string& text) {
    const json j = parse(text, "task");
    TaskRequirement req;
    req.plant = plant_from(j, "task");
    req.phase_margin_min = number(j, "phase_margin_min", "task");
    req.settling_time_min = number(j, "settling_time_min", "task");
    req.settling_time_max = number(j, "settling_time_max", "task");
    if (j.contains("steadystate_error_max")) {
        req.ess_max = number(j, "steadystate_error_max", "task");
    }
    if (j.contains("mode")) {
        const auto m = parse_response_mode(j.at("mode").get<std::string>());
        if (!m) {
            throw FormatError("task: unknown mode '" + j.at("mode").get<std::string>() + "'");
        }
        req.mode = *m;
    }
    try {
        req.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("task: ") + e.what());
    }
    return req;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

}  // namespace ctrlsynth
