#include "ctrlsynth/dataset.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ctrlsynth/rng.hpp"

namespace ctrlsynth {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<ResponseMode, 3> kModes{ResponseMode::fast, ResponseMode::moderate,
                                             ResponseMode::slow};

void add_window(DatasetEntry& e, const GeneratorConfig& cfg, ResponseMode mode, double lo, double hi) {
    if (cfg.mode && mode != ResponseMode::unspecified && *cfg.mode != mode) {
        return;
    }
    e.windows.push_back({mode, {lo, hi}});
}

std::vector<DatasetEntry> checked(const GeneratorConfig& cfg) {
    if (cfg.n < 1) {
        throw std::invalid_argument("generator needs n >= 1");
    }
    std::vector<DatasetEntry> out;
    out.reserve(static_cast<size_t>(cfg.n));
    return out;
}

}  // namespace

TransferFunction DatasetEntry::plant() const {
    return {Polynomial(num), Polynomial(den), delay};
}

std::vector<TaskRequirement> DatasetEntry::tasks() const {
    std::vector<TaskRequirement> out;
    const TransferFunction g = plant();
    for (const auto& [mode, w] : windows) {
        TaskRequirement req;
        req.plant = g;
        req.phase_margin_min = phase_margin_min;
        req.settling_time_min = w.min;
        req.settling_time_max = w.max;
        req.ess_max = steadystate_error_max;
        req.mode = mode;
        out.push_back(std::move(req));
    }
    return out;
}

std::vector<DatasetEntry> gen_first_order_stable(const GeneratorConfig& cfg) {
    auto out = checked(cfg);
    SplitMix64 rng(cfg.seed);
    for (int i = 0; i < cfg.n; ++i) {
        const double k = rng.uniform(0.1, 20);
        const double b = rng.uniform(0.1, 20);
        const double tau = 3 / b;
        DatasetEntry e;
        e.id = i;
        e.num = {k};
        e.den = {1, b};
        e.phase_margin_min = rng.uniform(45, 90);
        const double fast_min = rng.uniform(0, 0.001 * tau);
        const double fast_max = rng.uniform(0.3 * tau, 0.5 * tau);
        const double moderate_min = rng.uniform(0.1 * tau, 0.5 * tau);
        const double moderate_max = rng.uniform(tau, 5 * tau);
        const double slow_min = rng.uniform(5 * tau, 10 * tau);
        const double slow_max = rng.uniform(20 * tau, 30 * tau);
        add_window(e, cfg, ResponseMode::fast, fast_min, fast_max);
        add_window(e, cfg, ResponseMode::moderate, moderate_min, moderate_max);
        add_window(e, cfg, ResponseMode::slow, slow_min, slow_max);
        e.steadystate_error_max = 0.0001;
        e.metadata = "First order system with different response speed requirements.";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<DatasetEntry> gen_second_order_stable(const GeneratorConfig& cfg) {
    auto out = checked(cfg);
    SplitMix64 rng(cfg.seed);
    for (int i = 0; i < cfg.n; ++i) {
        const double zeta = rng.uniform(0.1, 0.99);
        const double omega = rng.uniform(0.1, 5);
        const double a = rng.uniform(0.1, 20);
        const double tau = 4 / (zeta * omega);
        DatasetEntry e;
        e.id = i;
        e.num = {a};
        e.den = {1, 2 * zeta * omega, omega * omega};
        e.phase_margin_min = rng.uniform(45, 65);
        const double fast_min = rng.uniform(0, 0.005 * tau);
        const double fast_max = rng.uniform(tau, 1.5 * tau);
        const double moderate_min = rng.uniform(2 * tau, 2.5 * tau);
        const double moderate_max = rng.uniform(3 * tau, 4 * tau);
        const double slow_min = rng.uniform(4 * tau, 5 * tau);
        const double slow_max = rng.uniform(6 * tau, 10 * tau);
        add_window(e, cfg, ResponseMode::fast, fast_min, fast_max);
        add_window(e, cfg, ResponseMode::moderate, moderate_min, moderate_max);
        add_window(e, cfg, ResponseMode::slow, slow_min, slow_max);
        e.steadystate_error_max = 0.0001;
        e.metadata = "Second order stable system with different response speed requirements.";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<DatasetEntry> gen_second_order_unstable(const GeneratorConfig& cfg) {
    auto out = checked(cfg);
    SplitMix64 rng(cfg.seed);
    for (int i = 0; i < cfg.n; ++i) {
        DatasetEntry e;
        e.id = i;
        double settle_scale = 0.0;
        if (i % 2 == 0) {
            // Two right-half-plane poles.
            const double zeta = rng.uniform(0.1, 0.99);
            const double omega = rng.uniform(0.1, 5);
            const double a = rng.uniform(0.1, 20);
            settle_scale = 4 / (omega * zeta);
            e.num = {a};
            e.den = {1, -2 * zeta * omega, omega * omega};
        } else {
            // (s + B)(s + C) with C < 0: one right-half-plane pole.
            const double a = rng.uniform(0.1, 20);
            const double b = rng.uniform(0.1, 20);
            const double c = rng.uniform(0, -20);
            settle_scale = 3 / std::min(b, std::abs(c));
            e.num = {a};
            e.den = {1, b + c, b * c};
        }
        e.phase_margin_min = rng.uniform(45, 65);
        const double ts_min = rng.uniform(0, 0.05 * settle_scale);
        const double ts_max = rng.uniform(settle_scale, 1.5 * settle_scale);
        (void)rng.uniform(5, 20);  // overshoot_max: drawn, never emitted
        e.windows.push_back({ResponseMode::unspecified, {ts_min, ts_max}});
        e.steadystate_error_max = 0.0001;
        e.metadata = "Second order unstable system with different response speed requirements.";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<DatasetEntry> gen_first_order_delay(const GeneratorConfig& cfg) {
    auto out = checked(cfg);
    SplitMix64 rng(cfg.seed);
    for (int i = 0; i < cfg.n; ++i) {
        const double k = rng.uniform(0.1, 20);
        const double b = rng.uniform(0.1, 20);
        const double tau = 3 / b;
        DatasetEntry e;
        e.id = i;
        e.num = {k};
        e.den = {1, b};
        e.delay = rng.uniform(0.1 * tau, 0.2 * tau);
        e.phase_margin_min = rng.uniform(45, 65);
        const double ts_min = rng.uniform(4 * tau, 5 * tau);
        const double ts_max = rng.uniform(40 * tau, 50 * tau);
        e.windows.push_back({ResponseMode::unspecified, {ts_min, ts_max}});
        e.steadystate_error_max = 0.0001;
        e.metadata = "First order system with time delay.";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<DatasetEntry> gen_first_order_unstable(const GeneratorConfig& cfg) {
    auto out = checked(cfg);
    SplitMix64 rng(cfg.seed);
    for (int i = 0; i < cfg.n; ++i) {
        const double k = rng.uniform(0.1, 20);
        const double b = rng.uniform(0.1, 20);
        const double tau = 3 / b;
        DatasetEntry e;
        e.id = i;
        e.num = {k};
        e.den = {1, -b};
        e.phase_margin_min = rng.uniform(45, 65);
        const double ts_min = rng.uniform(0, 0.05 * tau);
        const double ts_max = rng.uniform(tau, 1.5 * tau);
        e.windows.push_back({ResponseMode::unspecified, {ts_min, ts_max}});
        e.steadystate_error_max = 0.0001;
        e.metadata = "First order unstable system with different response speed requirements.";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<DatasetEntry> generate(const GeneratorConfig& cfg) {
    switch (cfg.family) {
    case SystemClass::first_order_stable: return gen_first_order_stable(cfg);
    case SystemClass::first_order_unstable: return gen_first_order_unstable(cfg);
    case SystemClass::second_order_stable: return gen_second_order_stable(cfg);
    case SystemClass::second_order_unstable: return gen_second_order_unstable(cfg);
    case SystemClass::first_order_delay: return gen_first_order_delay(cfg);
    case SystemClass::higher_order:
        throw std::invalid_argument("higher-order systems are curated, not generated; load them from a file");
    }
    throw std::invalid_argument("unknown system family");
}

std::string dataset_to_json(const std::vector<DatasetEntry>& entries) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : entries) {
        ordered_json j;
        j["id"] = e.id;
        j["num"] = e.num;
        j["den"] = e.den;
        if (e.delay > 0.0) {
            j["delay"] = e.delay;
        }
        j["phase_margin_min"] = e.phase_margin_min;
        for (const auto& [mode, w] : e.windows) {
            if (mode == ResponseMode::unspecified) {
                j["settling_time_min"] = w.min;
                j["settling_time_max"] = w.max;
            } else {
                const std::string suffix(to_string(mode));
                j["settling_time_min_" + suffix] = w.min;
                j["settling_time_max_" + suffix] = w.max;
            }
        }
        j["steadystate_error_max"] = e.steadystate_error_max;
        j["metadata"] = e.metadata;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

namespace {

[[noreturn]] void schema_error(const std::string& id, const std::string& field, const std::string& what) {
    throw DatasetError("dataset entry " + id + ": field '" + field + "' " + what);
}

double number_field(const ordered_json& j, const std::string& id, const std::string& field) {
    if (!j.contains(field)) {
        schema_error(id, field, "is missing");
    }
    if (!j[field].is_number()) {
        schema_error(id, field, "must be a number");
    }
    return j[field].get<double>();
}

std::vector<double> coeff_field(const ordered_json& j, const std::string& id, const std::string& field) {
    if (!j.contains(field)) {
        schema_error(id, field, "is missing");
    }
    const auto& v = j[field];
    if (!v.is_array() || v.empty()) {
        schema_error(id, field, "must be a non-empty array of numbers");
    }
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) {
            schema_error(id, field, "must be a non-empty array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace

std::vector<DatasetEntry> dataset_from_json(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DatasetError(std::string("dataset is not valid JSON: ") + e.what());
    }
    if (!root.is_array()) {
        throw DatasetError("dataset must be a JSON array of entries");
    }
    std::vector<DatasetEntry> out;
    for (size_t idx = 0; idx < root.size(); ++idx) {
        const auto& j = root[idx];
        if (!j.is_object()) {
            throw DatasetError("dataset entry #" + std::to_string(idx) + " is not an object");
        }
        std::string id_text = "#" + std::to_string(idx);
        DatasetEntry e;
        if (!j.contains("id") || !j["id"].is_number_integer()) {
            schema_error(id_text, "id", "must be an integer");
        }
        e.id = j["id"].get<int>();
        id_text = std::to_string(e.id);
        e.num = coeff_field(j, id_text, "num");
        e.den = coeff_field(j, id_text, "den");
        if (j.contains("delay")) {
            e.delay = number_field(j, id_text, "delay");
            if (e.delay < 0.0) {
                schema_error(id_text, "delay", "must be nonnegative");
            }
        }
        e.phase_margin_min = number_field(j, id_text, "phase_margin_min");
        for (ResponseMode mode : kModes) {
            const std::string suffix(to_string(mode));
            const std::string kmin = "settling_time_min_" + suffix;
            const std::string kmax = "settling_time_max_" + suffix;
            if (j.contains(kmin) || j.contains(kmax)) {
                e.windows.push_back({mode, {number_field(j, id_text, kmin), number_field(j, id_text, kmax)}});
            }
        }
        if (e.windows.empty() || j.contains("settling_time_min") || j.contains("settling_time_max")) {
            e.windows.push_back({ResponseMode::unspecified,
                                 {number_field(j, id_text, "settling_time_min"),
                                  number_field(j, id_text, "settling_time_max")}});
        }
        for (const auto& [mode, w] : e.windows) {
            if (!(w.min < w.max)) {
                schema_error(id_text, "settling_time_max", "must exceed settling_time_min");
            }
        }
        e.steadystate_error_max = number_field(j, id_text, "steadystate_error_max");
        if (j.contains("metadata")) {
            if (!j["metadata"].is_string()) {
                schema_error(id_text, "metadata", "must be a string");
            }
            e.metadata = j["metadata"].get<std::string>();
        }
        try {
            (void)e.plant();
        } catch (const std::exception& ex) {
            schema_error(id_text, "den", std::string("does not form a valid plant: ") + ex.what());
        }
        out.push_back(std::move(e));
    }
    return out;
}

void save_dataset(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DatasetError("cannot write dataset file " + path.string());
    }
    out << dataset_to_json(entries);
}

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("cannot read dataset file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_json(buf.str());
}

}  // namespace ctrlsynth
