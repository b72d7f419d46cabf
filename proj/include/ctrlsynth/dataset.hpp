#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctrlsynth/task.hpp"

namespace ctrlsynth {

struct SettlingWindow {
    double min = 0.0;
    double max = 0.0;
};

// One benchmark system and its requirements. Stable first/second-order
// entries carry a window per response mode; other families a single
// window tagged `unspecified`.
struct DatasetEntry {
    int id = 0;
    std::vector<double> num;
    std::vector<double> den;
    double delay = 0.0;
    double phase_margin_min = 0.0;
    std::vector<std::pair<ResponseMode, SettlingWindow>> windows;
    double steadystate_error_max = 1e-4;
    std::string metadata;

    [[nodiscard]] TransferFunction plant() const;
    // One task per settling window.
    [[nodiscard]] std::vector<TaskRequirement> tasks() const;
};

struct GeneratorConfig {
    SystemClass family = SystemClass::first_order_stable;
    int n = 50;
    std::uint64_t seed = 0;
    std::optional<ResponseMode> mode;  // keeps only this window when set
};

[[nodiscard]] std::vector<DatasetEntry> gen_first_order_stable(const GeneratorConfig& cfg);
[[nodiscard]] std::vector<DatasetEntry> gen_second_order_stable(const GeneratorConfig& cfg);
[[nodiscard]] std::vector<DatasetEntry> gen_second_order_unstable(const GeneratorConfig& cfg);
[[nodiscard]] std::vector<DatasetEntry> gen_first_order_delay(const GeneratorConfig& cfg);
[[nodiscard]] std::vector<DatasetEntry> gen_first_order_unstable(const GeneratorConfig& cfg);

// Dispatches on cfg.family. Higher-order systems are not generated; they
// come from curated files via load_dataset.
[[nodiscard]] std::vector<DatasetEntry> generate(const GeneratorConfig& cfg);

// Schema errors name the offending id and field.
class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] std::string dataset_to_json(const std::vector<DatasetEntry>& entries);
[[nodiscard]] std::vector<DatasetEntry> dataset_from_json(const std::string& text);

void save_dataset(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path);
[[nodiscard]] std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path);

}  // namespace ctrlsynth
