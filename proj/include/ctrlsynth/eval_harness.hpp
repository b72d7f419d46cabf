#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctrlsynth/dataset.hpp"
#include "ctrlsynth/design_loop.hpp"

namespace ctrlsynth {

// S[i][j] in {0,1}: system i, trial j.
class TrialMatrix {
public:
    TrialMatrix() = default;
    TrialMatrix(size_t n_systems, size_t n_trials);
    // Throws std::invalid_argument on ragged rows or entries outside {0,1}.
    explicit TrialMatrix(std::vector<std::vector<int>> outcomes);

    [[nodiscard]] size_t n_systems() const { return n_systems_; }
    [[nodiscard]] size_t n_trials() const { return n_trials_; }
    [[nodiscard]] int at(size_t i, size_t j) const { return cells_[i * n_trials_ + j]; }
    void set(size_t i, size_t j, bool success) { cells_[i * n_trials_ + j] = success ? 1 : 0; }
    [[nodiscard]] std::vector<std::vector<int>> rows() const;

private:
    size_t n_systems_ = 0;
    size_t n_trials_ = 0;
    std::vector<int> cells_;
};

struct ScoreReport {
    std::vector<double> asr_per_trial;  // percent
    double asr = 0.0;                   // percent
    double agsr = 0.0;                  // percent
    double mean_iterations_on_success = 0.0;
};

// ASR_j and their mean, in percent. Empty matrices score 0.
[[nodiscard]] ScoreReport asr(const TrialMatrix& m);
// Percentage of systems solved in at least one trial.
[[nodiscard]] double agsr(const TrialMatrix& m);

// Stability, settling window, PM and e_ss, plus the +/-6 dB gain margin
// when gain_margin_mode is set.
[[nodiscard]] bool success_check(const PerformanceReport& report, const TaskRequirement& req,
                                 bool gain_margin_mode);

// One (system, trial) cell.
struct CellResult {
    bool success = false;
    int iterations_used = 0;
    SystemClass system_class = SystemClass::first_order_stable;
    std::string error;  // non-empty when the cell aborted
    std::optional<DesignOutcome> outcome;
};

struct TrialRun {
    std::vector<TaskRequirement> tasks;  // one row per task
    std::vector<int> entry_ids;
    std::vector<ResponseMode> modes;
    TrialMatrix matrix;
    std::vector<std::vector<CellResult>> cells;  // [task][trial]
};

// Builds a fresh policy for (task index, trial index). Policies are not
// shared between cells.
using PolicyFactory = std::function<std::unique_ptr<DesignPolicy>(size_t task, size_t trial)>;

struct TrialOptions {
    int trials = 1;
    std::optional<int> n_max;
    bool gain_margin_mode = false;
    unsigned jobs = 0;  // 0: hardware concurrency
    bool keep_traces = false;
};

// Heuristic policies whose trial j uses perturbation stream j.
[[nodiscard]] PolicyFactory heuristic_factory(HeuristicConfig base = {});

// Runs every task of every entry for opts.trials trials on a bounded worker
// pool. Cell exceptions score 0 and are recorded, never propagated.
[[nodiscard]] TrialRun run_trials(const std::vector<DatasetEntry>& dataset, const PolicyFactory& factory,
                                  const TrialOptions& opts);
[[nodiscard]] TrialRun run_trials(const std::vector<TaskRequirement>& tasks, const PolicyFactory& factory,
                                  const TrialOptions& opts);

[[nodiscard]] ScoreReport score(const TrialRun& run);

// JSON {config, asr_per_trial, asr, agsr, mean_iterations_on_success, per_system}.
[[nodiscard]] std::string report_json(const TrialRun& run, const ScoreReport& s,
                                      const std::string& config_json);
// One row: label,N,T,asr,agsr,mean_iterations.
[[nodiscard]] std::string report_csv(const std::string& label, const TrialRun& run, const ScoreReport& s);

// Re-scores the matrix stored in a report produced by report_json.
[[nodiscard]] TrialMatrix matrix_from_report(const std::string& report_text);
// Matrix plus per-cell iteration counts, enough for score(). Tasks are not restored.
[[nodiscard]] TrialRun run_from_report(const std::string& report_text);

}  // namespace ctrlsynth
