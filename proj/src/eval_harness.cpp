#include "ctrlsynth/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace ctrlsynth {

using ordered_json = nlohmann::ordered_json;

TrialMatrix::TrialMatrix(size_t n_systems, size_t n_trials)
    : n_systems_(n_systems), n_trials_(n_trials), cells_(n_systems * n_trials, 0) {}

TrialMatrix::TrialMatrix(std::vector<std::vector<int>> outcomes) {
    n_systems_ = outcomes.size();
    n_trials_ = outcomes.empty() ? 0 : outcomes.front().size();
    cells_.reserve(n_systems_ * n_trials_);
    for (const auto& row : outcomes) {
        if (row.size() != n_trials_) {
            throw std::invalid_argument("trial matrix rows must have equal length");
        }
        for (int v : row) {
            if (v != 0 && v != 1) {
                throw std::invalid_argument("trial matrix entries must be 0 or 1");
            }
            cells_.push_back(v);
        }
    }
}

std::vector<std::vector<int>> TrialMatrix::rows() const {
    std::vector<std::vector<int>> out(n_systems_, std::vector<int>(n_trials_));
    for (size_t i = 0; i < n_systems_; ++i) {
        for (size_t j = 0; j < n_trials_; ++j) {
            out[i][j] = at(i, j);
        }
    }
    return out;
}

ScoreReport asr(const TrialMatrix& m) {
    ScoreReport s;
    if (m.n_systems() == 0 || m.n_trials() == 0) {
        s.asr_per_trial.assign(m.n_trials(), 0.0);
        return s;
    }
    const auto n = static_cast<double>(m.n_systems());
    double total = 0.0;
    for (size_t j = 0; j < m.n_trials(); ++j) {
        long hits = 0;
        for (size_t i = 0; i < m.n_systems(); ++i) {
            hits += m.at(i, j);
        }
        const double asr_j = static_cast<double>(hits) / n * 100.0;
        s.asr_per_trial.push_back(asr_j);
        total += asr_j;
    }
    s.asr = total / static_cast<double>(m.n_trials());
    s.agsr = agsr(m);
    return s;
}

double agsr(const TrialMatrix& m) {
    if (m.n_systems() == 0) {
        return 0.0;
    }
    long solved = 0;
    for (size_t i = 0; i < m.n_systems(); ++i) {
        for (size_t j = 0; j < m.n_trials(); ++j) {
            if (m.at(i, j) != 0) {
                ++solved;
                break;
            }
        }
    }
    return static_cast<double>(solved) / static_cast<double>(m.n_systems()) * 100.0;
}

bool success_check(const PerformanceReport& report, const TaskRequirement& req, bool gain_margin_mode) {
    PerformanceReport r = report;
    TaskRequirement q = req;
    q.require_gain_margin_6db = gain_margin_mode;
    apply_requirement(r, q);
    return r.success;
}

PolicyFactory heuristic_factory(HeuristicConfig base) {
    return [base](size_t, size_t trial) {
        HeuristicConfig cfg = base;
        cfg.stream = base.stream + trial;
        return std::make_unique<HeuristicPolicy>(cfg);
    };
}

namespace {

CellResult run_cell(const TaskRequirement& req, DesignPolicy& policy, const TrialOptions& opts) {
    CellResult cell;
    try {
        cell.system_class = classify_system(req.plant);
        const int n_max = opts.n_max.value_or(default_n_max(cell.system_class));
        DesignOutcome out = run_design(req, policy, n_max);
        cell.iterations_used = out.iterations_used;
        cell.success = out.success;
        if (cell.success && opts.gain_margin_mode) {
            cell.success = success_check(out.trace.records().back().report, req, true);
        }
        if (opts.keep_traces) {
            cell.outcome = std::move(out);
        }
    } catch (const std::exception& e) {
        cell.success = false;
        cell.error = e.what();
    }
    return cell;
}

}  // namespace

TrialRun run_trials(const std::vector<DatasetEntry>& dataset, const PolicyFactory& factory,
                    const TrialOptions& opts) {
    std::vector<TaskRequirement> tasks;
    std::vector<int> ids;
    for (const auto& e : dataset) {
        for (auto& t : e.tasks()) {
            tasks.push_back(std::move(t));
            ids.push_back(e.id);
        }
    }
    TrialRun run = run_trials(tasks, factory, opts);
    run.entry_ids = std::move(ids);
    return run;
}

TrialRun run_trials(const std::vector<TaskRequirement>& tasks, const PolicyFactory& factory,
                    const TrialOptions& opts) {
    if (opts.trials < 1) {
        throw std::invalid_argument("trials must be at least 1");
    }
    if (opts.n_max && *opts.n_max < 1) {
        throw std::invalid_argument("n_max must be at least 1");
    }
    const auto T = static_cast<size_t>(opts.trials);
    TrialRun run;
    run.tasks = tasks;
    for (size_t i = 0; i < tasks.size(); ++i) {
        run.entry_ids.push_back(static_cast<int>(i));
        run.modes.push_back(tasks[i].mode);
    }
    run.matrix = TrialMatrix(tasks.size(), T);
    run.cells.assign(tasks.size(), std::vector<CellResult>(T));

    const size_t n_cells = tasks.size() * T;
    unsigned jobs = opts.jobs != 0 ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<size_t>(jobs, std::max<size_t>(n_cells, 1)));

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t c = next.fetch_add(1); c < n_cells; c = next.fetch_add(1)) {
            const size_t i = c / T;
            const size_t j = c % T;
            CellResult cell;
            try {
                auto policy = factory(i, j);
                cell = run_cell(tasks[i], *policy, opts);
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            run.cells[i][j] = std::move(cell);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back(worker);
        }
    }
    for (size_t i = 0; i < tasks.size(); ++i) {
        for (size_t j = 0; j < T; ++j) {
            run.matrix.set(i, j, run.cells[i][j].success);
        }
    }
    return run;
}

ScoreReport score(const TrialRun& run) {
    ScoreReport s = asr(run.matrix);
    long successes = 0;
    long iterations = 0;
    for (const auto& row : run.cells) {
        for (const auto& c : row) {
            if (c.success) {
                ++successes;
                iterations += c.iterations_used;
            }
        }
    }
    s.mean_iterations_on_success =
        successes > 0 ? static_cast<double>(iterations) / static_cast<double>(successes) : 0.0;
    return s;
}

std::string report_json(const TrialRun& run, const ScoreReport& s, const std::string& config_json) {
    ordered_json j;
    j["config"] = config_json.empty() ? ordered_json::object() : ordered_json::parse(config_json);
    j["asr_per_trial"] = s.asr_per_trial;
    j["asr"] = s.asr;
    j["agsr"] = s.agsr;
    j["mean_iterations_on_success"] = s.mean_iterations_on_success;
    ordered_json per = ordered_json::array();
    for (size_t i = 0; i < run.cells.size(); ++i) {
        ordered_json row;
        row["id"] = i < run.entry_ids.size() ? run.entry_ids[i] : static_cast<int>(i);
        row["mode"] = std::string(to_string(run.tasks[i].mode));
        row["system_class"] =
            std::string(to_string(run.cells[i].empty() ? SystemClass::higher_order : run.cells[i][0].system_class));
        std::vector<int> outcomes;
        std::vector<int> iters;
        ordered_json errors = ordered_json::array();
        for (const auto& c : run.cells[i]) {
            outcomes.push_back(c.success ? 1 : 0);
            iters.push_back(c.iterations_used);
            if (!c.error.empty()) {
                errors.push_back(c.error);
            }
        }
        row["outcomes"] = outcomes;
        row["iterations"] = iters;
        if (!errors.empty()) {
            row["errors"] = errors;
        }
        per.push_back(std::move(row));
    }
    j["per_system"] = std::move(per);
    return j.dump(2) + "\n";
}

std::string report_csv(const std::string& label, const TrialRun& run, const ScoreReport& s) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "label,N,T,asr,agsr,mean_iterations\n%s,%zu,%zu,%.2f,%.2f,%.2f\n",
                  label.c_str(), run.matrix.n_systems(), run.matrix.n_trials(), s.asr, s.agsr,
                  s.mean_iterations_on_success);
    return buf;
}

TrialMatrix matrix_from_report(const std::string& report_text) {
    const auto j = nlohmann::json::parse(report_text);
    std::vector<std::vector<int>> rows;
    for (const auto& row : j.at("per_system")) {
        rows.push_back(row.at("outcomes").get<std::vector<int>>());
    }
    return TrialMatrix(std::move(rows));
}

TrialRun run_from_report(const std::string& report_text) {
    const auto j = nlohmann::json::parse(report_text);
    TrialRun run;
    run.matrix = matrix_from_report(report_text);
    for (const auto& row : j.at("per_system")) {
        const auto outcomes = row.at("outcomes").get<std::vector<int>>();
        const auto iters = row.value("iterations", std::vector<int>(outcomes.size(), 0));
        if (iters.size() != outcomes.size()) {
            throw std::invalid_argument("report: iterations and outcomes differ in length");
        }
        std::vector<CellResult> cells(outcomes.size());
        for (size_t k = 0; k < outcomes.size(); ++k) {
            cells[k].success = outcomes[k] == 1;
            cells[k].iterations_used = iters[k];
        }
        run.cells.push_back(std::move(cells));
        run.entry_ids.push_back(row.value("id", static_cast<int>(run.entry_ids.size())));
    }
    return run;
}

}  // namespace ctrlsynth
