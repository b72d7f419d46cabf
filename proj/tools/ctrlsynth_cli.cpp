// Command-line front end for the ctrlsynth library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctrlsynth/analysis.hpp"
#include "ctrlsynth/dataset.hpp"
#include "ctrlsynth/design_loop.hpp"
#include "ctrlsynth/eval_harness.hpp"
#include "ctrlsynth/llm_backend.hpp"
#include "ctrlsynth/serialize.hpp"

namespace ca = ctrlsynth;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kTaskError = 1;
constexpr int kConfigError = 2;

// Bad inputs (missing files, schema errors, invalid flag values).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string family;
    int n = 50;
    std::uint64_t seed = 0;
    std::string mode;
    std::string out;
    std::string task;
    std::string dataset;
    std::string policy = "heuristic";
    std::string llm_config;
    int max_iters = 0;
    int trials = 1;
    bool gain_margin = false;
    unsigned jobs = 0;
    std::string csv;
    std::string controller_out;
    std::string report;
    std::string plant;
    std::string controller;
    double horizon = 0.0;
    double dt = 0.0;
    bool open_loop = false;
};

template <typename F>
auto config_guard(const char* what, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    ca::write_text_file(path, text);
}

void write_manifest(const std::string& out, const std::vector<std::string>& argv, std::uint64_t seed) {
    if (out.empty() || out == "-") {
        return;
    }
    ordered_json m;
    m["tool"] = "ctrlsynth";
    m["version"] = CTRLSYNTH_VERSION;
    m["argv"] = argv;
    m["seed"] = seed;
    ca::write_text_file(out + ".manifest.json", m.dump(2) + "\n");
}

std::shared_ptr<ca::ChatTransport> shared_transport(const ca::LlmConfig& cfg) {
    return std::make_shared<ca::HttpChatTransport>(cfg.in_flight_cap);
}

ca::LlmConfig llm_config(const Options& o) {
    if (o.llm_config.empty()) {
        throw ConfigError("--policy llm requires --llm-config");
    }
    return config_guard("llm config", [&] { return ca::load_llm_config(o.llm_config); });
}

int cmd_gen(const Options& o) {
    ca::GeneratorConfig cfg;
    const auto fam = ca::parse_system_class(o.family);
    if (!fam) {
        throw ConfigError("unknown family '" + o.family + "'");
    }
    cfg.family = *fam;
    cfg.n = o.n;
    cfg.seed = o.seed;
    if (!o.mode.empty()) {
        const auto m = ca::parse_response_mode(o.mode);
        if (!m) {
            throw ConfigError("unknown mode '" + o.mode + "'");
        }
        cfg.mode = *m;
    }
    const auto entries = config_guard("gen", [&] { return ca::generate(cfg); });
    write_output(o.out, ca::dataset_to_json(entries));
    return kOk;
}

int cmd_design(const Options& o) {
    ca::TaskRequirement req = config_guard("task", [&] { return ca::task_from_json(ca::read_text_file(o.task)); });
    req.require_gain_margin_6db = o.gain_margin;
    std::unique_ptr<ca::DesignPolicy> policy;
    if (o.policy == "heuristic") {
        policy = std::make_unique<ca::HeuristicPolicy>();
    } else if (o.policy == "llm") {
        const auto cfg = llm_config(o);
        policy = std::make_unique<ca::LlmPolicy>(cfg, shared_transport(cfg));
    } else {
        throw ConfigError("unknown policy '" + o.policy + "'");
    }
    const int n_max = o.max_iters > 0 ? o.max_iters : ca::default_n_max(ca::classify_system(req.plant));
    const ca::DesignOutcome out = ca::run_design(req, *policy, n_max);
    write_output(o.out, ca::trace_to_json(out.trace));
    if (auto* llm = dynamic_cast<ca::LlmPolicy*>(policy.get())) {
        for (const auto& note : llm->notes()) {
            std::cerr << "note: " << note << "\n";
        }
    }
    if (out.final && !o.controller_out.empty()) {
        ca::write_text_file(o.controller_out, ca::controller_to_json(*out.final));
    }
    std::cerr << (out.success ? "success" : "no design met the requirements") << " after "
              << out.iterations_used << " iteration(s)\n";
    return out.success ? kOk : kTaskError;
}

int cmd_eval(const Options& o, const std::vector<std::string>& argv) {
    const auto dataset = config_guard("dataset", [&] { return ca::load_dataset(o.dataset); });
    ca::TrialOptions topt;
    topt.trials = o.trials;
    topt.gain_margin_mode = o.gain_margin;
    topt.jobs = o.jobs;
    if (o.max_iters > 0) {
        topt.n_max = o.max_iters;
    }
    ca::PolicyFactory factory;
    if (o.policy == "heuristic") {
        factory = ca::heuristic_factory();
    } else if (o.policy == "llm") {
        const auto cfg = llm_config(o);
        auto transport = shared_transport(cfg);
        factory = [cfg, transport](size_t, size_t) { return std::make_unique<ca::LlmPolicy>(cfg, transport); };
    } else {
        throw ConfigError("unknown policy '" + o.policy + "'");
    }
    const ca::TrialRun run = ca::run_trials(dataset, factory, topt);
    const ca::ScoreReport s = ca::score(run);

    ordered_json config;
    config["dataset"] = o.dataset;
    config["policy"] = o.policy;
    config["trials"] = o.trials;
    config["n_max"] = o.max_iters > 0 ? ordered_json(o.max_iters) : ordered_json("per-class default");
    config["gain_margin_mode"] = o.gain_margin;
    write_output(o.out, ca::report_json(run, s, config.dump()));
    if (!o.csv.empty()) {
        ca::write_text_file(o.csv, ca::report_csv(o.dataset, run, s));
        write_manifest(o.csv, argv, 0);
    }
    std::fprintf(stderr, "ASR %.2f%%  AgSR %.2f%%  mean iterations %.2f\n", s.asr, s.agsr,
                 s.mean_iterations_on_success);
    return kOk;
}

int cmd_report(const Options& o) {
    const std::string text = config_guard("report", [&] { return ca::read_text_file(o.report); });
    const auto run = config_guard("report", [&] { return ca::run_from_report(text); });
    write_output(o.out, ca::report_csv(o.report, run, ca::score(run)));
    return kOk;
}

struct LoopFiles {
    ca::TransferFunction plant;
    ca::TransferFunction controller;
};

LoopFiles load_loop(const Options& o) {
    LoopFiles f;
    f.plant = config_guard("plant", [&] { return ca::plant_from_json(ca::read_text_file(o.plant)); });
    f.controller = config_guard("controller", [&] { return ca::controller_tf_from_json(ca::read_text_file(o.controller)); });
    return f;
}

int cmd_bode(const Options& o) {
    const LoopFiles f = load_loop(o);
    const auto loop = ca::tf_series(f.plant, f.controller);
    const auto grid = ca::log_grid(ca::kMarginOmegaMin, ca::kMarginOmegaMax, 40);
    std::ostringstream s;
    ca::write_bode_csv(s, ca::freq_response(loop, grid));
    write_output(o.out, s.str());
    return kOk;
}

int cmd_step(const Options& o) {
    const LoopFiles f = load_loop(o);
    const auto loop = ca::tf_series(f.plant, f.controller);
    double horizon = o.horizon;
    double dt = o.dt;
    if (horizon <= 0.0 || dt <= 0.0) {
        // Reuse the evaluator's grid: a 1-second window is only a placeholder
        // requirement for picking dt and the horizon.
        ca::TaskRequirement req;
        req.plant = f.plant;
        ca::EvaluationOptions eo;
        eo.keep_trajectory = true;
        eo.dt_override = dt;
        const auto ev = ca::evaluate_closed_loop(f.plant, f.controller, req, eo);
        if (horizon <= 0.0 && !ev.trajectory.y.empty()) {
            horizon = ev.trajectory.horizon();
        }
        if (dt <= 0.0) {
            dt = ev.trajectory.dt > 0.0 ? ev.trajectory.dt : 1e-3;
        }
        if (horizon <= 0.0) {
            horizon = 10.0;
        }
    }
    const ca::Trajectory traj = o.open_loop ? ca::step_response(loop, horizon, dt)
                                            : ca::closed_loop_step_response(loop, horizon, dt);
    std::ostringstream s;
    ca::write_step_csv(s, traj);
    write_output(o.out, s.str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Controller design and benchmark evaluation"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen", "Generate a benchmark dataset");
    gen->add_option("--family", o.family, "first_order_stable | second_order_stable | second_order_unstable | "
                                          "first_order_delay | first_order_unstable")->required();
    gen->add_option("--n", o.n, "Number of systems")->check(CLI::PositiveNumber);
    gen->add_option("--seed", o.seed, "RNG seed")->required();
    gen->add_option("--mode", o.mode, "Keep only this response mode (fast | moderate | slow)");
    gen->add_option("--out", o.out, "Output JSON (default stdout)");

    auto* design = app.add_subcommand("design", "Design a controller for one task");
    design->add_option("--task", o.task, "Task JSON")->required();
    design->add_option("--policy", o.policy, "heuristic | llm");
    design->add_option("--llm-config", o.llm_config, "LLM endpoint config JSON");
    design->add_option("--max-iters", o.max_iters, "Iteration budget (default per system class)")->check(CLI::PositiveNumber);
    design->add_flag("--gain-margin", o.gain_margin, "Also require gain margin within +/-6 dB");
    design->add_option("--out", o.out, "Trace JSON (default stdout)");
    design->add_option("--controller-out", o.controller_out, "Final controller JSON");

    auto* eval = app.add_subcommand("eval", "Run a policy over a dataset and score it");
    eval->add_option("--dataset", o.dataset, "Dataset JSON")->required();
    eval->add_option("--policy", o.policy, "heuristic | llm")->required();
    eval->add_option("--llm-config", o.llm_config, "LLM endpoint config JSON");
    eval->add_option("--trials", o.trials, "Trials per system")->check(CLI::PositiveNumber);
    eval->add_option("--max-iters", o.max_iters, "Iteration budget override")->check(CLI::PositiveNumber);
    eval->add_flag("--gain-margin", o.gain_margin, "Also require gain margin within +/-6 dB");
    eval->add_option("--jobs", o.jobs, "Worker threads (default: hardware concurrency)");
    eval->add_option("--out", o.out, "Report JSON (default stdout)");
    eval->add_option("--csv", o.csv, "Summary CSV row");

    auto* report = app.add_subcommand("report", "Re-score a stored report");
    report->add_option("--report", o.report, "Report JSON from eval")->required();
    report->add_option("--out", o.out, "CSV (default stdout)");

    auto* bode = app.add_subcommand("bode", "Loop frequency response as CSV");
    auto* step = app.add_subcommand("step", "Closed-loop step response as CSV");
    for (auto* sub : {bode, step}) {
        sub->add_option("--plant", o.plant, "Plant JSON")->required();
        sub->add_option("--controller", o.controller, "Controller JSON")->required();
        sub->add_option("--out", o.out, "CSV (default stdout)");
    }
    step->add_option("--horizon", o.horizon, "Simulation horizon in seconds");
    step->add_option("--dt", o.dt, "Integration step in seconds");
    step->add_flag("--open-loop", o.open_loop, "Step response of L instead of the closed loop");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    const std::vector<std::string> args(argv, argv + argc);
    try {
        int rc = kOk;
        if (gen->parsed()) {
            rc = cmd_gen(o);
        } else if (design->parsed()) {
            rc = cmd_design(o);
        } else if (eval->parsed()) {
            rc = cmd_eval(o, args);
        } else if (report->parsed()) {
            rc = cmd_report(o);
        } else if (bode->parsed()) {
            rc = cmd_bode(o);
        } else if (step->parsed()) {
            rc = cmd_step(o);
        }
        write_manifest(o.out, args, o.seed);
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kTaskError;
    }
}
