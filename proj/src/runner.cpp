#include "qgrid/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace qgrid {

GridSpec load_run_grid(const RunConfig& cfg) {
    if (cfg.grid_file.empty()) return GridSpec::ieee14();
    if (!fs::exists(cfg.grid_file)) {
        throw std::runtime_error("grid file not found: " + cfg.grid_file);
    }
    return GridSpec::load(cfg.grid_file);
}

namespace {

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir + ": " + ec.message());
}

}  // namespace

int run_train(const RunConfig& cfg, std::ostream& diag) {
    GridSpec grid;
    try {
        grid = load_run_grid(cfg);
        ensure_out_dir(cfg.out_dir);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }

    LoadedCheckpoint resume;
    const PolicyNetwork* resume_net = nullptr;
    if (!cfg.resume_checkpoint.empty()) {
        try {
            resume = load_checkpoint(cfg.resume_checkpoint);
        } catch (const std::exception& e) {
            diag << "error: " << e.what() << "\n";
            return 2;
        }
        if (!resume.meta.grid_fingerprint.empty() &&
            resume.meta.grid_fingerprint != grid.fingerprint()) {
            diag << "error: checkpoint " << cfg.resume_checkpoint
                 << " was trained on a different grid (fingerprint "
                 << resume.meta.grid_fingerprint << " vs " << grid.fingerprint() << ")\n";
            return 2;
        }
        resume_net = &resume.net;
    }

    TrainResult result;
    try {
        result = train(grid, cfg.env, cfg.ppo, cfg.quantum, cfg.total_steps, cfg.seed, resume_net,
                       cfg.train_outages);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }

    CheckpointMeta meta;
    meta.input_dim = GridEnv::kObservationDim;
    meta.n_actions = action_space_size(grid.n_lines());
    meta.seed = cfg.seed;
    meta.env_steps = result.env_steps;
    meta.grid_fingerprint = grid.fingerprint();
    meta.ppo = cfg.ppo;
    meta.quantum = cfg.quantum;
    const std::string ckpt_path = (fs::path(cfg.out_dir) / "checkpoint.json").string();
    const std::string log_path = (fs::path(cfg.out_dir) / "training_log.csv").string();
    try {
        save_checkpoint(ckpt_path, result.net, meta);
        write_training_log_csv(log_path, result.log);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }

    if (result.aborted) {
        diag << "error: training aborted after " << result.env_steps
             << " steps (backend unavailable: " << result.abort_reason
             << "); resume from " << ckpt_path << "\n";
        return 3;
    }
    diag << "wrote " << ckpt_path << " and " << log_path << " (" << result.env_steps
         << " steps, " << result.episodes << " episodes, " << result.backend_calls
         << " backend calls)\n";
    return 0;
}

int run_screen(const RunConfig& cfg, std::ostream& diag) {
    GridSpec grid;
    try {
        grid = load_run_grid(cfg);
        ensure_out_dir(cfg.out_dir);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }

    if (cfg.k > 4 && !cfg.allow_large_k) {
        diag << "error: k=" << cfg.k << " enumerates " << binomial(grid.n_lines(), cfg.k)
             << " cases; pass --allow-large-k to confirm\n";
        return 2;
    }
    if (cfg.k > 4) {
        diag << "warning: k=" << cfg.k << " enumerates " << binomial(grid.n_lines(), cfg.k)
             << " cases\n";
    }

    ScreeningAgent agent;
    LoadedCheckpoint ck;
    if (cfg.baseline == "donothing") {
        agent.kind = AgentKind::DoNothing;
        agent.label = "donothing";
    } else if (cfg.baseline == "random") {
        agent.kind = AgentKind::Random;
        agent.label = "random";
    } else if (!cfg.baseline.empty()) {
        diag << "error: unknown baseline \"" << cfg.baseline << "\" (expected donothing|random)\n";
        return 2;
    } else {
        if (cfg.checkpoint.empty()) {
            diag << "error: screening needs --checkpoint or --baseline\n";
            return 2;
        }
        try {
            ck = load_checkpoint(cfg.checkpoint);
        } catch (const std::exception& e) {
            diag << "error: " << e.what() << "\n";
            return 2;
        }
        if (ck.net.n_actions() != action_space_size(grid.n_lines())) {
            diag << "error: checkpoint " << cfg.checkpoint << " has " << ck.net.n_actions()
                 << " actions but the grid needs " << action_space_size(grid.n_lines()) << "\n";
            return 2;
        }
        if (!ck.meta.grid_fingerprint.empty() &&
            ck.meta.grid_fingerprint != grid.fingerprint()) {
            diag << "error: checkpoint " << cfg.checkpoint
                 << " was trained on a different grid (fingerprint " << ck.meta.grid_fingerprint
                 << " vs " << grid.fingerprint() << ")\n";
            return 2;
        }
        agent.kind = AgentKind::Policy;
        agent.label = ck.net.use_quantum ? "hybrid" : "benchmark";
        agent.net = &ck.net;
        agent.quantum = ck.meta.quantum;
    }

    ScreeningReport report;
    try {
        report = run_screening(grid, cfg.env, cfg.k, agent, cfg.seed, cfg.parallel);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }

    const std::string suffix = "_k" + std::to_string(cfg.k);
    const std::string cases_path = (fs::path(cfg.out_dir) / ("cases" + suffix + ".csv")).string();
    const std::string summary_path =
        (fs::path(cfg.out_dir) / ("summary" + suffix + ".json")).string();
    const std::string hist_path =
        (fs::path(cfg.out_dir) / ("histogram" + suffix + ".csv")).string();
    try {
        write_cases_csv(cases_path, report);
        write_summary_json(summary_path, report);
        write_histogram_csv(hist_path, report);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }
    diag << "wrote " << cases_path << ", " << summary_path << ", " << hist_path << " (agent "
         << agent.label << ", mean survival " << report.mean_steps_survived << ")\n";
    return 0;
}

namespace {

struct DirSummaries {
    std::string dir;
    std::map<int, ScreeningReport> by_k;
};

}  // namespace

int run_report(const std::vector<std::string>& result_dirs, const std::string& out_dir,
               std::ostream& diag) {
    if (result_dirs.empty()) {
        diag << "error: report needs at least one result directory\n";
        return 2;
    }
    std::vector<DirSummaries> inputs;
    std::string fingerprint;
    std::string fingerprint_source;
    for (const auto& dir : result_dirs) {
        if (!fs::is_directory(dir)) {
            diag << "error: not a directory: " << dir << "\n";
            return 2;
        }
        DirSummaries found;
        found.dir = dir;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("summary_k", 0) != 0 || entry.path().extension() != ".json") continue;
            ScreeningReport summary;
            try {
                summary = read_summary_json(entry.path().string());
            } catch (const std::exception& e) {
                diag << "error: " << e.what() << "\n";
                return 2;
            }
            if (fingerprint.empty()) {
                fingerprint = summary.grid_fingerprint;
                fingerprint_source = entry.path().string();
            } else if (summary.grid_fingerprint != fingerprint) {
                diag << "error: grid fingerprint mismatch between " << fingerprint_source
                     << " and " << entry.path().string() << "\n";
                return 2;
            }
            found.by_k[summary.k] = std::move(summary);
        }
        if (found.by_k.empty()) {
            diag << "error: no screening summaries (summary_k*.json) found in " << dir << "\n";
            return 2;
        }
        inputs.push_back(std::move(found));
    }

    std::set<int> all_k;
    for (const auto& in : inputs) {
        for (const auto& [k, _] : in.by_k) all_k.insert(k);
    }

    try {
        ensure_out_dir(out_dir);
        auto open = [&](const std::string& name) {
            std::ofstream f(fs::path(out_dir) / name);
            if (!f) throw std::runtime_error("cannot write report file: " + name);
            return f;
        };

        auto label_of = [](const DirSummaries& in) {
            return in.by_k.begin()->second.agent_label.empty() ? in.dir
                                                               : in.by_k.begin()->second.agent_label;
        };

        auto write_metric = [&](const std::string& file, auto metric) {
            std::ofstream f = open(file);
            f << "agent";
            for (int k : all_k) f << ",k=" << k;
            f << "\n";
            for (const auto& in : inputs) {
                f << label_of(in);
                for (int k : all_k) {
                    f << ',';
                    const auto it = in.by_k.find(k);
                    if (it != in.by_k.end()) f << metric(it->second);
                }
                f << "\n";
            }
        };
        write_metric("survival_by_k.csv",
                     [](const ScreeningReport& s) { return s.mean_steps_survived; });
        write_metric("reward_by_k.csv",
                     [](const ScreeningReport& s) { return s.mean_cumulative_reward; });

        std::ofstream hist = open("cascade_histograms.csv");
        hist << "agent,k,cascade_count,relative_frequency\n";
        for (const auto& in : inputs) {
            for (const auto& [k, summary] : in.by_k) {
                for (const auto& [cascades, freq] : summary.cascade_histogram) {
                    hist << label_of(in) << ',' << k << ',' << cascades << ',' << freq << "\n";
                }
            }
        }

        std::ofstream table = open("comparison.txt");
        std::ostringstream text;
        text << "mean steps survived (100-step limit)\n";
        text << std::left << std::setw(16) << "agent";
        for (int k : all_k) text << std::right << std::setw(12) << ("k=" + std::to_string(k));
        text << "\n";
        for (const auto& in : inputs) {
            text << std::left << std::setw(16) << label_of(in);
            for (int k : all_k) {
                const auto it = in.by_k.find(k);
                std::ostringstream cell;
                if (it != in.by_k.end()) {
                    cell << std::fixed << std::setprecision(2) << it->second.mean_steps_survived;
                }
                text << std::right << std::setw(12) << cell.str();
            }
            text << "\n";
        }
        table << text.str();
        diag << text.str();
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return 2;
    }
    diag << "wrote report files to " << out_dir << "\n";
    return 0;
}

}  // namespace qgrid
