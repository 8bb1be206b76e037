#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qgrid/runner.hpp"

namespace {

// Environment/opponent knobs are shared by train and screen.
void add_env_options(CLI::App* cmd, qgrid::RunConfig& cfg) {
    cmd->add_option("--load-scale", cfg.env.load_scale, "global load multiplier")
        ->capture_default_str();
    cmd->add_option("--load-sigma", cfg.env.load_sigma, "per-step lognormal load noise sigma")
        ->capture_default_str();
    cmd->add_option("--overload-window", cfg.env.overload_window,
                    "consecutive overloaded steps before a line trips")
        ->capture_default_str();
    cmd->add_option("--cooldown", cfg.env.reconnect_cooldown,
                    "steps a disconnected line stays locked out")
        ->capture_default_str();
    cmd->add_option("--max-steps", cfg.env.max_steps, "episode step limit")
        ->capture_default_str();
    cmd->add_option("--blackout-fraction", cfg.env.blackout_unserved_fraction,
                    "unserved-load fraction that ends the episode")
        ->capture_default_str();
    cmd->add_option("--opp-budget", cfg.env.opponent.budget, "opponent line budget per episode")
        ->capture_default_str();
    cmd->add_option("--opp-interval", cfg.env.opponent.interval, "steps between attacks")
        ->capture_default_str();
    cmd->add_option("--opp-per-attack", cfg.env.opponent.per_attack, "max lines per attack")
        ->capture_default_str();
}

void write_resolved_config(const CLI::App& app, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) return;  // the command itself reports unwritable directories
    std::ofstream out(std::filesystem::path(out_dir) / "resolved.cfg");
    if (out) out << app.config_to_str(true, true);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid quantum-classical RL toolkit for grid security screening"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config file; flags override file values");

    qgrid::RunConfig cfg;
    std::string procedure = "hybrid";
    std::string backend = "exact";
    std::vector<std::string> report_dirs;

    app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    app.add_option("--parallel", cfg.parallel, "worker threads for screening")
        ->capture_default_str();

    CLI::App* train = app.add_subcommand("train", "train a policy, writing checkpoint + log");
    train->add_option("--grid", cfg.grid_file, "grid file (default: built-in 14-bus)");
    train->add_option("--steps", cfg.total_steps, "total environment steps")
        ->capture_default_str();
    train->add_option("--procedure", procedure, "quantum procedure: iterative|cached|hybrid|none")
        ->capture_default_str();
    train->add_option("--refresh", cfg.quantum.refresh_interval,
                      "hybrid refresh interval S (steps between backend calls)")
        ->capture_default_str();
    train->add_option("--backend", backend, "quantum backend: exact|sampled")
        ->capture_default_str();
    train->add_option("--shots", cfg.quantum.shots, "shots per sampled evaluation")
        ->capture_default_str();
    train->add_option("--n-qubits", cfg.quantum.n_qubits, "circuit width")
        ->capture_default_str();
    train->add_option("--rescale-lo", cfg.quantum.range.lo, "feature rescale lower bound")
        ->capture_default_str();
    train->add_option("--rescale-hi", cfg.quantum.range.hi, "feature rescale upper bound")
        ->capture_default_str();
    train->add_option("--lr", cfg.ppo.learning_rate, "learning rate")->capture_default_str();
    train->add_option("--gamma", cfg.ppo.gamma, "discount factor")->capture_default_str();
    train->add_option("--lambda", cfg.ppo.lambda, "advantage decay")->capture_default_str();
    train->add_option("--entropy-coef", cfg.ppo.entropy_coef, "entropy bonus coefficient")
        ->capture_default_str();
    train->add_option("--value-coef", cfg.ppo.value_coef, "value-loss coefficient")
        ->capture_default_str();
    train->add_option("--clip-eps", cfg.ppo.clip_eps, "surrogate clip width")
        ->capture_default_str();
    train->add_option("--epochs", cfg.ppo.epochs_per_update, "optimization epochs per update")
        ->capture_default_str();
    train->add_option("--minibatch", cfg.ppo.minibatch_size, "minibatch size")
        ->capture_default_str();
    train->add_option("--rollout", cfg.ppo.steps_per_rollout, "steps collected per update")
        ->capture_default_str();
    train->add_option("--train-outages", cfg.train_outages,
                      "random initial line outages per training episode")
        ->capture_default_str();
    train->add_option("--resume", cfg.resume_checkpoint, "checkpoint to resume from");
    add_env_options(train, cfg);

    CLI::App* screen = app.add_subcommand("screen", "run N-k contingency screening");
    screen->add_option("--grid", cfg.grid_file, "grid file (default: built-in 14-bus)");
    screen->add_option("--checkpoint", cfg.checkpoint, "trained policy checkpoint");
    screen->add_option("--baseline", cfg.baseline, "baseline agent: donothing|random");
    screen->add_option("--k", cfg.k, "number of simultaneous initial line outages")
        ->capture_default_str();
    screen->add_flag("--allow-large-k", cfg.allow_large_k, "confirm enumerating k > 4");
    add_env_options(screen, cfg);

    CLI::App* report = app.add_subcommand("report", "compare screening result directories");
    report->add_option("dirs", report_dirs, "screening output directories")->expected(-1);

    int rc = 0;
    train->callback([&]() {
        try {
            cfg.quantum.procedure = qgrid::parse_procedure(procedure);
            cfg.quantum.backend = qgrid::parse_backend_mode(backend);
        } catch (const std::exception& e) {
            std::cerr << "error: --procedure/--backend: " << e.what() << "\n";
            rc = 2;
            return;
        }
        write_resolved_config(app, cfg.out_dir);
        rc = qgrid::run_train(cfg, std::cerr);
    });
    screen->callback([&]() {
        write_resolved_config(app, cfg.out_dir);
        rc = qgrid::run_screen(cfg, std::cerr);
    });
    report->callback([&]() {
        write_resolved_config(app, cfg.out_dir);
        rc = qgrid::run_report(report_dirs, cfg.out_dir, std::cout);
    });

    CLI11_PARSE(app, argc, argv);
    return rc;
}
