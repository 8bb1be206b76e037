#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "qgrid/gridenv.hpp"
#include "qgrid/ppo.hpp"
#include "qgrid/screening.hpp"

namespace qgrid {

// Everything a run needs, resolved from defaults, config file, and flags.
struct RunConfig {
    std::string grid_file;  // empty: the built-in 14-bus network
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int parallel = 1;

    EnvConfig env;
    PPOConfig ppo;
    QuantumConfig quantum;
    long total_steps = 50000;
    int train_outages = 0;  // random initial outages per training episode
    std::string resume_checkpoint;

    int k = 2;
    bool allow_large_k = false;
    std::string checkpoint;
    std::string baseline;  // donothing | random | empty (use checkpoint)
};

GridSpec load_run_grid(const RunConfig& cfg);

// Exit-code conventions shared by the commands: 0 on success with all
// artifacts written, 2 on a configuration or input failure (diagnostic names
// the offending key or path), 3 when training aborts on a lost backend (the
// resumable checkpoint is still written).
int run_train(const RunConfig& cfg, std::ostream& diag);
int run_screen(const RunConfig& cfg, std::ostream& diag);
int run_report(const std::vector<std::string>& result_dirs, const std::string& out_dir,
               std::ostream& diag);

}  // namespace qgrid
