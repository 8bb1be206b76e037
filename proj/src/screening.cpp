#include "qgrid/screening.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace qgrid {

long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long result = 1;
    for (int i = 0; i < k; ++i) {
        result = result * (n - i) / (i + 1);  // exact: product of i+1 consecutive ints
    }
    return result;
}

std::vector<ContingencyCase> enumerate_contingencies(int n_lines, int k) {
    if (k < 1 || k > n_lines) {
        throw std::invalid_argument("enumerate_contingencies: k must be in [1, n_lines]");
    }
    std::vector<ContingencyCase> cases;
    cases.reserve(static_cast<std::size_t>(binomial(n_lines, k)));
    std::vector<int> subset(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
    long index = 0;
    while (true) {
        cases.push_back({subset, index++});
        // Advance to the next subset in lexicographic order.
        int pos = k - 1;
        while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n_lines - k + pos) --pos;
        if (pos < 0) break;
        ++subset[static_cast<std::size_t>(pos)];
        for (int j = pos + 1; j < k; ++j) {
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return cases;
}

ContingencyResult run_case(const GridSpec& grid, const EnvConfig& env_cfg,
                           const ContingencyCase& c, const ScreeningAgent& agent,
                           std::uint64_t case_seed) {
    if (agent.kind == AgentKind::Policy && agent.net == nullptr) {
        throw std::invalid_argument("run_case: policy agent without a network");
    }
    GridEnv env(grid, env_cfg);
    env.reset(case_seed, c.removed_lines);

    Rng action_rng(derive_seed(case_seed, 11));
    const bool use_quantum = agent.kind == AgentKind::Policy && agent.net->use_quantum;
    std::unique_ptr<QuantumBackend> backend;
    if (use_quantum) {
        if (agent.quantum.backend == BackendMode::Exact) {
            backend = std::make_unique<ExactBackend>();
        } else {
            backend = std::make_unique<SampledBackend>(
                static_cast<std::uint64_t>(agent.quantum.shots), derive_seed(case_seed, 12));
        }
    }
    QuantumCache cache;
    if (use_quantum) {
        cache.refresh_interval =
            refresh_interval_for(agent.quantum.procedure, agent.quantum.refresh_interval);
    }

    while (!env.done()) {
        int action = 0;
        switch (agent.kind) {
            case AgentKind::DoNothing:
                action = 0;
                break;
            case AgentKind::Random:
                action = static_cast<int>(
                    action_rng.uniform_int(static_cast<std::uint64_t>(action_space_size(env.n_lines()))));
                break;
            case AgentKind::Policy: {
                const ObservationGraph obs = env.observe();
                Eigen::VectorXd qvec;
                if (use_quantum) {
                    const GCNForward gfwd = gcn_forward(obs, agent.net->gcn);
                    const Eigen::VectorXd angles =
                        project_to_angles(gfwd.pooled, agent.net->angle_proj);
                    PQCParameters params;
                    params.n_qubits = agent.net->n_qubits;
                    params.theta.assign(angles.data(), angles.data() + angles.size());
                    const CachedFeature cf =
                        cached_feature(cache, params, static_cast<std::size_t>(env.step_index()),
                                       *backend, agent.quantum.range, kHidden2);
                    qvec = Eigen::Map<const Eigen::VectorXd>(
                        cf.feature.vector.data(),
                        static_cast<Eigen::Index>(cf.feature.vector.size()));
                }
                const PolicyEvaluation eval =
                    policy_forward(*agent.net, obs, use_quantum ? &qvec : nullptr);
                action = argmax_action(eval.probs);
                break;
            }
        }
        env.step_index(action);
    }

    ContingencyResult result;
    result.case_index = c.case_index;
    result.removed_lines = c.removed_lines;
    result.steps_survived = env.steps_survived();
    result.cumulative_reward = env.cumulative_reward();
    result.cascade_count = env.cascade_count();
    result.blackout = env.blackout();
    return result;
}

ScreeningReport aggregate(std::vector<ContingencyResult> results) {
    if (results.empty()) throw std::invalid_argument("aggregate: no results");
    ScreeningReport report;
    double steps = 0.0;
    double reward = 0.0;
    double blackouts = 0.0;
    std::map<int, long> counts;
    for (const auto& r : results) {
        steps += r.steps_survived;
        reward += r.cumulative_reward;
        blackouts += r.blackout ? 1.0 : 0.0;
        ++counts[r.cascade_count];
    }
    const double n = static_cast<double>(results.size());
    report.mean_steps_survived = steps / n;
    report.mean_cumulative_reward = reward / n;
    report.blackout_fraction = blackouts / n;
    for (const auto& [cascades, count] : counts) {
        report.cascade_histogram[cascades] = static_cast<double>(count) / n;
    }
    report.results = std::move(results);
    return report;
}

ScreeningReport run_screening(const GridSpec& grid, const EnvConfig& env_cfg, int k,
                              const ScreeningAgent& agent, std::uint64_t seed, int n_workers) {
    const std::vector<ContingencyCase> cases = enumerate_contingencies(grid.n_lines(), k);
    std::vector<ContingencyResult> results(cases.size());

    if (n_workers <= 1) {
        for (const auto& c : cases) {
            results[static_cast<std::size_t>(c.case_index)] =
                run_case(grid, env_cfg, c, agent,
                         derive_seed(seed, static_cast<std::uint64_t>(c.case_index)));
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cases.size()) return;
                try {
                    results[i] = run_case(grid, env_cfg, cases[i], agent,
                                          derive_seed(seed, static_cast<std::uint64_t>(
                                                                cases[i].case_index)));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const int spawn = std::min<int>(n_workers, static_cast<int>(cases.size()));
        pool.reserve(static_cast<std::size_t>(spawn));
        for (int w = 0; w < spawn; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    ScreeningReport report = aggregate(std::move(results));
    report.k = k;
    report.agent_label = agent.label;
    report.grid_fingerprint = grid.fingerprint();
    return report;
}

namespace {

std::string join_ids(const std::vector<int>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) s += '|';
        s += std::to_string(ids[i]);
    }
    return s;
}

}  // namespace

void write_cases_csv(const std::string& path, const ScreeningReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write case file: " + path);
    out << "case_index,removed_lines,steps_survived,cumulative_reward,cascade_count,blackout\n";
    for (const auto& r : report.results) {
        out << r.case_index << ',' << join_ids(r.removed_lines) << ',' << r.steps_survived << ','
            << r.cumulative_reward << ',' << r.cascade_count << ',' << (r.blackout ? 1 : 0)
            << '\n';
    }
}

void write_histogram_csv(const std::string& path, const ScreeningReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write histogram file: " + path);
    out << "cascade_count,relative_frequency\n";
    for (const auto& [cascades, freq] : report.cascade_histogram) {
        out << cascades << ',' << freq << '\n';
    }
}

void write_summary_json(const std::string& path, const ScreeningReport& report) {
    nlohmann::json j;
    j["k"] = report.k;
    j["agent"] = report.agent_label;
    j["grid_fingerprint"] = report.grid_fingerprint;
    j["n_cases"] = report.results.size();
    j["mean_steps_survived"] = report.mean_steps_survived;
    j["mean_cumulative_reward"] = report.mean_cumulative_reward;
    j["blackout_fraction"] = report.blackout_fraction;
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [cascades, freq] : report.cascade_histogram) {
        hist[std::to_string(cascades)] = freq;
    }
    j["cascade_histogram"] = std::move(hist);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary file: " + path);
    out << j.dump(2) << "\n";
}

ScreeningReport read_summary_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open summary file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("summary file " + path + " is malformed: " + e.what());
    }
    ScreeningReport report;
    report.k = j.value("k", 0);
    report.agent_label = j.value("agent", std::string{});
    report.grid_fingerprint = j.value("grid_fingerprint", std::string{});
    report.mean_steps_survived = j.value("mean_steps_survived", 0.0);
    report.mean_cumulative_reward = j.value("mean_cumulative_reward", 0.0);
    report.blackout_fraction = j.value("blackout_fraction", 0.0);
    if (j.contains("cascade_histogram")) {
        for (const auto& [key, value] : j["cascade_histogram"].items()) {
            report.cascade_histogram[std::stoi(key)] = value.get<double>();
        }
    }
    return report;
}

}  // namespace qgrid
