#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qgrid/gcn.hpp"
#include "qgrid/gridenv.hpp"
#include "qgrid/pqc.hpp"
#include "qgrid/rng.hpp"

namespace qgrid {

struct PPOConfig {
    double gamma = 0.99;
    double lambda = 0.98;
    double learning_rate = 1e-4;
    double entropy_coef = 1e-3;
    double value_coef = 0.4;
    double clip_eps = 0.2;
    int epochs_per_update = 4;
    int minibatch_size = 64;
    int steps_per_rollout = 512;
};

// Policy/value heads over the concatenated feature vector. With the quantum
// path enabled the input width is 2*kHidden2 (graph pooling next to the
// rescaled circuit feature); without it the heads read the pooled vector
// alone. angle_proj maps the pooled vector to 2*n_qubits rotation angles and
// is never trained: the measurement it feeds is not differentiable.
struct PolicyNetwork {
    bool use_quantum = true;
    int n_qubits = 4;
    GCNWeights gcn;
    Eigen::MatrixXd angle_proj;  // kHidden2 x (2*n_qubits)
    Eigen::MatrixXd policy_w;    // feature_width x n_actions
    Eigen::VectorXd policy_b;    // n_actions
    Eigen::VectorXd value_w;     // feature_width
    double value_b = 0.0;

    int feature_width() const { return use_quantum ? 2 * kHidden2 : kHidden2; }
    int n_actions() const { return static_cast<int>(policy_w.cols()); }
};

PolicyNetwork init_policy(int input_dim, int n_actions, bool use_quantum, int n_qubits, Rng& rng);

struct PolicyEvaluation {
    GCNForward gcn;
    Eigen::VectorXd features;  // pooled (+ quantum feature when enabled)
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
    double value = 0.0;
};

// Softmax policy + scalar value. quantum_vec must be a kHidden2-long vector
// when the network uses the quantum path, and null otherwise.
PolicyEvaluation policy_forward(const PolicyNetwork& net, const ObservationGraph& obs,
                                const Eigen::VectorXd* quantum_vec);

int sample_action(const Eigen::VectorXd& probs, Rng& rng);
int argmax_action(const Eigen::VectorXd& probs);

struct RolloutStep {
    ObservationGraph obs;
    Eigen::VectorXd quantum_vec;  // frozen at collection; empty when unused
    int action = 0;
    double log_prob = 0.0;  // under the collection-time policy
    double reward = 0.0;
    double value = 0.0;
    bool done = false;
};

struct RolloutBatch {
    std::vector<RolloutStep> steps;
    double bootstrap_value = 0.0;  // V of the state after the final step; 0 if done
    std::vector<double> advantages;
    std::vector<double> returns;
};

// delta_t = r_t + gamma*V_{t+1}*(1-done_t) - V_t, advantage recursion
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}, returns = A + V.
// Episode boundaries (done flags) stop the recursion.
void compute_gae(RolloutBatch& batch, const PPOConfig& cfg);

// min(ratio*adv, clamp(ratio, 1-eps, 1+eps)*adv)
double clipped_objective(double ratio, double advantage, double eps);

// Zero-mean unit-variance advantages in place; returns are left untouched.
void normalize_advantages(RolloutBatch& batch);

struct LossBreakdown {
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
    double total = 0.0;
};

struct PPOGradients {
    GCNGradients gcn;
    Eigen::MatrixXd policy_w;
    Eigen::VectorXd policy_b;
    Eigen::VectorXd value_w;
    double value_b = 0.0;
};

// Clipped-surrogate loss over the minibatch rows given by indices:
// -E[min(r*A, clip(r)*A)] + value_coef*MSE(V, returns) - entropy_coef*H.
// Gradients (optional) flow through heads and GCN; the stored quantum
// feature is a constant input.
LossBreakdown ppo_loss(const PolicyNetwork& net, const RolloutBatch& batch,
                       const std::vector<int>& indices, const PPOConfig& cfg,
                       PPOGradients* grads);

// Trainable parameters as one flat vector (angle_proj excluded).
Eigen::VectorXd flatten_params(const PolicyNetwork& net);
void unflatten_params(PolicyNetwork& net, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_grads(const PolicyNetwork& net, const PPOGradients& grads);

struct AdamOptimizer {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long t = 0;

    void init(Eigen::Index n);
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

enum class BackendMode { Exact, Sampled };
BackendMode parse_backend_mode(const std::string& name);
std::string backend_mode_name(BackendMode mode);

struct QuantumConfig {
    int n_qubits = 4;
    Procedure procedure = Procedure::Hybrid;
    std::size_t refresh_interval = 50;  // refresh period for the hybrid procedure
    BackendMode backend = BackendMode::Exact;
    int shots = 1024;
    RescaleRange range;
};

struct UpdateLogRow {
    int update = 0;
    long env_steps = 0;
    double mean_ep_reward = 0.0;
    double mean_ep_length = 0.0;
    long backend_calls = 0;
    LossBreakdown loss;
    double wall_ms = 0.0;
};

struct TrainResult {
    PolicyNetwork net;
    std::vector<UpdateLogRow> log;
    long env_steps = 0;
    long backend_calls = 0;
    int episodes = 0;
    bool aborted = false;  // backend lost with no cached value to fall back on
    std::string abort_reason;
};

// Rollout/update loop: per-step features come from the quantum cache under
// the configured refresh procedure, episodes restart on per-episode derived
// seeds, and a non-finite minibatch loss rolls the update back to its
// pre-update weights. Deterministic given (seed, exact backend).
// initial_outages > 0 starts each training episode with that many uniformly
// drawn lines already out of service, matching the screening deployment.
TrainResult train(const GridSpec& grid, const EnvConfig& env_cfg, const PPOConfig& ppo_cfg,
                  const QuantumConfig& q_cfg, long total_steps, std::uint64_t seed,
                  const PolicyNetwork* resume_from = nullptr, int initial_outages = 0);

void write_training_log_csv(const std::string& path, const std::vector<UpdateLogRow>& rows);

struct CheckpointMeta {
    int input_dim = 0;
    int n_actions = 0;
    std::uint64_t seed = 0;
    long env_steps = 0;
    std::string grid_fingerprint;
    PPOConfig ppo;
    QuantumConfig quantum;
};

struct LoadedCheckpoint {
    PolicyNetwork net;
    CheckpointMeta meta;
};

// Versioned JSON dump of every weight matrix plus the run configuration.
void save_checkpoint(const std::string& path, const PolicyNetwork& net, const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace qgrid
