#include "qgrid/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qgrid {

PolicyNetwork init_policy(int input_dim, int n_actions, bool use_quantum, int n_qubits, Rng& rng) {
    if (n_actions < 1) throw std::invalid_argument("init_policy: n_actions must be >= 1");
    PolicyNetwork net;
    net.use_quantum = use_quantum;
    net.n_qubits = n_qubits;
    net.gcn = init_gcn_weights(input_dim, rng);
    if (use_quantum) {
        net.angle_proj = glorot_uniform(kHidden2, 2 * n_qubits, rng);
    }
    const int width = net.feature_width();
    net.policy_w = glorot_uniform(width, n_actions, rng);
    net.policy_b = Eigen::VectorXd::Zero(n_actions);
    net.value_w = glorot_uniform(width, 1, rng).col(0);
    net.value_b = 0.0;
    return net;
}

namespace {

PolicyEvaluation heads_forward(const PolicyNetwork& net, GCNForward gcn,
                               const Eigen::VectorXd* quantum_vec) {
    PolicyEvaluation eval;
    eval.gcn = std::move(gcn);
    const int width = net.feature_width();
    eval.features.resize(width);
    eval.features.head(kHidden2) = eval.gcn.pooled;
    if (net.use_quantum) {
        if (quantum_vec == nullptr || quantum_vec->size() != kHidden2) {
            throw std::invalid_argument("policy_forward: quantum feature must have length " +
                                        std::to_string(kHidden2));
        }
        eval.features.tail(kHidden2) = *quantum_vec;
    } else if (quantum_vec != nullptr && quantum_vec->size() != 0) {
        throw std::invalid_argument("policy_forward: quantum feature passed to a non-quantum head");
    }
    if (net.policy_w.rows() != width || net.value_w.size() != width) {
        throw std::invalid_argument("policy_forward: head width mismatch");
    }
    eval.logits = net.policy_w.transpose() * eval.features + net.policy_b;
    const double top = eval.logits.maxCoeff();
    eval.probs = (eval.logits.array() - top).exp();
    eval.probs /= eval.probs.sum();
    eval.value = net.value_w.dot(eval.features) + net.value_b;
    return eval;
}

}  // namespace

PolicyEvaluation policy_forward(const PolicyNetwork& net, const ObservationGraph& obs,
                                const Eigen::VectorXd* quantum_vec) {
    return heads_forward(net, gcn_forward(obs, net.gcn), quantum_vec);
}

int sample_action(const Eigen::VectorXd& probs, Rng& rng) {
    if (probs.size() == 0) throw std::invalid_argument("sample_action: empty distribution");
    const double u = rng.uniform();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        acc += probs(k);
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size() - 1);
}

int argmax_action(const Eigen::VectorXd& probs) {
    if (probs.size() == 0) throw std::invalid_argument("argmax_action: empty distribution");
    int best = 0;
    for (Eigen::Index k = 1; k < probs.size(); ++k) {
        if (probs(k) > probs(best)) best = static_cast<int>(k);
    }
    return best;
}

void compute_gae(RolloutBatch& batch, const PPOConfig& cfg) {
    const std::size_t n = batch.steps.size();
    if (n == 0) throw std::invalid_argument("compute_gae: empty batch");
    batch.advantages.assign(n, 0.0);
    batch.returns.assign(n, 0.0);
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const RolloutStep& s = batch.steps[t];
        const double nonterminal = s.done ? 0.0 : 1.0;
        const double next_value =
            (t + 1 < n) ? batch.steps[t + 1].value : batch.bootstrap_value;
        const double delta = s.reward + cfg.gamma * next_value * nonterminal - s.value;
        running = delta + cfg.gamma * cfg.lambda * nonterminal * running;
        batch.advantages[t] = running;
        batch.returns[t] = running + s.value;
    }
}

double clipped_objective(double ratio, double advantage, double eps) {
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

void normalize_advantages(RolloutBatch& batch) {
    const std::size_t n = batch.advantages.size();
    if (n == 0) throw std::invalid_argument("normalize_advantages: no advantages computed");
    double mean = 0.0;
    for (double a : batch.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double std_dev = std::sqrt(var) + 1e-8;
    for (double& a : batch.advantages) a = (a - mean) / std_dev;
}

namespace {

PPOGradients zero_ppo_gradients(const PolicyNetwork& net) {
    PPOGradients g;
    g.gcn = zero_gcn_gradients(net.gcn);
    g.policy_w = Eigen::MatrixXd::Zero(net.policy_w.rows(), net.policy_w.cols());
    g.policy_b = Eigen::VectorXd::Zero(net.policy_b.size());
    g.value_w = Eigen::VectorXd::Zero(net.value_w.size());
    g.value_b = 0.0;
    return g;
}

}  // namespace

LossBreakdown ppo_loss(const PolicyNetwork& net, const RolloutBatch& batch,
                       const std::vector<int>& indices, const PPOConfig& cfg,
                       PPOGradients* grads) {
    if (indices.empty()) throw std::invalid_argument("ppo_loss: empty minibatch");
    if (batch.advantages.size() != batch.steps.size() ||
        batch.returns.size() != batch.steps.size()) {
        throw std::invalid_argument("ppo_loss: advantages/returns not computed");
    }
    const double m = static_cast<double>(indices.size());
    if (grads) *grads = zero_ppo_gradients(net);

    double policy_sum = 0.0;
    double value_sum = 0.0;
    double entropy_sum = 0.0;
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= batch.steps.size()) {
            throw std::invalid_argument("ppo_loss: minibatch index out of range");
        }
        const RolloutStep& s = batch.steps[static_cast<std::size_t>(idx)];
        const Eigen::VectorXd* qvec = net.use_quantum ? &s.quantum_vec : nullptr;
        const PolicyEvaluation eval = policy_forward(net, s.obs, qvec);
        const auto n_act = eval.probs.size();
        if (s.action < 0 || s.action >= n_act) {
            throw std::invalid_argument("ppo_loss: recorded action out of range");
        }

        const double p_a = eval.probs(s.action);
        const double log_p = std::log(p_a);
        const double ratio = std::exp(log_p - s.log_prob);
        const double adv = batch.advantages[static_cast<std::size_t>(idx)];
        const double surr1 = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double surr2 = clipped * adv;
        policy_sum += std::min(surr1, surr2);

        const double v_err = eval.value - batch.returns[static_cast<std::size_t>(idx)];
        value_sum += v_err * v_err;

        double entropy = 0.0;
        for (Eigen::Index k = 0; k < n_act; ++k) {
            const double p = eval.probs(k);
            if (p > 0.0) entropy -= p * std::log(p);
        }
        entropy_sum += entropy;

        if (!grads) continue;
        Eigen::VectorXd g_logits = Eigen::VectorXd::Zero(n_act);
        if (surr1 <= surr2) {
            // Unclipped branch active: d(-surr1)/dlogits = -adv*ratio*(e_a - p).
            const double coeff = -adv * ratio / m;
            g_logits = -coeff * eval.probs;
            g_logits(s.action) += coeff;
        }
        for (Eigen::Index k = 0; k < n_act; ++k) {
            const double p = eval.probs(k);
            if (p > 0.0) g_logits(k) += cfg.entropy_coef / m * p * (std::log(p) + entropy);
        }
        const double g_value = 2.0 * cfg.value_coef * v_err / m;

        grads->policy_w += eval.features * g_logits.transpose();
        grads->policy_b += g_logits;
        grads->value_w += g_value * eval.features;
        grads->value_b += g_value;

        const Eigen::VectorXd d_features = net.policy_w * g_logits + g_value * net.value_w;
        const Eigen::VectorXd d_pooled = d_features.head(kHidden2);
        gcn_backward(s.obs, net.gcn, eval.gcn, d_pooled, grads->gcn);
    }

    LossBreakdown loss;
    loss.policy = -policy_sum / m;
    loss.value = value_sum / m;
    loss.entropy = entropy_sum / m;
    loss.total = loss.policy + cfg.value_coef * loss.value - cfg.entropy_coef * loss.entropy;
    return loss;
}

namespace {

template <typename Fn>
void for_each_tensor(const PolicyNetwork& net, Fn&& fn) {
    fn(net.gcn.input_proj);
    fn(net.gcn.input_bias);
    fn(net.gcn.w1);
    fn(net.gcn.b1);
    fn(net.gcn.w2);
    fn(net.gcn.b2);
    fn(net.policy_w);
    fn(net.policy_b);
    fn(net.value_w);
}

Eigen::Index trainable_size(const PolicyNetwork& net) {
    Eigen::Index n = 0;
    for_each_tensor(net, [&](const auto& t) { n += t.size(); });
    return n + 1;  // value_b
}

}  // namespace

Eigen::VectorXd flatten_params(const PolicyNetwork& net) {
    Eigen::VectorXd flat(trainable_size(net));
    Eigen::Index at = 0;
    for_each_tensor(net, [&](const auto& t) {
        flat.segment(at, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
        at += t.size();
    });
    flat(at) = net.value_b;
    return flat;
}

void unflatten_params(PolicyNetwork& net, const Eigen::VectorXd& flat) {
    if (flat.size() != trainable_size(net)) {
        throw std::invalid_argument("unflatten_params: parameter vector size mismatch");
    }
    Eigen::Index at = 0;
    auto take = [&](auto& t) {
        Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = flat.segment(at, t.size());
        at += t.size();
    };
    take(net.gcn.input_proj);
    take(net.gcn.input_bias);
    take(net.gcn.w1);
    take(net.gcn.b1);
    take(net.gcn.w2);
    take(net.gcn.b2);
    take(net.policy_w);
    take(net.policy_b);
    take(net.value_w);
    net.value_b = flat(at);
}

Eigen::VectorXd flatten_grads(const PolicyNetwork& net, const PPOGradients& grads) {
    Eigen::VectorXd flat(trainable_size(net));
    Eigen::Index at = 0;
    auto put = [&](const auto& t) {
        flat.segment(at, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
        at += t.size();
    };
    put(grads.gcn.input_proj);
    put(grads.gcn.input_bias);
    put(grads.gcn.w1);
    put(grads.gcn.b1);
    put(grads.gcn.w2);
    put(grads.gcn.b2);
    put(grads.policy_w);
    put(grads.policy_b);
    put(grads.value_w);
    flat(at) = grads.value_b;
    return flat;
}

void AdamOptimizer::init(Eigen::Index n) {
    m = Eigen::VectorXd::Zero(n);
    v = Eigen::VectorXd::Zero(n);
    t = 0;
}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (m.size() != params.size() || grad.size() != params.size()) {
        throw std::invalid_argument("adam: parameter/moment size mismatch");
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    params.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

BackendMode parse_backend_mode(const std::string& name) {
    if (name == "exact") return BackendMode::Exact;
    if (name == "sampled") return BackendMode::Sampled;
    throw std::invalid_argument("unknown backend mode: " + name + " (expected exact|sampled)");
}

std::string backend_mode_name(BackendMode mode) {
    return mode == BackendMode::Exact ? "exact" : "sampled";
}

namespace {

struct EpisodeStats {
    std::vector<double> rewards;
    std::vector<double> lengths;

    double mean_reward(double fallback) const {
        if (rewards.empty()) return fallback;
        return std::accumulate(rewards.begin(), rewards.end(), 0.0) /
               static_cast<double>(rewards.size());
    }
    double mean_length(double fallback) const {
        if (lengths.empty()) return fallback;
        return std::accumulate(lengths.begin(), lengths.end(), 0.0) /
               static_cast<double>(lengths.size());
    }
};

}  // namespace

TrainResult train(const GridSpec& grid, const EnvConfig& env_cfg, const PPOConfig& ppo_cfg,
                  const QuantumConfig& q_cfg, long total_steps, std::uint64_t seed,
                  const PolicyNetwork* resume_from, int initial_outages) {
    if (initial_outages < 0 || initial_outages > grid.n_lines()) {
        throw std::invalid_argument("train: initial_outages out of range");
    }
    if (ppo_cfg.steps_per_rollout < 1 || ppo_cfg.minibatch_size < 1 ||
        ppo_cfg.epochs_per_update < 1) {
        throw std::invalid_argument("train: rollout/minibatch/epoch sizes must be >= 1");
    }
    if (ppo_cfg.gamma <= 0.0 || ppo_cfg.gamma > 1.0 || ppo_cfg.lambda <= 0.0 ||
        ppo_cfg.lambda > 1.0 || ppo_cfg.clip_eps <= 0.0) {
        throw std::invalid_argument("train: gamma/lambda must be in (0,1], clip_eps > 0");
    }
    if (total_steps < ppo_cfg.steps_per_rollout) {
        throw std::invalid_argument("train: total_steps must be >= steps_per_rollout");
    }

    GridEnv env(grid, env_cfg);
    const bool use_quantum = q_cfg.procedure != Procedure::None;
    std::unique_ptr<QuantumBackend> backend;
    if (use_quantum) {
        if (q_cfg.backend == BackendMode::Exact) {
            backend = std::make_unique<ExactBackend>();
        } else {
            backend = std::make_unique<SampledBackend>(static_cast<std::uint64_t>(q_cfg.shots),
                                                       derive_seed(seed, 3));
        }
    }

    TrainResult out;
    Rng init_rng(derive_seed(seed, 1));
    if (resume_from) {
        out.net = *resume_from;
        if (out.net.n_actions() != action_space_size(grid.n_lines())) {
            throw std::invalid_argument("train: checkpoint action count does not match the grid");
        }
        if (out.net.gcn.input_proj.rows() != GridEnv::kObservationDim) {
            throw std::invalid_argument("train: checkpoint observation width mismatch");
        }
        if (out.net.use_quantum != use_quantum) {
            throw std::invalid_argument("train: checkpoint quantum mode does not match config");
        }
    } else {
        out.net = init_policy(GridEnv::kObservationDim, action_space_size(grid.n_lines()),
                              use_quantum, q_cfg.n_qubits, init_rng);
    }
    PolicyNetwork& net = out.net;

    Rng sample_rng(derive_seed(seed, 2));
    AdamOptimizer adam;
    adam.lr = ppo_cfg.learning_rate;
    adam.init(flatten_params(net).size());

    QuantumCache cache;
    if (use_quantum) {
        cache.refresh_interval = refresh_interval_for(q_cfg.procedure, q_cfg.refresh_interval);
    }

    long global_step = 0;
    int episode_counter = 0;
    double ep_reward = 0.0;
    int ep_length = 0;

    auto reset_episode = [&]() {
        const std::uint64_t ep_seed =
            derive_seed(seed, 1000 + static_cast<std::uint64_t>(episode_counter));
        std::vector<int> outages;
        if (initial_outages > 0) {
            // Partial Fisher-Yates draw of an initial_outages-subset.
            Rng outage_rng(derive_seed(ep_seed, 7));
            std::vector<int> ids(static_cast<std::size_t>(grid.n_lines()));
            std::iota(ids.begin(), ids.end(), 0);
            for (int i = 0; i < initial_outages; ++i) {
                const std::size_t j =
                    static_cast<std::size_t>(i) +
                    outage_rng.uniform_int(ids.size() - static_cast<std::size_t>(i));
                std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
            }
            outages.assign(ids.begin(), ids.begin() + initial_outages);
        }
        env.reset(ep_seed, outages);
    };

    reset_episode();
    int reset_guard = 0;
    while (env.done()) {
        // An initial draw can be immediately infeasible; move to the next seed.
        if (++reset_guard > 1000) throw std::runtime_error("train: environment resets dead");
        ++episode_counter;
        reset_episode();
    }

    int update_idx = 0;
    while (global_step < total_steps) {
        const auto t_start = std::chrono::steady_clock::now();
        const long rollout_len =
            std::min<long>(ppo_cfg.steps_per_rollout, total_steps - global_step);
        RolloutBatch batch;
        batch.steps.reserve(static_cast<std::size_t>(rollout_len));
        EpisodeStats stats;

        for (long i = 0; i < rollout_len; ++i) {
            RolloutStep rec;
            rec.obs = env.observe();
            GCNForward gfwd = gcn_forward(rec.obs, net.gcn);
            if (use_quantum) {
                const Eigen::VectorXd angles = project_to_angles(gfwd.pooled, net.angle_proj);
                PQCParameters params;
                params.n_qubits = q_cfg.n_qubits;
                params.theta.assign(angles.data(), angles.data() + angles.size());
                CachedFeature cf;
                try {
                    cf = cached_feature(cache, params, static_cast<std::size_t>(global_step),
                                        *backend, q_cfg.range, kHidden2);
                } catch (const BackendUnavailable& e) {
                    out.aborted = true;
                    out.abort_reason = e.what();
                    out.env_steps = global_step;
                    out.episodes = episode_counter;
                    out.backend_calls = static_cast<long>(backend->call_count());
                    return out;
                }
                rec.quantum_vec = Eigen::Map<const Eigen::VectorXd>(
                    cf.feature.vector.data(), static_cast<Eigen::Index>(cf.feature.vector.size()));
            }
            const PolicyEvaluation eval =
                heads_forward(net, std::move(gfwd), use_quantum ? &rec.quantum_vec : nullptr);
            rec.action = sample_action(eval.probs, sample_rng);
            rec.log_prob = std::log(eval.probs(rec.action));
            rec.value = eval.value;

            const StepResult sr = env.step_index(rec.action);
            rec.reward = sr.reward.total();
            rec.done = sr.done;
            ep_reward += rec.reward;
            ++ep_length;
            ++global_step;
            batch.steps.push_back(std::move(rec));

            if (env.done()) {
                stats.rewards.push_back(ep_reward);
                stats.lengths.push_back(ep_length);
                ep_reward = 0.0;
                ep_length = 0;
                ++episode_counter;
                reset_episode();
                int guard = 0;
                while (env.done()) {
                    // An initial draw can be immediately infeasible; skip it.
                    if (++guard > 1000) throw std::runtime_error("train: environment resets dead");
                    ++episode_counter;
                    reset_episode();
                }
            }
        }

        if (batch.steps.back().done) {
            batch.bootstrap_value = 0.0;
        } else {
            // Value bootstrap only; peeks at the cache rather than refreshing
            // it so backend-call accounting stays a pure function of steps.
            const ObservationGraph obs = env.observe();
            Eigen::VectorXd qvec;
            if (use_quantum) {
                const QuantumFeature qf = quantum_feature(
                    cache.valid ? cache.value : 0.0, q_cfg.range, kHidden2);
                qvec = Eigen::Map<const Eigen::VectorXd>(
                    qf.vector.data(), static_cast<Eigen::Index>(qf.vector.size()));
            }
            const PolicyEvaluation eval =
                policy_forward(net, obs, use_quantum ? &qvec : nullptr);
            batch.bootstrap_value = eval.value;
        }

        compute_gae(batch, ppo_cfg);
        normalize_advantages(batch);

        const Eigen::VectorXd snapshot = flatten_params(net);
        LossBreakdown mean_loss;
        int n_minibatches = 0;
        bool rolled_back = false;
        std::vector<int> order(batch.steps.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < ppo_cfg.epochs_per_update && !rolled_back; ++epoch) {
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::size_t j = sample_rng.uniform_int(i);
                std::swap(order[i - 1], order[j]);
            }
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(ppo_cfg.minibatch_size)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(ppo_cfg.minibatch_size));
                const std::vector<int> minibatch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
                PPOGradients grads;
                const LossBreakdown loss = ppo_loss(net, batch, minibatch, ppo_cfg, &grads);
                if (!std::isfinite(loss.total)) {
                    unflatten_params(net, snapshot);
                    rolled_back = true;
                    break;
                }
                Eigen::VectorXd params = flatten_params(net);
                adam.step(params, flatten_grads(net, grads));
                unflatten_params(net, params);
                mean_loss.policy += loss.policy;
                mean_loss.value += loss.value;
                mean_loss.entropy += loss.entropy;
                mean_loss.total += loss.total;
                ++n_minibatches;
            }
        }
        if (n_minibatches > 0) {
            mean_loss.policy /= n_minibatches;
            mean_loss.value /= n_minibatches;
            mean_loss.entropy /= n_minibatches;
            mean_loss.total /= n_minibatches;
        }

        UpdateLogRow row;
        row.update = update_idx++;
        row.env_steps = global_step;
        row.mean_ep_reward = stats.mean_reward(ep_reward);
        row.mean_ep_length = stats.mean_length(ep_length);
        row.backend_calls = backend ? static_cast<long>(backend->call_count()) : 0;
        row.loss = mean_loss;
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t_start)
                          .count();
        out.log.push_back(row);
    }

    out.env_steps = global_step;
    out.episodes = episode_counter;
    out.backend_calls = backend ? static_cast<long>(backend->call_count()) : 0;
    return out;
}

void write_training_log_csv(const std::string& path, const std::vector<UpdateLogRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training log: " + path);
    out << "update,env_steps,mean_ep_reward,mean_ep_length,backend_calls,"
           "policy_loss,value_mse,entropy,total_loss,wall_ms\n";
    for (const auto& r : rows) {
        out << r.update << ',' << r.env_steps << ',' << r.mean_ep_reward << ','
            << r.mean_ep_length << ',' << r.backend_calls << ',' << r.loss.policy << ','
            << r.loss.value << ',' << r.loss.entropy << ',' << r.loss.total << ',' << r.wall_ms
            << '\n';
    }
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
        throw std::runtime_error("checkpoint: malformed matrix entry: " + key);
    }
    const Eigen::Index rows = j["rows"].get<Eigen::Index>();
    const Eigen::Index cols = j["cols"].get<Eigen::Index>();
    const auto& data = j["data"];
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw std::runtime_error("checkpoint: matrix data size mismatch: " + key);
    }
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[at++].get<double>();
    }
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
    return data;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array()) throw std::runtime_error("checkpoint: malformed vector entry: " + key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyNetwork& net,
                     const CheckpointMeta& meta) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "qgrid-policy";
    j["use_quantum"] = net.use_quantum;
    j["n_qubits"] = net.n_qubits;
    j["input_dim"] = meta.input_dim;
    j["n_actions"] = meta.n_actions;
    j["grid_fingerprint"] = meta.grid_fingerprint;
    j["seed"] = meta.seed;
    j["env_steps"] = meta.env_steps;
    j["ppo"] = {{"gamma", meta.ppo.gamma},
                {"lambda", meta.ppo.lambda},
                {"learning_rate", meta.ppo.learning_rate},
                {"entropy_coef", meta.ppo.entropy_coef},
                {"value_coef", meta.ppo.value_coef},
                {"clip_eps", meta.ppo.clip_eps},
                {"epochs_per_update", meta.ppo.epochs_per_update},
                {"minibatch_size", meta.ppo.minibatch_size},
                {"steps_per_rollout", meta.ppo.steps_per_rollout}};
    j["quantum"] = {{"n_qubits", meta.quantum.n_qubits},
                    {"procedure", procedure_name(meta.quantum.procedure)},
                    {"refresh_interval", meta.quantum.refresh_interval},
                    {"backend", backend_mode_name(meta.quantum.backend)},
                    {"shots", meta.quantum.shots},
                    {"rescale_lo", meta.quantum.range.lo},
                    {"rescale_hi", meta.quantum.range.hi}};
    nlohmann::json w;
    w["gcn_input_proj"] = matrix_to_json(net.gcn.input_proj);
    w["gcn_input_bias"] = vector_to_json(net.gcn.input_bias);
    w["gcn_w1"] = matrix_to_json(net.gcn.w1);
    w["gcn_b1"] = vector_to_json(net.gcn.b1);
    w["gcn_w2"] = matrix_to_json(net.gcn.w2);
    w["gcn_b2"] = vector_to_json(net.gcn.b2);
    if (net.use_quantum) w["angle_proj"] = matrix_to_json(net.angle_proj);
    w["policy_w"] = matrix_to_json(net.policy_w);
    w["policy_b"] = vector_to_json(net.policy_b);
    w["value_w"] = vector_to_json(net.value_w);
    w["value_b"] = net.value_b;
    j["weights"] = std::move(w);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(1) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("checkpoint: malformed JSON in " + path + ": " + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
        throw std::runtime_error("checkpoint: unsupported format_version in " + path);
    }

    LoadedCheckpoint ck;
    ck.net.use_quantum = j.value("use_quantum", true);
    ck.net.n_qubits = j.value("n_qubits", 4);
    ck.meta.input_dim = j.value("input_dim", 0);
    ck.meta.n_actions = j.value("n_actions", 0);
    ck.meta.seed = j.value("seed", std::uint64_t{0});
    ck.meta.env_steps = j.value("env_steps", 0L);
    ck.meta.grid_fingerprint = j.value("grid_fingerprint", std::string{});
    if (j.contains("ppo")) {
        const auto& p = j["ppo"];
        ck.meta.ppo.gamma = p.value("gamma", ck.meta.ppo.gamma);
        ck.meta.ppo.lambda = p.value("lambda", ck.meta.ppo.lambda);
        ck.meta.ppo.learning_rate = p.value("learning_rate", ck.meta.ppo.learning_rate);
        ck.meta.ppo.entropy_coef = p.value("entropy_coef", ck.meta.ppo.entropy_coef);
        ck.meta.ppo.value_coef = p.value("value_coef", ck.meta.ppo.value_coef);
        ck.meta.ppo.clip_eps = p.value("clip_eps", ck.meta.ppo.clip_eps);
        ck.meta.ppo.epochs_per_update = p.value("epochs_per_update", ck.meta.ppo.epochs_per_update);
        ck.meta.ppo.minibatch_size = p.value("minibatch_size", ck.meta.ppo.minibatch_size);
        ck.meta.ppo.steps_per_rollout = p.value("steps_per_rollout", ck.meta.ppo.steps_per_rollout);
    }
    if (j.contains("quantum")) {
        const auto& q = j["quantum"];
        ck.meta.quantum.n_qubits = q.value("n_qubits", ck.meta.quantum.n_qubits);
        ck.meta.quantum.procedure = parse_procedure(q.value("procedure", std::string{"hybrid"}));
        ck.meta.quantum.refresh_interval =
            q.value("refresh_interval", ck.meta.quantum.refresh_interval);
        ck.meta.quantum.backend = parse_backend_mode(q.value("backend", std::string{"exact"}));
        ck.meta.quantum.shots = q.value("shots", ck.meta.quantum.shots);
        ck.meta.quantum.range.lo = q.value("rescale_lo", ck.meta.quantum.range.lo);
        ck.meta.quantum.range.hi = q.value("rescale_hi", ck.meta.quantum.range.hi);
    }

    if (!j.contains("weights")) throw std::runtime_error("checkpoint: missing weights in " + path);
    const auto& w = j["weights"];
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!w.contains(key)) {
            throw std::runtime_error(std::string("checkpoint: missing weight tensor ") + key);
        }
        return w[key];
    };
    ck.net.gcn.input_proj = matrix_from_json(need("gcn_input_proj"), "gcn_input_proj");
    ck.net.gcn.input_bias = vector_from_json(need("gcn_input_bias"), "gcn_input_bias");
    ck.net.gcn.w1 = matrix_from_json(need("gcn_w1"), "gcn_w1");
    ck.net.gcn.b1 = vector_from_json(need("gcn_b1"), "gcn_b1");
    ck.net.gcn.w2 = matrix_from_json(need("gcn_w2"), "gcn_w2");
    ck.net.gcn.b2 = vector_from_json(need("gcn_b2"), "gcn_b2");
    if (ck.net.use_quantum) ck.net.angle_proj = matrix_from_json(need("angle_proj"), "angle_proj");
    ck.net.policy_w = matrix_from_json(need("policy_w"), "policy_w");
    ck.net.policy_b = vector_from_json(need("policy_b"), "policy_b");
    ck.net.value_w = vector_from_json(need("value_w"), "value_w");
    if (!w.contains("value_b")) throw std::runtime_error("checkpoint: missing weight tensor value_b");
    ck.net.value_b = w["value_b"].get<double>();

    const int width = ck.net.feature_width();
    if (ck.net.gcn.input_proj.cols() != kHidden1 || ck.net.gcn.w1.rows() != kHidden1 ||
        ck.net.gcn.w1.cols() != kHidden1 || ck.net.gcn.w2.rows() != kHidden1 ||
        ck.net.gcn.w2.cols() != kHidden2) {
        throw std::runtime_error("checkpoint: graph layer dimensions are inconsistent");
    }
    if (ck.net.use_quantum &&
        (ck.net.angle_proj.rows() != kHidden2 ||
         ck.net.angle_proj.cols() != 2 * ck.net.n_qubits)) {
        throw std::runtime_error("checkpoint: angle projection dimensions are inconsistent");
    }
    if (ck.net.policy_w.rows() != width || ck.net.value_w.size() != width ||
        ck.net.policy_b.size() != ck.net.policy_w.cols()) {
        throw std::runtime_error("checkpoint: head dimensions are inconsistent");
    }
    if (ck.meta.input_dim != 0 && ck.net.gcn.input_proj.rows() != ck.meta.input_dim) {
        throw std::runtime_error("checkpoint: input_dim does not match gcn_input_proj");
    }
    if (ck.meta.n_actions != 0 && ck.net.policy_w.cols() != ck.meta.n_actions) {
        throw std::runtime_error("checkpoint: n_actions does not match policy_w");
    }
    return ck;
}

}  // namespace qgrid
