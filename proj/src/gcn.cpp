#include "qgrid/gcn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qgrid {

Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(-bound, bound);
        }
    }
    return m;
}

namespace {

void check_edges(int n_nodes, const std::vector<std::pair<int, int>>& edges) {
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes) {
            throw std::invalid_argument("edge endpoint out of range");
        }
        if (a == b) {
            throw std::invalid_argument("self-loop in input edge list");
        }
    }
}

}  // namespace

GCNWeights init_gcn_weights(int input_dim, Rng& rng) {
    if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    GCNWeights w;
    w.input_proj = glorot_uniform(input_dim, kHidden1, rng);
    w.input_bias = Eigen::VectorXd::Zero(kHidden1);
    w.w1 = glorot_uniform(kHidden1, kHidden1, rng);
    w.b1 = Eigen::VectorXd::Zero(kHidden1);
    w.w2 = glorot_uniform(kHidden1, kHidden2, rng);
    w.b2 = Eigen::VectorXd::Zero(kHidden2);
    return w;
}

Eigen::MatrixXd normalized_adjacency(int n_nodes, const std::vector<std::pair<int, int>>& edges) {
    check_edges(n_nodes, edges);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n_nodes, n_nodes);
    for (const auto& [u, v] : edges) {
        a(u, v) = 1.0;
        a(v, u) = 1.0;
    }
    Eigen::VectorXd inv_sqrt_deg(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        inv_sqrt_deg(i) = 1.0 / std::sqrt(a.row(i).sum());
    }
    return inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
}

GCNForward gcn_forward(const ObservationGraph& obs, const GCNWeights& weights) {
    const int n_nodes = static_cast<int>(obs.node_features.rows());
    if (n_nodes < 1) throw std::invalid_argument("gcn_forward: graph has no nodes");
    if (obs.node_features.cols() != weights.input_proj.rows()) {
        throw std::invalid_argument("gcn_forward: feature width " +
                                    std::to_string(obs.node_features.cols()) +
                                    " does not match projection rows " +
                                    std::to_string(weights.input_proj.rows()));
    }
    if (weights.w1.rows() != kHidden1 || weights.w1.cols() != kHidden1 ||
        weights.w2.rows() != kHidden1 || weights.w2.cols() != kHidden2) {
        throw std::invalid_argument("gcn_forward: hidden-layer shapes must be 64x64 and 64x128");
    }

    GCNForward fwd;
    fwd.a_hat = normalized_adjacency(n_nodes, obs.edges);
    fwd.x0 = (obs.node_features * weights.input_proj).rowwise() + weights.input_bias.transpose();
    fwd.z1 = (fwd.a_hat * fwd.x0 * weights.w1).rowwise() + weights.b1.transpose();
    fwd.l1 = fwd.z1.cwiseMax(0.0);
    fwd.z2 = (fwd.a_hat * fwd.l1 * weights.w2).rowwise() + weights.b2.transpose();
    fwd.l2 = fwd.z2.cwiseMax(0.0);
    fwd.pooled = fwd.l2.colwise().mean();
    return fwd;
}

GCNGradients zero_gcn_gradients(const GCNWeights& weights) {
    GCNGradients g;
    g.input_proj = Eigen::MatrixXd::Zero(weights.input_proj.rows(), weights.input_proj.cols());
    g.input_bias = Eigen::VectorXd::Zero(weights.input_bias.size());
    g.w1 = Eigen::MatrixXd::Zero(weights.w1.rows(), weights.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(weights.b1.size());
    g.w2 = Eigen::MatrixXd::Zero(weights.w2.rows(), weights.w2.cols());
    g.b2 = Eigen::VectorXd::Zero(weights.b2.size());
    return g;
}

void gcn_backward(const ObservationGraph& obs, const GCNWeights& weights, const GCNForward& fwd,
                  const Eigen::VectorXd& d_pooled, GCNGradients& grads) {
    const int n_nodes = static_cast<int>(obs.node_features.rows());
    if (d_pooled.size() != kHidden2) {
        throw std::invalid_argument("gcn_backward: d_pooled must have length 128");
    }

    // Mean pooling spreads the gradient evenly over nodes.
    Eigen::MatrixXd d_l2 =
        Eigen::VectorXd::Constant(n_nodes, 1.0 / n_nodes) * d_pooled.transpose();

    const Eigen::MatrixXd d_z2 = d_l2.cwiseProduct((fwd.z2.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd prop1 = fwd.a_hat * fwd.l1;  // layer-2 convolution input
    grads.w2 += prop1.transpose() * d_z2;
    grads.b2 += d_z2.colwise().sum();

    const Eigen::MatrixXd d_l1 = fwd.a_hat.transpose() * (d_z2 * weights.w2.transpose());
    const Eigen::MatrixXd d_z1 = d_l1.cwiseProduct((fwd.z1.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd prop0 = fwd.a_hat * fwd.x0;
    grads.w1 += prop0.transpose() * d_z1;
    grads.b1 += d_z1.colwise().sum();

    const Eigen::MatrixXd d_x0 = fwd.a_hat.transpose() * (d_z1 * weights.w1.transpose());
    grads.input_proj += obs.node_features.transpose() * d_x0;
    grads.input_bias += d_x0.colwise().sum();
}

Eigen::VectorXd project_to_angles(const PooledFeature& pooled, const Eigen::MatrixXd& proj) {
    if (proj.rows() != pooled.size()) {
        throw std::invalid_argument("project_to_angles: projection rows must match pooled length");
    }
    return M_PI * (proj.transpose() * pooled).array().tanh();
}

}  // namespace qgrid
