#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "qgrid/rng.hpp"

namespace qgrid {

inline constexpr int kHidden1 = 64;
inline constexpr int kHidden2 = 128;

// Per-node feature matrix plus an undirected edge list. Self-loops are added
// internally by the normalization, not listed here.
struct ObservationGraph {
    Eigen::MatrixXd node_features;              // |V| x d
    std::vector<std::pair<int, int>> edges;
};

// Two graph-convolution layers (64 -> 64 -> 128) behind a learned linear
// projection that lifts the raw node features to width 64.
struct GCNWeights {
    Eigen::MatrixXd input_proj;  // d x 64
    Eigen::VectorXd input_bias;  // 64
    Eigen::MatrixXd w1;          // 64 x 64
    Eigen::VectorXd b1;          // 64
    Eigen::MatrixXd w2;          // 64 x 128
    Eigen::VectorXd b2;          // 128
};

using PooledFeature = Eigen::VectorXd;  // length kHidden2

// Uniform on +-sqrt(6 / (rows + cols)).
Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng);

GCNWeights init_gcn_weights(int input_dim, Rng& rng);

// Symmetric normalization D^-1/2 (A + I) D^-1/2 with self-loops.
Eigen::MatrixXd normalized_adjacency(int n_nodes, const std::vector<std::pair<int, int>>& edges);

// Forward pass with everything the backward pass needs.
struct GCNForward {
    Eigen::MatrixXd a_hat;   // |V| x |V|
    Eigen::MatrixXd x0;      // |V| x 64 projected inputs
    Eigen::MatrixXd z1, l1;  // layer-1 pre-activation / ReLU output
    Eigen::MatrixXd z2, l2;  // layer-2 pre-activation / ReLU output
    PooledFeature pooled;    // column mean of l2
};

GCNForward gcn_forward(const ObservationGraph& obs, const GCNWeights& weights);

struct GCNGradients {
    Eigen::MatrixXd input_proj;
    Eigen::VectorXd input_bias;
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

GCNGradients zero_gcn_gradients(const GCNWeights& weights);

// Backpropagates d(loss)/d(pooled) through the forward cache, accumulating
// into `grads`.
void gcn_backward(const ObservationGraph& obs, const GCNWeights& weights, const GCNForward& fwd,
                  const Eigen::VectorXd& d_pooled, GCNGradients& grads);

// theta = pi * tanh(proj^T pooled), componentwise in (-pi, pi).
Eigen::VectorXd project_to_angles(const PooledFeature& pooled, const Eigen::MatrixXd& proj);

}  // namespace qgrid
