#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "qgrid/gcn.hpp"
#include "qgrid/rng.hpp"

using namespace qgrid;

namespace {

ObservationGraph path_graph(int n_nodes, int d, Rng& rng) {
    ObservationGraph g;
    g.node_features.resize(n_nodes, d);
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < d; ++j) g.node_features(i, j) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i + 1 < n_nodes; ++i) g.edges.emplace_back(i, i + 1);
    return g;
}

double loss_of(const ObservationGraph& obs, const GCNWeights& w, const Eigen::VectorXd& c) {
    return c.dot(gcn_forward(obs, w).pooled);
}

void check_close(double analytic, double numeric, double rel_tol) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    CHECK(std::abs(analytic - numeric) <= rel_tol * scale);
}

}  // namespace

TEST_CASE("normalized adjacency of the 3-node path matches hand values") {
    auto a_hat = normalized_adjacency(3, {{0, 1}, {1, 2}});
    const double s6 = 1.0 / std::sqrt(6.0);
    CHECK(a_hat(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a_hat(0, 1) == doctest::Approx(s6).epsilon(1e-12));
    CHECK(a_hat(0, 2) == doctest::Approx(0.0));
    CHECK(a_hat(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(a_hat(2, 1) == doctest::Approx(s6).epsilon(1e-12));
    CHECK(a_hat == a_hat.transpose().eval());

    // One aggregation sweep over features [1, 2, 3].
    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;
    Eigen::VectorXd ax = a_hat * x;
    CHECK(ax(0) == doctest::Approx(1.316496580927726).epsilon(1e-12));
    CHECK(ax(1) == doctest::Approx(2.299659828522119).epsilon(1e-12));
    CHECK(ax(2) == doctest::Approx(2.316496580927726).epsilon(1e-12));
}

TEST_CASE("an isolated node normalizes to its own self-loop") {
    auto a_hat = normalized_adjacency(1, {});
    CHECK(a_hat.rows() == 1);
    CHECK(a_hat(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("forward pass produces the fixed layer widths") {
    Rng rng(61);
    auto obs = path_graph(5, 7, rng);
    auto w = init_gcn_weights(7, rng);
    auto fwd = gcn_forward(obs, w);
    CHECK(fwd.x0.rows() == 5);
    CHECK(fwd.x0.cols() == kHidden1);
    CHECK(fwd.l1.rows() == 5);
    CHECK(fwd.l1.cols() == kHidden1);
    CHECK(fwd.l2.rows() == 5);
    CHECK(fwd.l2.cols() == kHidden2);
    CHECK(fwd.pooled.size() == kHidden2);
    CHECK((fwd.l1.array() >= 0.0).all());
    CHECK((fwd.l2.array() >= 0.0).all());
    // Pooling is the column mean of the last layer.
    Eigen::VectorXd mean = fwd.l2.colwise().mean();
    CHECK((fwd.pooled - mean).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("zero weights and biases give a zero pooled vector") {
    ObservationGraph obs;
    obs.node_features = Eigen::MatrixXd::Constant(1, 3, 2.5);
    Rng rng(67);
    auto w = init_gcn_weights(3, rng);
    w.input_proj.setZero();
    w.input_bias.setZero();
    w.w1.setZero();
    w.b1.setZero();
    w.w2.setZero();
    w.b2.setZero();
    auto fwd = gcn_forward(obs, w);
    CHECK(fwd.pooled.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("identical isolated nodes produce identical embeddings") {
    ObservationGraph obs;
    obs.node_features.resize(2, 4);
    obs.node_features.row(0) << 0.3, -0.7, 1.1, 0.05;
    obs.node_features.row(1) = obs.node_features.row(0);
    Rng rng(71);
    auto w = init_gcn_weights(4, rng);
    auto fwd = gcn_forward(obs, w);
    CHECK((fwd.l2.row(0) - fwd.l2.row(1)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("node permutation permutes embeddings and fixes the pooled vector") {
    Rng rng(73);
    auto obs = path_graph(6, 5, rng);
    obs.edges.emplace_back(0, 3);  // break the path symmetry
    auto w = init_gcn_weights(5, rng);
    auto fwd = gcn_forward(obs, w);

    // Permutation sigma: new index = (old + 2) mod 6.
    auto sigma = [](int v) { return (v + 2) % 6; };
    ObservationGraph perm;
    perm.node_features.resize(6, 5);
    for (int i = 0; i < 6; ++i) perm.node_features.row(sigma(i)) = obs.node_features.row(i);
    for (auto [u, v] : obs.edges) perm.edges.emplace_back(sigma(u), sigma(v));
    auto fwd_perm = gcn_forward(perm, w);

    for (int i = 0; i < 6; ++i)
        CHECK((fwd.l2.row(i) - fwd_perm.l2.row(sigma(i))).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((fwd.pooled - fwd_perm.pooled).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("glorot initialization respects its bound and its seed") {
    Rng a(5), b(5), c(6);
    auto m1 = glorot_uniform(30, 50, a);
    auto m2 = glorot_uniform(30, 50, b);
    auto m3 = glorot_uniform(30, 50, c);
    const double bound = std::sqrt(6.0 / (30 + 50));
    CHECK(m1.cwiseAbs().maxCoeff() <= bound);
    CHECK(m1 == m2);
    CHECK(m1 != m3);
    CHECK(m1.cwiseAbs().maxCoeff() > 0.5 * bound);  // not degenerate
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(79);
    const int d = 3;
    auto obs = path_graph(4, d, rng);
    obs.edges.emplace_back(0, 2);
    auto w = init_gcn_weights(d, rng);
    Eigen::VectorXd c(kHidden2);
    for (int i = 0; i < kHidden2; ++i) c(i) = rng.uniform(-1.0, 1.0);

    auto fwd = gcn_forward(obs, w);
    auto grads = zero_gcn_gradients(w);
    gcn_backward(obs, w, fwd, c, grads);

    const double h = 1e-6;
    auto check_matrix = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
        for (int i = 0; i < param.rows(); ++i) {
            for (int j = 0; j < param.cols(); ++j) {
                const double keep = param(i, j);
                param(i, j) = keep + h;
                const double up = loss_of(obs, w, c);
                param(i, j) = keep - h;
                const double down = loss_of(obs, w, c);
                param(i, j) = keep;
                check_close(grad(i, j), (up - down) / (2.0 * h), 1e-4);
            }
        }
    };
    auto check_vector = [&](Eigen::VectorXd& param, const Eigen::VectorXd& grad) {
        for (int i = 0; i < param.size(); ++i) {
            const double keep = param(i);
            param(i) = keep + h;
            const double up = loss_of(obs, w, c);
            param(i) = keep - h;
            const double down = loss_of(obs, w, c);
            param(i) = keep;
            check_close(grad(i), (up - down) / (2.0 * h), 1e-4);
        }
    };

    check_matrix(w.input_proj, grads.input_proj);
    check_vector(w.input_bias, grads.input_bias);
    check_matrix(w.w1, grads.w1);
    check_vector(w.b1, grads.b1);
    check_matrix(w.w2, grads.w2);
    check_vector(w.b2, grads.b2);
}

TEST_CASE("angle projection is bounded, odd at zero, and deterministic") {
    Rng rng(83);
    Eigen::VectorXd pooled(kHidden2);
    for (int i = 0; i < kHidden2; ++i) pooled(i) = rng.uniform(-2.0, 2.0);
    auto proj = glorot_uniform(kHidden2, 8, rng);

    auto theta = project_to_angles(pooled, proj);
    REQUIRE(theta.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(theta(i)) < M_PI);
        const double expected = M_PI * std::tanh(proj.col(i).dot(pooled));
        CHECK(theta(i) == doctest::Approx(expected).epsilon(1e-12));
    }

    CHECK(project_to_angles(Eigen::VectorXd::Zero(kHidden2), proj).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(project_to_angles(pooled, proj) == theta);
}
