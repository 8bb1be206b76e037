#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qgrid/pqc.hpp"
#include "qgrid/rng.hpp"

using namespace qgrid;

namespace {

// Serves exact results for a fixed number of calls, then goes offline.
class FlakyBackend final : public QuantumBackend {
public:
    explicit FlakyBackend(int successes) : remaining_(successes) {}

private:
    MeasurementDistribution execute(const std::vector<Gate>& circuit, int n_qubits) override {
        if (remaining_ <= 0) throw BackendUnavailable("backend offline");
        --remaining_;
        Statevector state(n_qubits);
        state.apply_all(circuit);
        return exact_distribution(state);
    }

    int remaining_;
};

PQCParameters random_params(int n, Rng& rng) {
    PQCParameters p;
    p.n_qubits = n;
    p.theta.resize(static_cast<std::size_t>(2 * n));
    for (auto& t : p.theta) t = rng.uniform(-M_PI, M_PI);
    return p;
}

}  // namespace

TEST_CASE("four-qubit circuit has the fixed 15-gate layout") {
    PQCParameters p;
    p.n_qubits = 4;
    p.theta = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    auto gates = build_circuit(p);
    REQUIRE(gates.size() == 15);
    for (int q = 0; q < 4; ++q) {
        CHECK(gates[static_cast<std::size_t>(q)].kind == GateKind::Hadamard);
        CHECK(gates[static_cast<std::size_t>(q)].target == q);
    }
    for (int q = 0; q < 4; ++q) {
        const auto& ry = gates[static_cast<std::size_t>(4 + 2 * q)];
        const auto& rz = gates[static_cast<std::size_t>(5 + 2 * q)];
        CHECK(ry.kind == GateKind::RotY);
        CHECK(ry.target == q);
        CHECK(ry.angle == doctest::Approx(p.theta[static_cast<std::size_t>(q)]));
        CHECK(rz.kind == GateKind::RotZ);
        CHECK(rz.target == q);
        CHECK(rz.angle == doctest::Approx(p.theta[static_cast<std::size_t>(q + 4)]));
    }
    for (int q = 0; q < 3; ++q) {
        const auto& cx = gates[static_cast<std::size_t>(12 + q)];
        CHECK(cx.kind == GateKind::Cnot);
        CHECK(cx.control == q);
        CHECK(cx.target == q + 1);
    }
}

TEST_CASE("two-qubit circuit degenerates to one CNOT") {
    PQCParameters p;
    p.n_qubits = 2;
    p.theta = {0.0, 0.0, 0.0, 0.0};
    auto gates = build_circuit(p);
    REQUIRE(gates.size() == 7);
    CHECK(gates.back().kind == GateKind::Cnot);
}

TEST_CASE("parameter length must be twice the qubit count") {
    PQCParameters p;
    p.n_qubits = 4;
    p.theta = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(build_circuit(p), std::invalid_argument);
}

TEST_CASE("zero angles leave the expectation at exactly zero") {
    // The rotations are identity at theta=0, so the CNOT chain only permutes
    // the uniform superposition: every outcome stays at probability 1/2^n.
    ExactBackend backend;
    for (int n = 2; n <= 5; ++n) {
        PQCParameters p;
        p.n_qubits = n;
        p.theta.assign(static_cast<std::size_t>(2 * n), 0.0);
        CHECK(std::abs(evaluate(p, backend)) < 1e-12);

        Statevector s(n);
        s.apply_all(build_circuit(p));
        auto dist = exact_distribution(s);
        for (double prob : dist.probabilities)
            CHECK(prob == doctest::Approx(1.0 / static_cast<double>(s.dim())).epsilon(1e-12));
    }
}

TEST_CASE("evaluate matches the dense-matrix oracle on random parameters") {
    ExactBackend backend;
    Rng rng(41);
    for (int rep = 0; rep < 25; ++rep) {
        auto p = random_params(4, rng);
        const double expected = oracle::parity_from_amplitudes(oracle::run_circuit(build_circuit(p), 4));
        CHECK(evaluate(p, backend) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("sampled evaluation tracks the exact value within three sigma") {
    ExactBackend exact;
    Rng rng(43);
    for (int rep = 0; rep < 20; ++rep) {
        auto p = random_params(4, rng);
        const double e = evaluate(p, exact);
        SampledBackend sampled(1024, 1000 + static_cast<std::uint64_t>(rep));
        const double e_hat = evaluate(p, sampled);
        const double bound = 3.0 * std::sqrt((1.0 - e * e) / 1024.0);
        CHECK(std::abs(e_hat - e) <= bound + 1e-12);
    }
}

TEST_CASE("feature rescaling maps the expectation range onto [lo, hi]") {
    auto low = quantum_feature(-1.0, {0.0, 1.0}, 128);
    REQUIRE(low.vector.size() == 128);
    for (double v : low.vector) CHECK(v == doctest::Approx(0.0));
    CHECK(low.scalar == doctest::Approx(-1.0));

    auto high = quantum_feature(1.0, {0.0, 1.0}, 128);
    for (double v : high.vector) CHECK(v == doctest::Approx(1.0));

    auto mid = quantum_feature(0.0, {-2.0, 2.0}, 16);
    for (double v : mid.vector) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("feature rescaling is monotone in the expectation") {
    const RescaleRange range{-0.5, 2.0};
    double prev = -1e300;
    for (double e = -1.0; e <= 1.0; e += 0.125) {
        const double v = quantum_feature(e, range, 1).vector[0];
        CHECK(v > prev);
        CHECK(v >= range.lo - 1e-12);
        CHECK(v <= range.hi + 1e-12);
        prev = v;
    }
}

TEST_CASE("feature rescaling validates its inputs") {
    CHECK_THROWS_AS(quantum_feature(1.5, {0.0, 1.0}, 8), std::invalid_argument);
    CHECK_THROWS_AS(quantum_feature(0.0, {1.0, 0.0}, 8), std::invalid_argument);
    CHECK_NOTHROW(quantum_feature(1.0 + 5e-10, {0.0, 1.0}, 8));  // tolerance for roundoff
}

TEST_CASE("refresh policy drives the backend call count") {
    ExactBackend backend;
    Rng rng(47);
    auto p = random_params(4, rng);

    auto run = [&](std::size_t interval) {
        ExactBackend b;
        QuantumCache cache;
        cache.refresh_interval = interval;
        for (std::size_t step = 0; step < 100; ++step)
            cached_feature(cache, p, step, b, {0.0, 1.0}, 8);
        return b.call_count();
    };

    CHECK(run(1) == 100);             // fresh every step
    CHECK(run(kNeverRefresh) == 1);   // evaluated once, reused forever
    CHECK(run(10) == 10);             // refreshes at steps 0, 10, ..., 90
    CHECK(run(50) == 2);
}

TEST_CASE("cache refresh flags mark the steps that called the backend") {
    ExactBackend backend;
    PQCParameters p;
    p.n_qubits = 2;
    p.theta = {0.3, -0.2, 0.1, 0.9};
    QuantumCache cache;
    cache.refresh_interval = 3;
    for (std::size_t step = 0; step < 9; ++step) {
        auto out = cached_feature(cache, p, step, backend, {0.0, 1.0}, 4);
        CHECK(out.refreshed == (step % 3 == 0));
        CHECK_FALSE(out.stale);
    }
    CHECK(backend.call_count() == 3);
}

TEST_CASE("a backend failure degrades to the stale cached value") {
    PQCParameters p;
    p.n_qubits = 2;
    p.theta = {0.4, 0.1, -0.3, 0.2};
    FlakyBackend backend(1);  // first refresh succeeds, second fails
    QuantumCache cache;
    cache.refresh_interval = 2;

    auto first = cached_feature(cache, p, 0, backend, {0.0, 1.0}, 4);
    CHECK(first.refreshed);
    const double cached_value = cache.value;

    auto second = cached_feature(cache, p, 2, backend, {0.0, 1.0}, 4);
    CHECK(second.stale);
    CHECK_FALSE(second.refreshed);
    CHECK(cache.value == doctest::Approx(cached_value));
    CHECK(second.feature.scalar == doctest::Approx(first.feature.scalar));
}

TEST_CASE("a backend failure with an empty cache propagates") {
    PQCParameters p;
    p.n_qubits = 2;
    p.theta = {0.4, 0.1, -0.3, 0.2};
    FlakyBackend backend(0);
    QuantumCache cache;
    cache.refresh_interval = 1;
    CHECK_THROWS_AS(cached_feature(cache, p, 0, backend, {0.0, 1.0}, 4), BackendUnavailable);
    CHECK_FALSE(cache.valid);
}

TEST_CASE("procedure names map to refresh intervals") {
    CHECK(refresh_interval_for(Procedure::Iterative, 50) == 1);
    CHECK(refresh_interval_for(Procedure::Cached, 50) == kNeverRefresh);
    CHECK(refresh_interval_for(Procedure::Hybrid, 50) == 50);
    CHECK_THROWS_AS(refresh_interval_for(Procedure::Hybrid, 0), std::invalid_argument);
    CHECK_THROWS_AS(refresh_interval_for(Procedure::None, 1), std::invalid_argument);

    for (auto proc : {Procedure::Iterative, Procedure::Cached, Procedure::Hybrid, Procedure::None})
        CHECK(parse_procedure(procedure_name(proc)) == proc);
    CHECK_THROWS_AS(parse_procedure("warp"), std::invalid_argument);
}

TEST_CASE("hybrid interval one reproduces the iterative feature stream") {
    Rng rng(53);
    ExactBackend b_hybrid, b_iter;
    QuantumCache hybrid_cache, iter_cache;
    hybrid_cache.refresh_interval = refresh_interval_for(Procedure::Hybrid, 1);
    iter_cache.refresh_interval = refresh_interval_for(Procedure::Iterative, 1);
    for (std::size_t step = 0; step < 200; ++step) {
        auto p = random_params(3, rng);  // parameters drift step to step
        auto a = cached_feature(hybrid_cache, p, step, b_hybrid, {0.0, 1.0}, 4);
        auto b = cached_feature(iter_cache, p, step, b_iter, {0.0, 1.0}, 4);
        CHECK(a.feature.scalar == b.feature.scalar);  // bitwise
        CHECK(a.feature.vector == b.feature.vector);
    }
    CHECK(b_hybrid.call_count() == b_iter.call_count());
}
