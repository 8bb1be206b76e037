#include "qgrid/pqc.hpp"

#include <cmath>
#include <stdexcept>

namespace qgrid {

MeasurementDistribution ExactBackend::execute(const std::vector<Gate>& circuit, int n_qubits) {
    Statevector state(n_qubits);
    state.apply_all(circuit);
    return exact_distribution(state);
}

MeasurementDistribution SampledBackend::execute(const std::vector<Gate>& circuit, int n_qubits) {
    Statevector state(n_qubits);
    state.apply_all(circuit);
    return sample_distribution(state, shots_, rng_);
}

std::vector<Gate> build_circuit(const PQCParameters& params) {
    const int n = params.n_qubits;
    if (n < 1) throw std::invalid_argument("build_circuit: n_qubits must be >= 1");
    if (params.theta.size() != static_cast<std::size_t>(2 * n)) {
        throw std::invalid_argument("build_circuit: expected " + std::to_string(2 * n) +
                                    " parameters, got " + std::to_string(params.theta.size()));
    }

    std::vector<Gate> circuit;
    circuit.reserve(static_cast<std::size_t>(3 * n + (n - 1)));
    for (int q = 0; q < n; ++q) circuit.push_back(Gate::hadamard(q));
    for (int q = 0; q < n; ++q) {
        circuit.push_back(Gate::rot_y(q, params.theta[q]));
        circuit.push_back(Gate::rot_z(q, params.theta[q + n]));
    }
    for (int q = 0; q + 1 < n; ++q) circuit.push_back(Gate::cnot(q, q + 1));
    return circuit;
}

double evaluate(const PQCParameters& params, QuantumBackend& backend) {
    const std::vector<Gate> circuit = build_circuit(params);
    return parity_expectation(backend.run(circuit, params.n_qubits));
}

QuantumFeature quantum_feature(double expectation, const RescaleRange& range, std::size_t h2) {
    if (range.lo >= range.hi) {
        throw std::invalid_argument("quantum_feature: rescale range requires lo < hi");
    }
    if (expectation < -1.0 - 1e-9 || expectation > 1.0 + 1e-9) {
        throw std::invalid_argument("quantum_feature: expectation outside [-1, 1]");
    }
    QuantumFeature feature;
    feature.scalar = expectation;
    const double rescaled = (expectation + 1.0) / 2.0 * (range.hi - range.lo) + range.lo;
    feature.vector.assign(h2, rescaled);
    return feature;
}

CachedFeature cached_feature(QuantumCache& cache, const PQCParameters& params, std::size_t step,
                             QuantumBackend& backend, const RescaleRange& range, std::size_t h2) {
    if (cache.refresh_interval < 1) {
        throw std::invalid_argument("cached_feature: refresh interval must be >= 1");
    }
    CachedFeature result;
    const bool due = !cache.valid || cache.age(step) >= cache.refresh_interval;
    if (due) {
        if (!cache.valid) {
            // Nothing to fall back on; failures propagate.
            cache.value = evaluate(params, backend);
            cache.valid = true;
            cache.last_refresh_step = step;
            result.refreshed = true;
        } else {
            try {
                cache.value = evaluate(params, backend);
                cache.last_refresh_step = step;
                result.refreshed = true;
            } catch (const BackendUnavailable&) {
                result.stale = true;
            }
        }
    }
    result.feature = quantum_feature(cache.value, range, h2);
    return result;
}

std::size_t refresh_interval_for(Procedure procedure, std::size_t hybrid_interval) {
    switch (procedure) {
        case Procedure::Iterative:
            return 1;
        case Procedure::Cached:
            return kNeverRefresh;
        case Procedure::Hybrid:
            if (hybrid_interval < 1) {
                throw std::invalid_argument("hybrid refresh interval must be >= 1");
            }
            return hybrid_interval;
        case Procedure::None:
            break;
    }
    throw std::invalid_argument("procedure has no refresh interval");
}

Procedure parse_procedure(const std::string& name) {
    if (name == "iterative") return Procedure::Iterative;
    if (name == "cached") return Procedure::Cached;
    if (name == "hybrid") return Procedure::Hybrid;
    if (name == "none") return Procedure::None;
    throw std::invalid_argument("unknown procedure '" + name +
                                "' (expected iterative|cached|hybrid|none)");
}

std::string procedure_name(Procedure procedure) {
    switch (procedure) {
        case Procedure::Iterative: return "iterative";
        case Procedure::Cached: return "cached";
        case Procedure::Hybrid: return "hybrid";
        case Procedure::None: return "none";
    }
    return "unknown";
}

}  // namespace qgrid
