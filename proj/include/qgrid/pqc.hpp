#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgrid/rng.hpp"
#include "qgrid/statevector.hpp"

namespace qgrid {

// Rotation angles bound into the circuit: theta[j] drives RY on qubit j,
// theta[j + n] drives RZ on qubit j.
struct PQCParameters {
    std::vector<double> theta;
    int n_qubits = 4;
};

// Target interval for the rescaled expectation.
struct RescaleRange {
    double lo = 0.0;
    double hi = 1.0;
};

// Broadcast feature: `scalar` is the raw expectation in [-1, 1], `vector`
// holds the rescaled value repeated across the feature width.
struct QuantumFeature {
    std::vector<double> vector;
    double scalar = 0.0;
};

// Raised when a backend cannot serve a request. Never cached.
struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation backend seam. Local statevector backends are provided below; a
// remote client would implement the same interface.
class QuantumBackend {
public:
    virtual ~QuantumBackend() = default;

    MeasurementDistribution run(const std::vector<Gate>& circuit, int n_qubits) {
        MeasurementDistribution dist = execute(circuit, n_qubits);
        ++calls_;
        return dist;
    }

    std::uint64_t call_count() const { return calls_; }

private:
    virtual MeasurementDistribution execute(const std::vector<Gate>& circuit, int n_qubits) = 0;

    std::uint64_t calls_ = 0;
};

class ExactBackend final : public QuantumBackend {
private:
    MeasurementDistribution execute(const std::vector<Gate>& circuit, int n_qubits) override;
};

// Shot-sampled backend with its own seeded stream; consecutive runs draw
// consecutive samples from that stream.
class SampledBackend final : public QuantumBackend {
public:
    SampledBackend(std::uint64_t shots, std::uint64_t seed) : shots_(shots), rng_(seed) {
        if (shots == 0) throw std::invalid_argument("SampledBackend requires shots >= 1");
    }

private:
    MeasurementDistribution execute(const std::vector<Gate>& circuit, int n_qubits) override;

    std::uint64_t shots_;
    Rng rng_;
};

// H on every qubit, then RY/RZ per qubit, then the adjacent CNOT chain
// (q0->q1, ..., q_{n-2}->q_{n-1}).
std::vector<Gate> build_circuit(const PQCParameters& params);

// Runs the bound circuit on |0...0> and returns the parity expectation.
double evaluate(const PQCParameters& params, QuantumBackend& backend);

// Affine map of E in [-1, 1] onto [range.lo, range.hi], broadcast across h2.
QuantumFeature quantum_feature(double expectation, const RescaleRange& range, std::size_t h2);

// Refresh interval sentinel: cache once, never refresh.
inline constexpr std::size_t kNeverRefresh = std::numeric_limits<std::size_t>::max();

// Cached scalar plus its refresh policy. refresh_interval = 1 evaluates every
// step (iterative), kNeverRefresh evaluates once (cached), finite S > 1
// refreshes every S steps (hybrid).
struct QuantumCache {
    double value = 0.0;
    bool valid = false;
    std::size_t last_refresh_step = 0;
    std::size_t refresh_interval = kNeverRefresh;

    std::size_t age(std::size_t step) const {
        return valid && step >= last_refresh_step ? step - last_refresh_step : kNeverRefresh;
    }
};

struct CachedFeature {
    QuantumFeature feature;
    bool refreshed = false;  // backend was called at this step
    bool stale = false;      // backend failed; previous cached value returned
};

// Selects between a fresh evaluation and the cached scalar, updating the
// cache in place. A backend failure propagates when nothing valid is cached
// and degrades to the stale value otherwise.
CachedFeature cached_feature(QuantumCache& cache, const PQCParameters& params, std::size_t step,
                             QuantumBackend& backend, const RescaleRange& range, std::size_t h2);

enum class Procedure { Iterative, Cached, Hybrid, None };

std::size_t refresh_interval_for(Procedure procedure, std::size_t hybrid_interval);
Procedure parse_procedure(const std::string& name);
std::string procedure_name(Procedure procedure);

}  // namespace qgrid
