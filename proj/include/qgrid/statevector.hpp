#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "qgrid/rng.hpp"

namespace qgrid {

enum class GateKind { Hadamard, RotY, RotZ, Cnot };

// One circuit element. Qubit 0 is the least-significant bit of a basis index.
struct Gate {
    GateKind kind;
    int target = 0;
    int control = -1;    // CNOT only
    double angle = 0.0;  // RotY / RotZ only

    static Gate hadamard(int qubit) { return {GateKind::Hadamard, qubit, -1, 0.0}; }
    static Gate rot_y(int qubit, double theta) { return {GateKind::RotY, qubit, -1, theta}; }
    static Gate rot_z(int qubit, double phi) { return {GateKind::RotZ, qubit, -1, phi}; }
    static Gate cnot(int control, int target) { return {GateKind::Cnot, target, control, 0.0}; }
};

// Measurement statistics over all 2^n basis strings. `probabilities[z]` is
// p_z with z read little-endian. `counts` is populated in sampled mode only.
struct MeasurementDistribution {
    int n_qubits = 0;
    std::vector<double> probabilities;
    std::vector<std::uint64_t> counts;

    double total() const;
};

// Exact n-qubit statevector with the H / RY / RZ / CNOT gate set.
//
// Conventions: RY(theta) = exp(-i*theta*Y/2), RZ(phi) = exp(-i*phi*Z/2).
// Gates preserve the norm; normalization is checked by callers and tests,
// never silently restored.
class Statevector {
public:
    explicit Statevector(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amplitudes_.size(); }
    const std::vector<std::complex<double>>& amplitudes() const { return amplitudes_; }
    std::complex<double> amplitude(std::size_t basis) const { return amplitudes_.at(basis); }

    double squared_norm() const;

    Statevector& apply(const Gate& gate);
    Statevector& apply_all(std::span<const Gate> gates);

private:
    void apply_single_qubit(int qubit, const std::complex<double> unitary[4]);
    void apply_cnot(int control, int target);

    int n_qubits_;
    std::vector<std::complex<double>> amplitudes_;
};

MeasurementDistribution exact_distribution(const Statevector& state);

// Empirical frequencies from `shots` independent draws. Deterministic given
// the seed (or the state of a caller-owned stream).
MeasurementDistribution sample_distribution(const Statevector& state, std::uint64_t shots,
                                            std::uint64_t seed);
MeasurementDistribution sample_distribution(const Statevector& state, std::uint64_t shots,
                                            Rng& rng);

// Z^(x)n parity expectation: sum_z (-1)^w(z) p_z, in [-1, 1].
double parity_expectation(const MeasurementDistribution& dist);

}  // namespace qgrid
