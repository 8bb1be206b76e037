#include "qgrid/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qgrid {

namespace {

constexpr int kMaxQubits = 24;

void check_qubit(int qubit, int n_qubits) {
    if (qubit < 0 || qubit >= n_qubits) {
        throw std::out_of_range("invalid gate: qubit index " + std::to_string(qubit) +
                                " out of range for " + std::to_string(n_qubits) + " qubits");
    }
}

}  // namespace

double MeasurementDistribution::total() const {
    return std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
}

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("statevector requires 1.." + std::to_string(kMaxQubits) +
                                    " qubits, got " + std::to_string(n_qubits));
    }
    amplitudes_.assign(std::size_t{1} << n_qubits, {0.0, 0.0});
    amplitudes_[0] = {1.0, 0.0};
}

double Statevector::squared_norm() const {
    double total = 0.0;
    for (const auto& a : amplitudes_) total += std::norm(a);
    return total;
}

void Statevector::apply_single_qubit(int qubit, const std::complex<double> u[4]) {
    const std::size_t bit = std::size_t{1} << qubit;
    const std::size_t dim = amplitudes_.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & bit) == 0) {
            const std::size_t j = i | bit;
            const auto a0 = amplitudes_[i];
            const auto a1 = amplitudes_[j];
            amplitudes_[i] = u[0] * a0 + u[1] * a1;
            amplitudes_[j] = u[2] * a0 + u[3] * a1;
        }
    }
}

void Statevector::apply_cnot(int control, int target) {
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t dim = amplitudes_.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cbit) != 0 && (i & tbit) == 0) {
            std::swap(amplitudes_[i], amplitudes_[i | tbit]);
        }
    }
}

Statevector& Statevector::apply(const Gate& gate) {
    check_qubit(gate.target, n_qubits_);
    switch (gate.kind) {
        case GateKind::Hadamard: {
            const double s = 1.0 / std::sqrt(2.0);
            const std::complex<double> u[4] = {{s, 0}, {s, 0}, {s, 0}, {-s, 0}};
            apply_single_qubit(gate.target, u);
            break;
        }
        case GateKind::RotY: {
            const double c = std::cos(gate.angle / 2.0);
            const double s = std::sin(gate.angle / 2.0);
            const std::complex<double> u[4] = {{c, 0}, {-s, 0}, {s, 0}, {c, 0}};
            apply_single_qubit(gate.target, u);
            break;
        }
        case GateKind::RotZ: {
            const double half = gate.angle / 2.0;
            const std::complex<double> u[4] = {
                {std::cos(half), -std::sin(half)}, {0, 0}, {0, 0}, {std::cos(half), std::sin(half)}};
            apply_single_qubit(gate.target, u);
            break;
        }
        case GateKind::Cnot: {
            check_qubit(gate.control, n_qubits_);
            if (gate.control == gate.target) {
                throw std::invalid_argument("invalid gate: CNOT control equals target");
            }
            apply_cnot(gate.control, gate.target);
            break;
        }
    }
    return *this;
}

Statevector& Statevector::apply_all(std::span<const Gate> gates) {
    for (const Gate& g : gates) apply(g);
    return *this;
}

MeasurementDistribution exact_distribution(const Statevector& state) {
    MeasurementDistribution dist;
    dist.n_qubits = state.n_qubits();
    dist.probabilities.resize(state.dim());
    const auto& amps = state.amplitudes();
    for (std::size_t z = 0; z < amps.size(); ++z) {
        dist.probabilities[z] = std::norm(amps[z]);
    }
    return dist;
}

MeasurementDistribution sample_distribution(const Statevector& state, std::uint64_t shots,
                                            std::uint64_t seed) {
    Rng rng(seed);
    return sample_distribution(state, shots, rng);
}

MeasurementDistribution sample_distribution(const Statevector& state, std::uint64_t shots,
                                            Rng& rng) {
    if (shots == 0) {
        throw std::invalid_argument("sample_distribution requires shots >= 1");
    }
    const MeasurementDistribution exact = exact_distribution(state);

    // Inverse-CDF draws against the cumulative exact distribution.
    std::vector<double> cdf(exact.probabilities.size());
    double acc = 0.0;
    for (std::size_t z = 0; z < cdf.size(); ++z) {
        acc += exact.probabilities[z];
        cdf[z] = acc;
    }
    cdf.back() = std::max(cdf.back(), 1.0);

    MeasurementDistribution dist;
    dist.n_qubits = state.n_qubits();
    dist.counts.assign(exact.probabilities.size(), 0);
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t z = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
        ++dist.counts[z];
    }
    dist.probabilities.resize(dist.counts.size());
    for (std::size_t z = 0; z < dist.counts.size(); ++z) {
        dist.probabilities[z] = static_cast<double>(dist.counts[z]) / static_cast<double>(shots);
    }
    return dist;
}

double parity_expectation(const MeasurementDistribution& dist) {
    if (std::abs(dist.total() - 1.0) > 1e-6) {
        throw std::invalid_argument("parity_expectation: distribution is not normalized");
    }
    double expectation = 0.0;
    for (std::size_t z = 0; z < dist.probabilities.size(); ++z) {
        const int weight = std::popcount(z);
        expectation += (weight % 2 == 0 ? 1.0 : -1.0) * dist.probabilities[z];
    }
    return expectation;
}

}  // namespace qgrid
