#pragma once

// Reference implementations used only by tests. Everything here is written
// the slow, obvious way (dense matrices, exhaustive enumeration) so it shares
// no code paths with the library under test.

#include <complex>
#include <cstdint>
#include <vector>

#include "qgrid/statevector.hpp"

namespace oracle {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using CMat = std::vector<std::vector<Complex>>;

inline CMat identity(std::size_t n) {
    CMat m(n, std::vector<Complex>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
    return m;
}

inline CMat kron(const CMat& a, const CMat& b) {
    const std::size_t ar = a.size(), ac = a[0].size();
    const std::size_t br = b.size(), bc = b[0].size();
    CMat m(ar * br, std::vector<Complex>(ac * bc, 0.0));
    for (std::size_t i = 0; i < ar; ++i)
        for (std::size_t j = 0; j < ac; ++j)
            for (std::size_t p = 0; p < br; ++p)
                for (std::size_t q = 0; q < bc; ++q) m[i * br + p][j * bc + q] = a[i][j] * b[p][q];
    return m;
}

inline CMat single_qubit_matrix(const qgrid::Gate& g) {
    const Complex i(0.0, 1.0);
    switch (g.kind) {
        case qgrid::GateKind::Hadamard: {
            const double s = 1.0 / std::sqrt(2.0);
            return {{s, s}, {s, -s}};
        }
        case qgrid::GateKind::RotY: {
            const double c = std::cos(g.angle / 2.0), sn = std::sin(g.angle / 2.0);
            return {{c, -sn}, {sn, c}};
        }
        case qgrid::GateKind::RotZ: {
            return {{std::exp(-i * (g.angle / 2.0)), 0.0}, {0.0, std::exp(i * (g.angle / 2.0))}};
        }
        default:
            throw std::logic_error("not a single-qubit gate");
    }
}

// Full 2^n x 2^n unitary for one gate. Qubit 0 is the least-significant bit
// of a basis index, so the gate on qubit q sits at Kronecker slot
// I_{2^(n-1-q)} (x) U (x) I_{2^q}.
inline CMat full_unitary(const qgrid::Gate& g, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    if (g.kind == qgrid::GateKind::Cnot) {
        CMat m(dim, std::vector<Complex>(dim, 0.0));
        for (std::size_t in = 0; in < dim; ++in) {
            std::size_t out = in;
            if ((in >> g.control) & 1u) out = in ^ (std::size_t{1} << g.target);
            m[out][in] = 1.0;
        }
        return m;
    }
    CMat m = identity(std::size_t{1} << (n_qubits - 1 - g.target));
    m = kron(m, single_qubit_matrix(g));
    return kron(m, identity(std::size_t{1} << g.target));
}

inline CVec matvec(const CMat& m, const CVec& v) {
    CVec out(m.size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
    return out;
}

// Runs the circuit on |0...0> by explicit matrix products.
inline CVec run_circuit(const std::vector<qgrid::Gate>& gates, int n_qubits) {
    CVec state(std::size_t{1} << n_qubits, 0.0);
    state[0] = 1.0;
    for (const auto& g : gates) state = matvec(full_unitary(g, n_qubits), state);
    return state;
}

inline double parity_from_amplitudes(const CVec& amps) {
    double e = 0.0;
    for (std::size_t z = 0; z < amps.size(); ++z) {
        const double p = std::norm(amps[z]);
        e += (__builtin_popcountll(z) % 2 == 0) ? p : -p;
    }
    return e;
}

// Exhaustive max-sum k-subset of the in-service lines. Among equal sums the
// lexicographically smallest subset wins, matching a lowest-id tie rule.
inline std::vector<int> best_subset_by_loading(const std::vector<double>& loading,
                                               const std::vector<bool>& in_service, int size) {
    std::vector<int> pool;
    for (int i = 0; i < static_cast<int>(loading.size()); ++i)
        if (in_service[i]) pool.push_back(i);
    if (size <= 0 || pool.empty()) return {};
    if (size > static_cast<int>(pool.size())) size = static_cast<int>(pool.size());

    std::vector<int> pick(static_cast<std::size_t>(size));
    std::vector<int> best;
    double best_sum = -1.0;
    // Odometer over combinations of `pool` indices in lexicographic order;
    // strict improvement keeps the first (smallest) maximizer.
    std::vector<int> idx(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        double sum = 0.0;
        for (int i = 0; i < size; ++i) {
            pick[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            sum += loading[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
        }
        if (sum > best_sum + 1e-15) {
            best_sum = sum;
            best = pick;
        }
        int j = size - 1;
        while (j >= 0 && idx[static_cast<std::size_t>(j)] == static_cast<int>(pool.size()) - size + j) --j;
        if (j < 0) break;
        ++idx[static_cast<std::size_t>(j)];
        for (int t = j + 1; t < size; ++t)
            idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
    }
    return best;
}

}  // namespace oracle
