#pragma once

// Bridges between library types and the oracle representation, plus random
// test inputs.

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rotcert/circuit.hpp"
#include "rotcert/qla.hpp"
#include "rotcert/rng.hpp"

namespace support {

inline oracle::Mat to_oracle(const rotcert::ComplexMatrix &m) {
    oracle::Mat o = oracle::zeros(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            o[i][j] = m(i, j);
        }
    }
    return o;
}

inline rotcert::ComplexMatrix from_oracle(const oracle::Mat &o) {
    rotcert::ComplexMatrix m(o.size(), o[0].size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        for (std::size_t j = 0; j < o[0].size(); ++j) {
            m(i, j) = o[i][j];
        }
    }
    return m;
}

inline rotcert::ComplexMatrix random_matrix(std::size_t r, std::size_t c,
                                            rotcert::Rng &rng) {
    rotcert::ComplexMatrix m(r, c);
    for (auto &v : m.data()) {
        v = {rng.normal(), rng.normal()};
    }
    return m;
}

inline rotcert::ComplexMatrix random_hermitian(std::size_t d, rotcert::Rng &rng) {
    const auto a = random_matrix(d, d, rng);
    return (a + a.adjoint()) * rotcert::complex_t{0.5};
}

/// Random mixed state as G G^dagger / Tr, built without the library's helper.
inline rotcert::DensityMatrix random_state(std::size_t n, rotcert::Rng &rng) {
    const std::size_t d = std::size_t{1} << n;
    const auto g = random_matrix(d, d, rng);
    auto m = g * g.adjoint();
    m *= 1.0 / m.trace().real();
    for (std::size_t i = 0; i < d; ++i) {
        m(i, i) = m(i, i).real();
    }
    return rotcert::DensityMatrix(n, m);
}

/// Random circuit over every gate kind with slots shared at random.
inline rotcert::CircuitSpec random_circuit(std::size_t n, std::size_t n_ops,
                                           std::size_t n_params,
                                           rotcert::Rng &rng) {
    using rotcert::GateKind;
    using rotcert::GateOp;
    std::vector<GateOp> ops;
    const GateKind kinds[] = {GateKind::RX, GateKind::RY, GateKind::RZ,
                              GateKind::X,  GateKind::Y,  GateKind::Z,
                              GateKind::H,  GateKind::CNOT};
    while (ops.size() < n_ops) {
        const GateKind k = kinds[rng.below(8)];
        const std::size_t t = rng.below(n);
        if (k == GateKind::CNOT) {
            if (n < 2) {
                continue;
            }
            std::size_t c = rng.below(n);
            while (c == t) {
                c = rng.below(n);
            }
            ops.push_back(GateOp::cnot(c, t));
        } else if (rotcert::is_rotation(k)) {
            if (n_params > 0 && rng.uniform() < 0.7) {
                ops.push_back(GateOp::rotation(k, t, rng.below(n_params)));
            } else {
                ops.push_back(GateOp::fixed_rotation(k, t, rng.uniform(-4.0, 4.0)));
            }
        } else {
            ops.push_back(GateOp::fixed(k, t));
        }
    }
    return {n, std::move(ops), n_params};
}

/// Unitary of a circuit as a product of explicitly embedded gates.
inline oracle::Mat oracle_unitary(const rotcert::CircuitSpec &spec,
                                  const std::vector<double> &params) {
    using rotcert::GateKind;
    const std::size_t n = spec.num_qubits();
    oracle::Mat u = oracle::eye(std::size_t{1} << n);
    for (const auto &op : spec.ops()) {
        const double a = op.param_slot ? params[*op.param_slot]
                                       : op.fixed_angle.value_or(0.0);
        oracle::Mat g;
        switch (op.kind) {
        case GateKind::RX: g = oracle::embed(oracle::rx(a), op.target, n); break;
        case GateKind::RY: g = oracle::embed(oracle::ry(a), op.target, n); break;
        case GateKind::RZ: g = oracle::embed(oracle::rz(a), op.target, n); break;
        case GateKind::X: g = oracle::embed(oracle::pauli_x(), op.target, n); break;
        case GateKind::Y: g = oracle::embed(oracle::pauli_y(), op.target, n); break;
        case GateKind::Z: g = oracle::embed(oracle::pauli_z(), op.target, n); break;
        case GateKind::H: g = oracle::embed(oracle::hadamard(), op.target, n); break;
        case GateKind::CNOT: g = oracle::cnot(*op.control, op.target, n); break;
        }
        u = oracle::mul(g, u);
    }
    return u;
}

inline std::vector<double> random_params(std::size_t k, rotcert::Rng &rng) {
    std::vector<double> p(k);
    for (auto &v : p) {
        v = rng.uniform(-3.2, 3.2);
    }
    return p;
}

}  // namespace support
