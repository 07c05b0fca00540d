// pauli.hpp
// Dense operators from Pauli strings, little-endian (qubit 0 = least
// significant bit, i.e. rightmost Kronecker factor).

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>
#include <vector>

namespace nonherm {

enum class Pauli { I, X, Y, Z };

inline Eigen::Matrix2cd pauli_matrix(Pauli p) {
    using namespace std::complex_literals;
    Eigen::Matrix2cd m;
    switch (p) {
        case Pauli::I: m << 1, 0, 0, 1; break;
        case Pauli::X: m << 0, 1, 1, 0; break;
        case Pauli::Y: m << 0, -1i, 1i, 0; break;
        case Pauli::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

// Product of single-qubit Paulis at the given sites, identity elsewhere.
inline Eigen::MatrixXcd pauli_string_matrix(int num_qubits,
                                            const std::vector<std::pair<int, Pauli>>& factors) {
    if (num_qubits < 1 || num_qubits > 20) throw std::invalid_argument("num_qubits out of range");
    std::vector<Pauli> site(num_qubits, Pauli::I);
    for (const auto& [qubit, op] : factors) {
        if (qubit < 0 || qubit >= num_qubits) throw std::out_of_range("pauli site out of range");
        site[qubit] = op;
    }
    Eigen::MatrixXcd result = pauli_matrix(site[0]);
    for (int q = 1; q < num_qubits; ++q) {
        const Eigen::Matrix2cd next = pauli_matrix(site[q]);
        Eigen::MatrixXcd kron(result.rows() * 2, result.cols() * 2);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) kron.block(r * result.rows(), c * result.cols(),
                                                   result.rows(), result.cols()) = next(r, c) * result;
        result.swap(kron);
    }
    return result;
}

} // namespace nonherm
