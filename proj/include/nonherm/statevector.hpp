// statevector.hpp
// Minimal dense statevector engine: basis states, 1/2-qubit gates, measurement
// and post-selection with exact probabilities.
//
// Basis indexing is little-endian throughout: qubit 0 is the least-significant
// bit of the amplitude index.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonherm/errors.hpp"
#include "nonherm/rng.hpp"

namespace nonherm {

using cplx = std::complex<double>;

struct StateVector {
    int num_qubits = 0;
    std::vector<cplx> amps;

    std::size_t dim() const { return amps.size(); }

    double norm_squared() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }

    void renormalize() {
        const double n2 = norm_squared();
        if (n2 <= 0.0) throw invalid_state_error("cannot renormalize a zero-norm state");
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& a : amps) a *= inv;
    }
};

inline StateVector new_basis_state(int num_qubits, std::size_t basis_index) {
    if (num_qubits < 1) throw std::invalid_argument("num_qubits must be >= 1");
    const std::size_t dim = std::size_t{1} << num_qubits;
    if (basis_index >= dim) {
        throw std::out_of_range("basis_index " + std::to_string(basis_index) +
                                " out of range for " + std::to_string(num_qubits) + " qubits");
    }
    StateVector psi;
    psi.num_qubits = num_qubits;
    psi.amps.assign(dim, cplx{0.0, 0.0});
    psi.amps[basis_index] = cplx{1.0, 0.0};
    return psi;
}

// ---------------------------------------------------------------------------
// Gates

class GateSpec {
public:
    enum class Kind { Rx, CRx, H, Generic };

    // R_x(theta) = exp(-i theta sigma_x / 2) on `target`.
    static GateSpec rx(double angle, int target) {
        GateSpec g;
        g.kind_ = Kind::Rx;
        g.angle_ = angle;
        g.targets_ = {target};
        return g;
    }

    // Controlled R_x(angle): applies R_x on `target` when `control` is |1>.
    static GateSpec crx(double angle, int control, int target) {
        if (control == target) throw std::invalid_argument("control and target must be distinct");
        GateSpec g;
        g.kind_ = Kind::CRx;
        g.angle_ = angle;
        g.targets_ = {control, target};
        return g;
    }

    static GateSpec h(int target) {
        GateSpec g;
        g.kind_ = Kind::H;
        g.targets_ = {target};
        return g;
    }

    // Arbitrary k-qubit unitary; `matrix` is row-major with dimension 2^k and
    // gate-local bit j addressed by targets[j]. Must be unitary within 1e-10.
    static GateSpec generic(std::vector<cplx> matrix, std::vector<int> targets) {
        const std::size_t dim = std::size_t{1} << targets.size();
        if (targets.empty() || matrix.size() != dim * dim) {
            throw validation_error("generic gate matrix dimension does not match target count",
                                   {"matrix"});
        }
        for (std::size_t i = 0; i < targets.size(); ++i) {
            for (std::size_t j = i + 1; j < targets.size(); ++j) {
                if (targets[i] == targets[j]) {
                    throw validation_error("generic gate target qubits must be distinct",
                                           {"targets"});
                }
            }
        }
        // U^dag U = I within 1e-10
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                cplx s{0.0, 0.0};
                for (std::size_t k = 0; k < dim; ++k) {
                    s += std::conj(matrix[k * dim + i]) * matrix[k * dim + j];
                }
                const cplx expect = (i == j) ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
                if (std::abs(s - expect) > 1e-10) {
                    throw validation_error("generic gate matrix is not unitary", {"matrix"});
                }
            }
        }
        GateSpec g;
        g.kind_ = Kind::Generic;
        g.targets_ = std::move(targets);
        g.matrix_ = std::move(matrix);
        return g;
    }

    GateSpec adjoint() const {
        switch (kind_) {
            case Kind::Rx: return rx(-angle_, targets_[0]);
            case Kind::CRx: return crx(-angle_, targets_[0], targets_[1]);
            case Kind::H: return *this;
            case Kind::Generic: {
                const std::size_t dim = std::size_t{1} << targets_.size();
                std::vector<cplx> adj(dim * dim);
                for (std::size_t i = 0; i < dim; ++i)
                    for (std::size_t j = 0; j < dim; ++j) adj[j * dim + i] = std::conj(matrix_[i * dim + j]);
                return generic(std::move(adj), targets_);
            }
        }
        throw std::logic_error("unreachable");
    }

    Kind kind() const { return kind_; }
    double angle() const { return angle_; }
    const std::vector<int>& targets() const { return targets_; }
    const std::vector<cplx>& matrix() const { return matrix_; }

private:
    GateSpec() = default;
    Kind kind_ = Kind::Rx;
    double angle_ = 0.0;
    std::vector<int> targets_;
    std::vector<cplx> matrix_;
};

namespace detail {

inline void check_qubit(const StateVector& psi, int qubit) {
    if (qubit < 0 || qubit >= psi.num_qubits) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range");
    }
}

// In-place 2x2 update over the stride pattern of `target`.
inline void apply_1q(StateVector& psi, int target, cplx u00, cplx u01, cplx u10, cplx u11) {
    const std::size_t n = psi.dim();
    const std::size_t step = std::size_t{1} << target;
    const std::size_t block = step << 1;
    for (std::size_t base = 0; base < n; base += block) {
        for (std::size_t off = 0; off < step; ++off) {
            const std::size_t i0 = base + off;
            const std::size_t i1 = i0 + step;
            const cplx a = psi.amps[i0], b = psi.amps[i1];
            psi.amps[i0] = u00 * a + u01 * b;
            psi.amps[i1] = u10 * a + u11 * b;
        }
    }
}

// Same 2x2 update restricted to indices where `control` is |1>.
inline void apply_controlled_1q(StateVector& psi, int control, int target,
                                cplx u00, cplx u01, cplx u10, cplx u11) {
    const std::size_t n = psi.dim();
    const std::size_t step = std::size_t{1} << target;
    const std::size_t block = step << 1;
    const std::size_t cbit = std::size_t{1} << control;
    for (std::size_t base = 0; base < n; base += block) {
        for (std::size_t off = 0; off < step; ++off) {
            const std::size_t i0 = base + off;
            if (!(i0 & cbit)) continue;
            const std::size_t i1 = i0 + step;
            const cplx a = psi.amps[i0], b = psi.amps[i1];
            psi.amps[i0] = u00 * a + u01 * b;
            psi.amps[i1] = u10 * a + u11 * b;
        }
    }
}

inline void apply_dense(StateVector& psi, const std::vector<int>& targets,
                        const std::vector<cplx>& matrix) {
    const std::size_t k = targets.size();
    const std::size_t gdim = std::size_t{1} << k;
    std::size_t mask = 0;
    for (int t : targets) mask |= std::size_t{1} << t;

    std::vector<std::size_t> offsets(gdim);
    for (std::size_t g = 0; g < gdim; ++g) {
        std::size_t off = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (g & (std::size_t{1} << j)) off |= std::size_t{1} << targets[j];
        }
        offsets[g] = off;
    }

    std::vector<cplx> in(gdim), out(gdim);
    const std::size_t n = psi.dim();
    for (std::size_t base = 0; base < n; ++base) {
        if (base & mask) continue;
        for (std::size_t g = 0; g < gdim; ++g) in[g] = psi.amps[base + offsets[g]];
        for (std::size_t r = 0; r < gdim; ++r) {
            cplx s{0.0, 0.0};
            for (std::size_t c = 0; c < gdim; ++c) s += matrix[r * gdim + c] * in[c];
            out[r] = s;
        }
        for (std::size_t g = 0; g < gdim; ++g) psi.amps[base + offsets[g]] = out[g];
    }
}

} // namespace detail

inline void apply_gate(StateVector& psi, const GateSpec& gate) {
    for (int t : gate.targets()) detail::check_qubit(psi, t);
    switch (gate.kind()) {
        case GateSpec::Kind::Rx: {
            const double c = std::cos(gate.angle() / 2.0);
            const double s = std::sin(gate.angle() / 2.0);
            detail::apply_1q(psi, gate.targets()[0], {c, 0.0}, {0.0, -s}, {0.0, -s}, {c, 0.0});
            break;
        }
        case GateSpec::Kind::CRx: {
            const double c = std::cos(gate.angle() / 2.0);
            const double s = std::sin(gate.angle() / 2.0);
            detail::apply_controlled_1q(psi, gate.targets()[0], gate.targets()[1],
                                        {c, 0.0}, {0.0, -s}, {0.0, -s}, {c, 0.0});
            break;
        }
        case GateSpec::Kind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            detail::apply_1q(psi, gate.targets()[0], {r, 0.0}, {r, 0.0}, {r, 0.0}, {-r, 0.0});
            break;
        }
        case GateSpec::Kind::Generic:
            detail::apply_dense(psi, gate.targets(), gate.matrix());
            break;
    }
}

// ---------------------------------------------------------------------------
// Measurement and post-selection

// Probability of reading `outcome` on `qubit`, relative to the state's norm.
inline double outcome_probability(const StateVector& psi, int qubit, int outcome) {
    detail::check_qubit(psi, qubit);
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
    const std::size_t bit = std::size_t{1} << qubit;
    double match = 0.0, total = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        const double p = std::norm(psi.amps[i]);
        total += p;
        if (((i & bit) != 0) == (outcome == 1)) match += p;
    }
    if (total <= 0.0) throw invalid_state_error("zero-norm state has no outcome probabilities");
    return match / total;
}

namespace detail {

// Zero the non-matching half and renormalize the kept one. `kept_mass` is the
// absolute squared norm of the kept amplitudes.
inline void collapse(StateVector& psi, int qubit, int outcome, double kept_mass) {
    const std::size_t bit = std::size_t{1} << qubit;
    const double inv = 1.0 / std::sqrt(kept_mass);
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        if (((i & bit) != 0) == (outcome == 1)) {
            psi.amps[i] *= inv;
        } else {
            psi.amps[i] = cplx{0.0, 0.0};
        }
    }
}

} // namespace detail

// Collapses onto `outcome` and renormalizes; returns the pre-collapse
// probability of that outcome (recorded separately, since the post-selected
// dynamics needs both views).
inline double postselect(StateVector& psi, int qubit, int outcome) {
    const double prob = outcome_probability(psi, qubit, outcome);
    if (prob <= 1e-15) {
        throw impossible_outcome_error("outcome " + std::to_string(outcome) + " on qubit " +
                                       std::to_string(qubit) + " has zero probability");
    }
    const std::size_t bit = std::size_t{1} << qubit;
    double mass = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        if (((i & bit) != 0) == (outcome == 1)) mass += std::norm(psi.amps[i]);
    }
    detail::collapse(psi, qubit, outcome, mass);
    return prob;
}

// Born-rule measurement; collapse is identical to postselect for the same outcome.
inline int measure(StateVector& psi, int qubit, RngStream& rng) {
    const double p0 = outcome_probability(psi, qubit, 0);
    const int outcome = (rng.uniform() < p0) ? 0 : 1;
    const std::size_t bit = std::size_t{1} << qubit;
    double mass = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        if (((i & bit) != 0) == (outcome == 1)) mass += std::norm(psi.amps[i]);
    }
    detail::collapse(psi, qubit, outcome, mass);
    return outcome;
}

// <sigma_z> on `qubit`: +1 weight for bit 0, -1 for bit 1, over the
// renormalized state.
inline double expectation_sigma_z(const StateVector& psi, int qubit) {
    detail::check_qubit(psi, qubit);
    const std::size_t bit = std::size_t{1} << qubit;
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        const double p = std::norm(psi.amps[i]);
        if (i & bit) {
            minus += p;
        } else {
            plus += p;
        }
    }
    const double total = plus + minus;
    if (total <= 0.0) throw invalid_state_error("zero-norm state has no sigma_z expectation");
    return (plus - minus) / total;
}

inline cplx inner_product(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch in inner_product");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amps[i]) * b.amps[i];
    return s;
}

} // namespace nonherm
