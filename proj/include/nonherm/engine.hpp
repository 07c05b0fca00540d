// engine.hpp
// The non-Hermitian cycle: Rx(theta) on the system, controlled Rx(phi) onto a
// |0> ancilla, ancilla readout, keep-if-0. Deterministic post-selection and
// repeat-until-success sampling, plus the effective Hamiltonian it realizes,
//   H_eff = theta/2 sigma_x + i Gamma/2 (sigma_z - 1),   Gamma = phi^2/8.
//
// A single ancilla is reused across cycles: post-selection on |0> leaves it
// disentangled in |0>, so the register never grows.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nonherm/errors.hpp"
#include "nonherm/matrix_exp.hpp"
#include "nonherm/rng.hpp"
#include "nonherm/statevector.hpp"

namespace nonherm {

struct UnitSpec {
    double theta = 0.0;
    double phi = 0.0;

    UnitSpec(double theta_, double phi_) : theta(theta_), phi(phi_) {
        if (!(phi >= 0.0)) throw std::invalid_argument("phi must be >= 0");
    }

    // Always recomputed from phi, never cached.
    double gamma() const { return phi * phi / 8.0; }

    // The effective-Hamiltonian picture needs phi << 1; beyond 0.5 treat
    // results as qualitative.
    bool within_small_phi_regime() const { return phi <= 0.5; }
};

struct EffectiveHamiltonian {
    Eigen::MatrixXcd matrix;

    int dim() const { return static_cast<int>(matrix.rows()); }

    int num_qubits() const {
        int n = 0;
        while ((1 << n) < dim()) ++n;
        return n;
    }
};

struct TrajectoryRecord {
    int cycles_completed = 0;
    long attempts = 1; // restarts counted, including the successful attempt
    double cumulative_success_probability = 1.0;
    std::vector<double> cycle_probabilities;
    StateVector final_state;
};

// ---------------------------------------------------------------------------
// Cycle execution

namespace detail {

// System qubits occupy [0, n); the ancilla is qubit n (upper half of the
// register). Gate specs are built once and reused.
struct CycleWorkspace {
    StateVector work;
    std::size_t sys_dim;
    GateSpec rx_gate;
    GateSpec crx_gate;

    CycleWorkspace(int system_qubits, const UnitSpec& unit)
        : sys_dim(std::size_t{1} << system_qubits),
          rx_gate(GateSpec::rx(unit.theta, 0)),
          crx_gate(GateSpec::crx(unit.phi, 0, system_qubits)) {
        work.num_qubits = system_qubits + 1;
        work.amps.assign(sys_dim * 2, cplx{0.0, 0.0});
    }

    void load(const StateVector& system) {
        std::copy(system.amps.begin(), system.amps.end(), work.amps.begin());
        std::fill(work.amps.begin() + static_cast<std::ptrdiff_t>(sys_dim), work.amps.end(),
                  cplx{0.0, 0.0});
    }

    // Applies the two gates; returns the probability of reading the ancilla
    // in |0>. Does not collapse.
    double advance() {
        apply_gate(work, rx_gate);
        apply_gate(work, crx_gate);
        return outcome_probability(work, work.num_qubits - 1, 0);
    }

    // Keep the ancilla-0 branch and renormalize; the ancilla ends in |0>.
    void accept() { postselect(work, work.num_qubits - 1, 0); }

    void store(StateVector& system) const {
        system.num_qubits = work.num_qubits - 1;
        system.amps.assign(work.amps.begin(),
                           work.amps.begin() + static_cast<std::ptrdiff_t>(sys_dim));
    }
};

struct NoCycleObserver {
    void operator()(int /*cycle*/, double /*p0*/) const {}
};

// Repeat-until-success core. One uniform draw per executed cycle. The fused
// single-qubit branch performs the identical circuit algebra on the two
// system amplitudes without materializing the ancilla block.
template <typename Observer>
TrajectoryRecord run_sampled_core(const StateVector& initial, const UnitSpec& unit, int n_cycles,
                                  RngStream& rng, long max_attempts, Observer&& observe) {
    if (n_cycles < 0) throw std::invalid_argument("n_cycles must be >= 0");
    if (initial.num_qubits < 1) throw std::invalid_argument("system register is empty");

    TrajectoryRecord rec;
    rec.final_state = initial;
    rec.final_state.renormalize();
    if (n_cycles == 0) {
        rec.attempts = 1;
        return rec;
    }
    const StateVector start = rec.final_state;

    if (initial.num_qubits == 1) {
        const double c = std::cos(unit.theta / 2.0);
        const double s = std::sin(unit.theta / 2.0);
        const double cphi = std::cos(unit.phi / 2.0);
        for (long attempt = 1; attempt <= max_attempts; ++attempt) {
            cplx a = start.amps[0];
            cplx b = start.amps[1];
            double cumulative = 1.0;
            bool ok = true;
            for (int k = 0; k < n_cycles; ++k) {
                const cplx ar = c * a + cplx{0.0, -s} * b;
                const cplx br = cplx{0.0, -s} * a + c * b;
                const double p0 = std::norm(ar) + cphi * cphi * std::norm(br);
                if (rng.uniform() >= p0) {
                    ok = false;
                    break;
                }
                const double inv = 1.0 / std::sqrt(p0);
                a = ar * inv;
                b = br * (cphi * inv);
                cumulative *= p0;
                observe(k, p0);
            }
            if (ok) {
                rec.cycles_completed = n_cycles;
                rec.attempts = attempt;
                rec.cumulative_success_probability = cumulative;
                rec.final_state.amps = {a, b};
                return rec;
            }
        }
    } else {
        CycleWorkspace ws(initial.num_qubits, unit);
        for (long attempt = 1; attempt <= max_attempts; ++attempt) {
            ws.load(start);
            double cumulative = 1.0;
            bool ok = true;
            for (int k = 0; k < n_cycles; ++k) {
                const double p0 = ws.advance();
                if (rng.uniform() >= p0) {
                    ok = false;
                    break;
                }
                ws.accept();
                cumulative *= p0;
                observe(k, p0);
            }
            if (ok) {
                rec.cycles_completed = n_cycles;
                rec.attempts = attempt;
                rec.cumulative_success_probability = cumulative;
                ws.store(rec.final_state);
                return rec;
            }
        }
    }
    throw exhaustion_error("no success run of " + std::to_string(n_cycles) + " cycles within " +
                           std::to_string(max_attempts) + " attempts");
}

} // namespace detail

// One deterministic post-selected cycle: returns the success probability
// p0 = 1 - |beta|^2 sin^2(phi/2) and leaves the renormalized post-selected
// system state in `system`.
inline double run_cycle_deterministic(StateVector& system, const UnitSpec& unit) {
    if (system.num_qubits < 1) throw std::invalid_argument("system register is empty");
    detail::CycleWorkspace ws(system.num_qubits, unit);
    ws.load(system);
    const double p0 = ws.advance();
    ws.accept();
    ws.store(system);
    return p0;
}

inline TrajectoryRecord run_deterministic(const StateVector& initial, const UnitSpec& unit,
                                          int n_cycles) {
    if (n_cycles < 0) throw std::invalid_argument("n_cycles must be >= 0");
    if (initial.num_qubits < 1) throw std::invalid_argument("system register is empty");
    TrajectoryRecord rec;
    rec.final_state = initial;
    rec.final_state.renormalize();
    rec.cycle_probabilities.reserve(static_cast<std::size_t>(n_cycles));
    detail::CycleWorkspace ws(initial.num_qubits, unit);
    for (int k = 0; k < n_cycles; ++k) {
        ws.load(rec.final_state);
        const double p0 = ws.advance();
        ws.accept();
        ws.store(rec.final_state);
        rec.cycle_probabilities.push_back(p0);
        rec.cumulative_success_probability *= p0;
        ++rec.cycles_completed;
    }
    return rec;
}

// Stochastic ancilla readout per cycle; outcome 1 restarts the attempt from
// `initial` until n_cycles successes happen in a row.
inline TrajectoryRecord run_sampled(const StateVector& initial, const UnitSpec& unit, int n_cycles,
                                    RngStream& rng, long max_attempts = 1'000'000) {
    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(n_cycles > 0 ? n_cycles : 0));
    auto rec = detail::run_sampled_core(initial, unit, n_cycles, rng, max_attempts,
                                        [&probs](int k, double p0) {
                                            if (k == 0) probs.clear();
                                            probs.push_back(p0);
                                        });
    rec.cycle_probabilities = std::move(probs);
    return rec;
}

struct P0Estimate {
    double mean = 0.0;
    double std_dev = 0.0;
};

// Shot-based P0 estimation: per trial, run `shots` successful n-cycle
// trajectories, measure the system qubit, and take the outcome-0 fraction;
// mean and standard deviation are across trials.
inline P0Estimate estimate_p0(const StateVector& initial, const UnitSpec& unit, int n_cycles,
                              int shots, int trials, RngStream& rng,
                              long max_attempts = 1'000'000) {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    if (trials < 2) throw std::invalid_argument("trials must be >= 2");
    std::vector<double> estimates(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        int zeros = 0;
        for (int s = 0; s < shots; ++s) {
            RngStream stream =
                rng.substream(static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(shots) +
                              static_cast<std::uint64_t>(s));
            auto rec = detail::run_sampled_core(initial, unit, n_cycles, stream, max_attempts,
                                                detail::NoCycleObserver{});
            if (measure(rec.final_state, 0, stream) == 0) ++zeros;
        }
        estimates[static_cast<std::size_t>(t)] = static_cast<double>(zeros) / shots;
    }
    P0Estimate out;
    for (double e : estimates) out.mean += e;
    out.mean /= trials;
    double ss = 0.0;
    for (double e : estimates) ss += (e - out.mean) * (e - out.mean);
    out.std_dev = std::sqrt(ss / (trials - 1));
    return out;
}

// ---------------------------------------------------------------------------
// Effective Hamiltonian

// H_eff = theta/2 sigma_x + i Gamma/2 (sigma_z - 1) = [[0, theta/2], [theta/2, -i Gamma]]
inline EffectiveHamiltonian effective_hamiltonian(const UnitSpec& unit) {
    EffectiveHamiltonian h;
    h.matrix = Eigen::MatrixXcd::Zero(2, 2);
    h.matrix(0, 1) = unit.theta / 2.0;
    h.matrix(1, 0) = unit.theta / 2.0;
    h.matrix(1, 1) = cplx{0.0, -unit.gamma()};
    return h;
}

// H + i Gamma/2 sum_i (sigma_z_i - 1): adds -i Gamma per |1> bit on the diagonal.
inline EffectiveHamiltonian multiqubit_effective_hamiltonian(const Eigen::MatrixXcd& h_hermitian,
                                                             double gamma, int num_qubits) {
    const auto dim = std::size_t{1} << num_qubits;
    if (h_hermitian.rows() != static_cast<Eigen::Index>(dim) ||
        h_hermitian.cols() != static_cast<Eigen::Index>(dim)) {
        throw validation_error("hermitian part has wrong dimension for num_qubits",
                               {"h_hermitian"});
    }
    const double herm_defect = (h_hermitian - h_hermitian.adjoint()).cwiseAbs().maxCoeff();
    if (herm_defect > 1e-10) {
        throw validation_error("input matrix is not Hermitian (defect " +
                                   std::to_string(herm_defect) + ")",
                               {"h_hermitian"});
    }
    EffectiveHamiltonian h;
    h.matrix = h_hermitian;
    for (std::size_t i = 0; i < dim; ++i) {
        int ones = 0;
        for (std::size_t b = i; b != 0; b >>= 1) ones += static_cast<int>(b & 1);
        h.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +=
            cplx{0.0, -gamma * ones};
    }
    return h;
}

struct EvolveResult {
    StateVector unnormalized;
    double survival = 1.0; // squared norm = cumulative post-selection probability
};

// exp(-i H t) |psi> by scaling-and-squaring; t is measured in circuit cycles.
inline EvolveResult evolve_effective(const EffectiveHamiltonian& h, const StateVector& initial,
                                     double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
    if (initial.dim() != static_cast<std::size_t>(h.dim())) {
        throw std::invalid_argument("state dimension does not match Hamiltonian");
    }
    const Eigen::MatrixXcd propagator = matrix_exponential(cplx{0.0, -t} * h.matrix);
    Eigen::Map<const Eigen::VectorXcd> in(initial.amps.data(),
                                          static_cast<Eigen::Index>(initial.dim()));
    const Eigen::VectorXcd out = propagator * in;
    EvolveResult res;
    res.unnormalized.num_qubits = initial.num_qubits;
    res.unnormalized.amps.assign(out.data(), out.data() + out.size());
    res.survival = out.squaredNorm();
    return res;
}

// One-cycle propagator exp(-i H), for iterating cycle-resolved traces.
inline Eigen::MatrixXcd cycle_propagator(const EffectiveHamiltonian& h) {
    return matrix_exponential(cplx{0.0, -1.0} * h.matrix);
}

} // namespace nonherm
