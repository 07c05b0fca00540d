// spectral.hpp
// Eigensystems of the effective Hamiltonians: closed forms, a dense numerical
// oracle, exceptional-point search, and the stationary / oscillating <sigma_z>
// predictions on the two sides of the EP.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nonherm/errors.hpp"
#include "nonherm/pauli.hpp"
#include "nonherm/statevector.hpp"

namespace nonherm {

enum class Regime {
    PT_BROKEN_OVERDAMPED, // Gamma > theta: distinct decay rates, stationary M_z
    EP,                   // Gamma = theta: eigenvalues and eigenvectors coalesce
    OSCILLATORY,          // Gamma < theta: equal decay rates, M_z oscillates
};

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::PT_BROKEN_OVERDAMPED: return "PT_BROKEN_OVERDAMPED";
        case Regime::EP: return "EP";
        case Regime::OSCILLATORY: return "OSCILLATORY";
    }
    return "?";
}

struct SpectrumResult {
    std::vector<cplx> eigenvalues;     // lambda_+, lambda_-
    Eigen::MatrixXcd eigenvectors;     // normalized columns, v_+ then v_-
    Regime regime = Regime::EP;
    double alpha = 0.0;                // acosh(G/t) overdamped, asin(G/t) oscillatory, 0 at EP
    bool defective = false;            // no eigenbasis exists (exact EP)
    bool zero_hamiltonian = false;     // theta == 0 and gamma == 0
};

// Closed form for H_eff = [[0, theta/2], [theta/2, -i gamma]]:
//   lambda_+- = -i gamma/2 +- (1/2) sqrt(theta^2 - gamma^2)
//   v_+-      = [ (i gamma +- sqrt(theta^2 - gamma^2)) / theta, 1 ]^T, normalized.
// lambda_+ always carries the principal branch of the square root.
inline SpectrumResult eigensystem_2level(double theta, double gamma) {
    if (theta < 0.0 || gamma < 0.0) throw std::invalid_argument("theta and gamma must be >= 0");
    SpectrumResult out;
    out.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);

    if (theta == 0.0) {
        // Degenerate diagonal case: H = diag(0, -i gamma).
        out.zero_hamiltonian = (gamma == 0.0);
        out.eigenvalues = {cplx{0.0, 0.0}, cplx{0.0, -gamma}};
        out.regime = out.zero_hamiltonian ? Regime::EP : Regime::PT_BROKEN_OVERDAMPED;
        out.alpha = out.zero_hamiltonian ? 0.0 : std::numeric_limits<double>::infinity();
        out.defective = false;
        return out;
    }

    const cplx root = std::sqrt(cplx{theta * theta - gamma * gamma, 0.0});
    const cplx half{0.5, 0.0};
    out.eigenvalues = {half * (cplx{0.0, -gamma} + root), half * (cplx{0.0, -gamma} - root)};

    const cplx x_plus = (cplx{0.0, gamma} + root) / theta;
    const cplx x_minus = (cplx{0.0, gamma} - root) / theta;
    auto normalized = [](cplx x) {
        Eigen::Vector2cd v;
        v << x, cplx{1.0, 0.0};
        v /= v.norm();
        return v;
    };
    out.eigenvectors.col(0) = normalized(x_plus);
    out.eigenvectors.col(1) = normalized(x_minus);

    if (gamma > theta) {
        out.regime = Regime::PT_BROKEN_OVERDAMPED;
        out.alpha = std::acosh(gamma / theta);
    } else if (gamma < theta) {
        out.regime = Regime::OSCILLATORY;
        out.alpha = std::asin(gamma / theta);
    } else {
        out.regime = Regime::EP;
        out.alpha = 0.0;
    }
    if (root == cplx{0.0, 0.0}) {
        // Coalesced: report the single eigenvector twice and flag it.
        out.defective = true;
        out.eigenvectors.col(1) = out.eigenvectors.col(0);
    }
    return out;
}

// All eigenvalues of a general complex matrix via complex Schur reduction.
// No eigenvector guarantee; stable on defective inputs.
inline std::vector<cplx> eigenvalues_dense(const Eigen::MatrixXcd& matrix) {
    if (matrix.rows() != matrix.cols()) throw std::invalid_argument("matrix must be square");
    if (matrix.rows() > 64) throw std::invalid_argument("dimension larger than 64");
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(matrix, /*computeU=*/false);
    if (schur.info() != Eigen::Success) {
        throw numerical_error("Schur iteration failed to converge after " +
                              std::to_string(schur.getMaxIterations() * matrix.rows()) +
                              " sweeps");
    }
    std::vector<cplx> eigs(static_cast<std::size_t>(matrix.rows()));
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        eigs[static_cast<std::size_t>(i)] = schur.matrixT()(i, i);
    }
    return eigs;
}

// ---------------------------------------------------------------------------
// Two-qubit model (fourth-order EP)

// Extended precision on purpose: near the 4th-order EP an input error eps in
// (a, b) splits the levels by ~sqrt(eps), so double-precision inputs alone
// floor the attainable coalescence at ~1e-8.
struct TwoQubitModelSpec {
    long double a = 0.0L;
    long double b = 0.0L;
    long double gamma = 1.0L;
};

// H = a (X_0 Z_1 + Y_0 Z_1) + b (Z_0 X_1 + Z_0 Y_1)
inline Eigen::MatrixXcd two_qubit_hamiltonian(double a, double b) {
    return a * (pauli_string_matrix(2, {{0, Pauli::X}, {1, Pauli::Z}}) +
                pauli_string_matrix(2, {{0, Pauli::Y}, {1, Pauli::Z}})) +
           b * (pauli_string_matrix(2, {{0, Pauli::Z}, {1, Pauli::X}}) +
                pauli_string_matrix(2, {{0, Pauli::Z}, {1, Pauli::Y}}));
}

// Closed-form eigenenergies, stated at gamma = 1 and extended by homogeneity
// E(a, b, gamma) = gamma * E(a/gamma, b/gamma, 1):
//   E_{u,v} = (1/2) (-2i + sqrt(2) u sqrt(4(a^2+b^2) - 1 + v sqrt(8a^2-1) sqrt(8b^2-1)))
// Order: (u,v) = (+,+), (+,-), (-,+), (-,-). Principal square-root branches.
inline std::array<cplx, 4> two_qubit_eigenenergies(const TwoQubitModelSpec& spec) {
    using lcplx = std::complex<long double>;
    if (!(spec.gamma > 0.0L)) throw std::invalid_argument("gamma must be > 0");
    const long double a = spec.a / spec.gamma;
    const long double b = spec.b / spec.gamma;
    const lcplx s{4.0L * (a * a + b * b) - 1.0L, 0.0L};
    const lcplx p =
        std::sqrt(lcplx{8.0L * a * a - 1.0L, 0.0L}) * std::sqrt(lcplx{8.0L * b * b - 1.0L, 0.0L});
    std::array<cplx, 4> out;
    int idx = 0;
    for (long double u : {1.0L, -1.0L}) {
        for (long double v : {1.0L, -1.0L}) {
            const lcplx e =
                spec.gamma * 0.5L * (lcplx{0.0L, -2.0L} + std::sqrt(2.0L) * u * std::sqrt(s + v * p));
            out[static_cast<std::size_t>(idx++)] =
                cplx{static_cast<double>(e.real()), static_cast<double>(e.imag())};
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gap metrics and EP search

// Smallest distance among all eigenvalue pairs (0 when any two coincide).
inline double min_pairwise_gap(const std::vector<cplx>& eigs) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eigs.size(); ++i)
        for (std::size_t j = i + 1; j < eigs.size(); ++j)
            gap = std::min(gap, std::abs(eigs[i] - eigs[j]));
    return eigs.size() < 2 ? 0.0 : gap;
}

// Spectral diameter: vanishes only when *all* eigenvalues coalesce, which is
// what singles out a full-order EP (pairwise minima also vanish on ordinary
// two-level crossings).
inline double max_pairwise_gap(const std::vector<cplx>& eigs) {
    double gap = 0.0;
    for (std::size_t i = 0; i < eigs.size(); ++i)
        for (std::size_t j = i + 1; j < eigs.size(); ++j)
            gap = std::max(gap, std::abs(eigs[i] - eigs[j]));
    return gap;
}

// Gap between *distinct* eigenvalue clusters. Numerically coincident values
// (within cluster_eps) are merged first, so families with a permanently
// degenerate pair still expose the coalescence of the remaining levels; a
// single cluster (full coalescence) has gap 0.
inline double distinct_eigenvalue_gap(const std::vector<cplx>& eigs, double cluster_eps) {
    std::vector<cplx> centers;
    for (const auto& e : eigs) {
        bool merged = false;
        for (const auto& c : centers) {
            if (std::abs(e - c) <= cluster_eps) {
                merged = true;
                break;
            }
        }
        if (!merged) centers.push_back(e);
    }
    if (centers.size() < 2) return 0.0;
    return min_pairwise_gap(centers);
}

// Locates the parameter where the family's eigenvalue clusters coalesce, by a
// coarse scan plus golden-section refinement of the cluster gap. Throws
// not_found_error when the refined minimum stays above `tolerance`.
inline double find_ep(const std::function<Eigen::MatrixXcd(double)>& family, double lo, double hi,
                      double tolerance) {
    if (!(lo < hi)) throw std::invalid_argument("empty search interval");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");

    auto gap_at = [&family](double p) {
        const Eigen::MatrixXcd m = family(p);
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        return distinct_eigenvalue_gap(eigenvalues_dense(m), 1e-9 * scale);
    };

    const int coarse = 257;
    double best_p = lo, best_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < coarse; ++i) {
        const double p = lo + (hi - lo) * i / (coarse - 1);
        const double g = gap_at(p);
        if (g < best_gap) {
            best_gap = g;
            best_p = p;
        }
    }
    const double step = (hi - lo) / (coarse - 1);
    double a = std::max(lo, best_p - step);
    double b = std::min(hi, best_p + step);

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = gap_at(x1), f2 = gap_at(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = gap_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = gap_at(x2);
        }
    }
    const double p_star = 0.5 * (a + b);
    const double g_star = std::min({gap_at(p_star), f1, f2, best_gap});
    if (g_star >= tolerance) {
        throw not_found_error("no eigenvalue coalescence below gap " + std::to_string(tolerance) +
                              " in range (smallest gap " + std::to_string(g_star) + ")");
    }
    return p_star;
}

// ---------------------------------------------------------------------------
// M_z predictions

// Overdamped stationary value <v_+|sigma_z|v_+> = sqrt(1 - (theta/gamma)^2) = tanh(alpha).
inline double stationary_mz(double theta, double gamma) {
    if (!(gamma > theta)) {
        throw regime_error("stationary M_z requires gamma > theta (overdamped regime)");
    }
    const double r = theta / gamma;
    return std::sqrt(1.0 - r * r);
}

enum class InitialState { Zero, One, Mixed };

// Oscillatory-regime closed forms, alpha = asin(gamma/theta):
//   M_z^(0)(t) = (cos^2(x - a) - sin^2 x) / (cos^2(x - a) + sin^2 x)
//   M_z^(1)(t) = (sin^2 x - cos^2(x + a)) / (sin^2 x + cos^2(x + a))
// with x = (theta t / 2) cos(alpha); mixed is the unweighted average.
inline double mz_oscillation(double theta, double gamma, double t, InitialState initial) {
    if (!(gamma < theta)) {
        throw regime_error("oscillating M_z requires gamma < theta");
    }
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    const double alpha = std::asin(gamma / theta);
    const double x = theta * t / 2.0 * std::cos(alpha);
    auto mz0 = [&] {
        const double c = std::cos(x - alpha), s = std::sin(x);
        return (c * c - s * s) / (c * c + s * s);
    };
    auto mz1 = [&] {
        const double c = std::cos(x + alpha), s = std::sin(x);
        return (s * s - c * c) / (s * s + c * c);
    };
    switch (initial) {
        case InitialState::Zero: return mz0();
        case InitialState::One: return mz1();
        case InitialState::Mixed: return 0.5 * (mz0() + mz1());
    }
    throw std::logic_error("unreachable");
}

} // namespace nonherm
