#include "nonherm/spectral.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "nonherm/engine.hpp"
#include "nonherm/rng.hpp"

using namespace nonherm;

namespace {

// Best-pairing multiset distance: min over permutations of the max pairwise
// distance. Lexicographic sorting is unstable when real parts tie to rounding.
double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
    EXPECT_EQ(a.size(), b.size());
    std::vector<std::size_t> idx(a.size());
    std::iota(idx.begin(), idx.end(), 0u);
    double best = std::numeric_limits<double>::infinity();
    std::sort(idx.begin(), idx.end());
    do {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max(worst, std::abs(a[i] - b[idx[i]]));
        }
        best = std::min(best, worst);
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

} // namespace

TEST(Eigensystem2Level, HermitianLimit) {
    const auto r = eigensystem_2level(1.0, 0.0);
    EXPECT_NEAR(std::abs(r.eigenvalues[0] - cplx{0.5, 0.0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.eigenvalues[1] - cplx{-0.5, 0.0}), 0.0, 1e-14);
    EXPECT_EQ(r.regime, Regime::OSCILLATORY);
    EXPECT_FALSE(r.defective);
    // v_+- = (|0> +- |1>)/sqrt2 up to phase
    Eigen::Vector2cd plus, minus;
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    minus << -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(plus.dot(r.eigenvectors.col(0))), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(minus.dot(r.eigenvectors.col(1))), 1.0, 1e-12);
}

TEST(Eigensystem2Level, CoalescenceAtEp) {
    const auto r = eigensystem_2level(0.1, 0.1);
    EXPECT_EQ(r.regime, Regime::EP);
    EXPECT_TRUE(r.defective);
    EXPECT_NEAR(std::abs(r.eigenvalues[0] - r.eigenvalues[1]), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.eigenvalues[0] - cplx{0.0, -0.05}), 0.0, 1e-14);
    const cplx overlap = r.eigenvectors.col(0).dot(r.eigenvectors.col(1));
    EXPECT_NEAR(std::abs(overlap), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(r.alpha, 0.0);
}

TEST(Eigensystem2Level, OverdampedClosedForm) {
    // theta = 0.6, gamma = 1: sqrt(0.36 - 1) = 0.8i -> lambda = -0.1i, -0.9i
    const auto r = eigensystem_2level(0.6, 1.0);
    EXPECT_NEAR(std::abs(r.eigenvalues[0] - cplx{0.0, -0.1}), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(r.eigenvalues[1] - cplx{0.0, -0.9}), 0.0, 1e-12);
    EXPECT_EQ(r.regime, Regime::PT_BROKEN_OVERDAMPED);
    EXPECT_NEAR(r.alpha, std::acosh(1.0 / 0.6), 1e-14);
    // overdamped recast: v_+- = [i e^{+-alpha}, 1] / N
    const cplx x_plus = r.eigenvectors(0, 0) / r.eigenvectors(1, 0);
    EXPECT_NEAR(std::abs(x_plus - cplx{0.0, std::exp(r.alpha)}), 0.0, 1e-12);
}

TEST(Eigensystem2Level, DegenerateDiagonalCases) {
    const auto zero = eigensystem_2level(0.0, 0.0);
    EXPECT_TRUE(zero.zero_hamiltonian);
    EXPECT_NEAR(std::abs(zero.eigenvalues[0]) + std::abs(zero.eigenvalues[1]), 0.0, 1e-15);

    const auto decay = eigensystem_2level(0.0, 0.3);
    EXPECT_FALSE(decay.zero_hamiltonian);
    EXPECT_NEAR(std::abs(decay.eigenvalues[0]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(decay.eigenvalues[1] - cplx{0.0, -0.3}), 0.0, 1e-15);
    EXPECT_TRUE(std::isinf(decay.alpha));

    EXPECT_THROW(eigensystem_2level(-0.1, 0.0), std::invalid_argument);
}

// Property: (lambda, v) pairs satisfy the eigenvalue equation with small
// residual away from the EP, and eigenvalues never gain a positive imaginary
// part.
TEST(Eigensystem2Level, ResidualAndDecayOnlySpectrum) {
    RngStream rng(71);
    for (int rep = 0; rep < 200; ++rep) {
        const double theta = 0.01 + rng.uniform();
        const double gamma = 2.0 * theta * rng.uniform();
        if (std::abs(gamma - theta) <= 1e-3 * theta) continue;
        const auto r = eigensystem_2level(theta, gamma);
        const auto h = effective_hamiltonian(UnitSpec(theta, std::sqrt(8.0 * gamma))).matrix;
        const double hnorm = h.cwiseAbs().maxCoeff();
        for (int k = 0; k < 2; ++k) {
            const Eigen::Vector2cd v = r.eigenvectors.col(k);
            const double residual = (h * v - r.eigenvalues[static_cast<std::size_t>(k)] * v).norm();
            ASSERT_LE(residual, 1e-10 * hnorm) << "theta=" << theta << " gamma=" << gamma;
            ASSERT_LE(r.eigenvalues[static_cast<std::size_t>(k)].imag(), 1e-12);
        }
    }
}

// Property: approaching the EP from either side, both the eigenvalue gap and
// the eigenvector angle shrink monotonically.
TEST(Eigensystem2Level, MonotoneCoalescence) {
    const double theta = 0.1;
    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_angle = std::numeric_limits<double>::infinity();
    for (double eps : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001}) {
        const auto r = eigensystem_2level(theta, theta * (1.0 + eps));
        const double gap = std::abs(r.eigenvalues[0] - r.eigenvalues[1]);
        const double angle = 1.0 - std::abs(r.eigenvectors.col(0).dot(r.eigenvectors.col(1)));
        EXPECT_LT(gap, prev_gap);
        EXPECT_LT(angle, prev_angle);
        prev_gap = gap;
        prev_angle = angle;
    }
}

TEST(EigenvaluesDense, DiagonalMatrix) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
    d(1, 1) = cplx{0.0, -1.0};
    d(2, 2) = cplx{0.0, -1.0};
    d(3, 3) = cplx{0.0, -2.0};
    const auto eigs = eigenvalues_dense(d);
    EXPECT_LT(multiset_distance(eigs, {cplx{0, 0}, {0, -1}, {0, -1}, {0, -2}}), 1e-14);
}

TEST(EigenvaluesDense, MatchesClosedFormTwoLevel) {
    const auto closed = eigensystem_2level(0.6, 1.0);
    const auto h = effective_hamiltonian(UnitSpec(0.6, std::sqrt(8.0))).matrix;
    const auto dense = eigenvalues_dense(h);
    EXPECT_LT(multiset_distance(dense, closed.eigenvalues), 1e-10);
}

TEST(EigenvaluesDense, DefectiveJordanBlock) {
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(2, 2);
    n(0, 1) = 1.0;
    const auto eigs = eigenvalues_dense(n);
    EXPECT_LT(std::abs(eigs[0]), 1e-12);
    EXPECT_LT(std::abs(eigs[1]), 1e-12);
}

TEST(EigenvaluesDense, InputValidation) {
    EXPECT_THROW(eigenvalues_dense(Eigen::MatrixXcd::Zero(2, 3)), std::invalid_argument);
    EXPECT_THROW(eigenvalues_dense(Eigen::MatrixXcd::Zero(65, 65)), std::invalid_argument);
}

TEST(TwoQubit, FourthOrderCoalescence) {
    const long double s = 0.353553390593273762200422181052424520L; // 1/(2 sqrt 2)
    const auto e = two_qubit_eigenenergies({s, s, 1.0L});
    for (const auto& v : e) EXPECT_LT(std::abs(v - cplx{0.0, -1.0}), 1e-8);
}

TEST(TwoQubit, FreeDecayLimit) {
    const auto e = two_qubit_eigenenergies({0.0, 0.0, 1.0});
    EXPECT_LT(multiset_distance({e.begin(), e.end()}, {cplx{0, 0}, {0, -1}, {0, -1}, {0, -2}}),
              1e-12);
}

TEST(TwoQubit, ClosedFormMatchesDenseOracle) {
    const auto check = [](double a, double b, double gamma, double tol) {
        const auto closed = two_qubit_eigenenergies({a, b, gamma});
        const auto h = multiqubit_effective_hamiltonian(two_qubit_hamiltonian(a, b), gamma, 2);
        const auto dense = eigenvalues_dense(h.matrix);
        EXPECT_LT(multiset_distance({closed.begin(), closed.end()}, dense), tol)
            << "a=" << a << " b=" << b << " gamma=" << gamma;
    };
    check(0.5, 0.25, 1.0, 1e-9);
    RngStream rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        check(0.8 * rng.uniform(), 0.8 * rng.uniform(), 0.5 + 1.5 * rng.uniform(), 1e-9);
    }
}

TEST(TwoQubit, HamiltonianIsHermitian) {
    const auto h = two_qubit_hamiltonian(0.37, 0.21);
    EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(two_qubit_eigenenergies({0.1, 0.1, 0.0}), std::invalid_argument);
}

TEST(FindEp, SingleQubitFamily) {
    const double theta = 0.1;
    const auto family = [theta](double gamma) {
        return effective_hamiltonian(UnitSpec(theta, std::sqrt(8.0 * gamma))).matrix;
    };
    const double ep = find_ep(family, 0.05, 0.2, 1e-5);
    EXPECT_NEAR(ep, 0.1, 1e-6);
}

TEST(FindEp, TwoQubitDiagonalFamily) {
    const auto family = [](double s) {
        return multiqubit_effective_hamiltonian(two_qubit_hamiltonian(s, s), 1.0, 2).matrix;
    };
    const double ep = find_ep(family, 0.2, 0.5, 1e-4);
    EXPECT_NEAR(ep, 1.0 / (2.0 * std::sqrt(2.0)), 1e-5);
}

TEST(FindEp, HermitianFamilyHasNone) {
    const auto family = [](double theta) {
        return effective_hamiltonian(UnitSpec(theta, 0.0)).matrix;
    };
    EXPECT_THROW(find_ep(family, 0.1, 1.0, 1e-3), not_found_error);
}

TEST(StationaryMz, ClosedFormAndEigenvectorAgree) {
    const double theta = 0.1, gamma = 0.2;
    const double closed = stationary_mz(theta, gamma);
    EXPECT_NEAR(closed, std::sqrt(3.0) / 2.0, 1e-12);
    // cross-check against <v_+|sigma_z|v_+> from the eigensystem
    const auto r = eigensystem_2level(theta, gamma);
    const Eigen::Vector2cd v = r.eigenvectors.col(0);
    const double mz = std::norm(v(0)) - std::norm(v(1));
    EXPECT_NEAR(closed, mz, 1e-12);
}

TEST(StationaryMz, LimitsAndRegime) {
    const double theta = 0.1;
    EXPECT_LT(stationary_mz(theta, theta * (1.0 + 1e-6)), 2e-3); // continuous at the EP
    EXPECT_NEAR(stationary_mz(theta, theta * 1e7), 1.0, 1e-9);   // pure-decay limit
    EXPECT_THROW(stationary_mz(0.1, 0.1), regime_error);
    EXPECT_THROW(stationary_mz(0.1, 0.05), regime_error);
}

TEST(MzOscillation, RabiLimit) {
    const double theta = 0.7;
    for (double t : {0.0, 1.0, 3.7, 12.0}) {
        EXPECT_NEAR(mz_oscillation(theta, 0.0, t, InitialState::Zero), std::cos(theta * t), 1e-12);
    }
    EXPECT_NEAR(mz_oscillation(0.5, 0.2, 0.0, InitialState::Zero), 1.0, 1e-14);
    EXPECT_THROW(mz_oscillation(0.1, 0.1, 1.0, InitialState::Zero), regime_error);
    EXPECT_THROW(mz_oscillation(0.1, 0.2, 1.0, InitialState::Mixed), regime_error);
}

TEST(MzOscillation, MatchesEffectiveEvolution) {
    for (double ratio : {0.1, 0.5, 0.9}) {
        const double theta = 1.0, gamma = ratio;
        const auto h = effective_hamiltonian(UnitSpec(theta, std::sqrt(8.0 * gamma)));
        for (double t = 0.0; t <= 20.0; t += 0.5) {
            for (auto [init, which] : {std::pair{0, InitialState::Zero}, {1, InitialState::One}}) {
                auto res = evolve_effective(h, new_basis_state(1, init), t);
                res.unnormalized.renormalize();
                const double mz = expectation_sigma_z(res.unnormalized, 0);
                ASSERT_NEAR(mz, mz_oscillation(theta, gamma, t, which), 1e-8)
                    << "ratio=" << ratio << " t=" << t;
            }
        }
    }
}

TEST(MzOscillation, LongTimeMixedEnvelope) {
    // theta >> gamma: M_z(t) ~ (1/2) sin(2 alpha) sin(theta t); the mixed value
    // stays inside that envelope and averages to ~0 over a window.
    const double gamma = 0.00125, theta = 10.0 * gamma;
    const double alpha = std::asin(gamma / theta);
    // leading order only, so allow a 1.5x margin on the amplitude
    const double envelope = 1.5 * 0.5 * std::sin(2.0 * alpha);
    double acc = 0.0;
    int count = 0;
    for (double t = 2000.0; t <= 4000.0; t += 10.0) {
        const double mz = mz_oscillation(theta, gamma, t, InitialState::Mixed);
        EXPECT_LE(std::abs(mz), envelope);
        acc += mz;
        ++count;
    }
    EXPECT_LE(std::abs(acc / count), 0.05);
}

// Property: every effective Hamiltonian has a decay-only spectrum.
TEST(Spectra, NoEigenvalueGainsAmplitude) {
    RngStream rng(444);
    for (int rep = 0; rep < 50; ++rep) {
        const double a = 0.8 * rng.uniform(), b = 0.8 * rng.uniform();
        const double gamma = 0.2 + 1.8 * rng.uniform();
        const auto h = multiqubit_effective_hamiltonian(two_qubit_hamiltonian(a, b), gamma, 2);
        for (const auto& e : eigenvalues_dense(h.matrix)) {
            ASSERT_LE(e.imag(), 1e-12);
        }
    }
}

// Property: overdamped evolution relaxes any non-orthogonal initial state onto
// v_+, so the late-time expectation matches the stationary closed form.
TEST(StationaryMz, EvolveRelaxesToStationaryValue) {
    const double theta = 0.1, gamma = 0.2;
    const auto h = effective_hamiltonian(UnitSpec(theta, std::sqrt(8.0 * gamma)));
    const double target = stationary_mz(theta, gamma);
    for (std::size_t init : {0u, 1u}) {
        auto res = evolve_effective(h, new_basis_state(1, init), 250.0);
        res.unnormalized.renormalize();
        EXPECT_NEAR(expectation_sigma_z(res.unnormalized, 0), target, 1e-6) << "init=" << init;
    }
    StateVector tilted;
    tilted.num_qubits = 1;
    tilted.amps = {cplx{0.3, -0.4}, cplx{0.7, 0.2}};
    tilted.renormalize();
    auto res = evolve_effective(h, tilted, 250.0);
    res.unnormalized.renormalize();
    EXPECT_NEAR(expectation_sigma_z(res.unnormalized, 0), target, 1e-6);
}

TEST(GapMetrics, ClusterCollapse) {
    // Two exactly degenerate values must not hide the remaining splitting.
    const std::vector<cplx> eigs = {{0, -1}, {0, -1}, {0.5, -1}, {-0.5, -1}};
    EXPECT_DOUBLE_EQ(min_pairwise_gap(eigs), 0.0);
    EXPECT_DOUBLE_EQ(distinct_eigenvalue_gap(eigs, 1e-9), 0.5);
    EXPECT_DOUBLE_EQ(distinct_eigenvalue_gap({{0, -1}, {0, -1}}, 1e-9), 0.0);
}
