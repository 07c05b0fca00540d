#include "nonherm/matrix_exp.hpp"

#include <gtest/gtest.h>

#include "nonherm/rng.hpp"

#include <complex>

using namespace nonherm;
using Eigen::MatrixXcd;

namespace {

// Independent oracle: Taylor series with crude 2^k argument halving, then
// repeated squaring. Slow but has no code in common with the Pade path.
MatrixXcd expm_series(const MatrixXcd& a) {
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int halvings = 0;
    double scaled = norm;
    while (scaled > 0.5) {
        scaled /= 2.0;
        ++halvings;
    }
    const MatrixXcd x = a / std::ldexp(1.0, halvings);
    MatrixXcd term = MatrixXcd::Identity(a.rows(), a.cols());
    MatrixXcd sum = term;
    for (int k = 1; k <= 40; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < halvings; ++i) sum = sum * sum;
    return sum;
}

MatrixXcd random_matrix(int dim, double scale, RngStream& rng) {
    MatrixXcd m(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
            m(r, c) = std::complex<double>(2 * rng.uniform() - 1, 2 * rng.uniform() - 1) * scale;
    return m;
}

} // namespace

TEST(MatrixExp, ZeroGivesIdentity) {
    const MatrixXcd e = matrix_exponential(MatrixXcd::Zero(3, 3));
    EXPECT_LT((e - MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MatrixExp, NilpotentJordanBlock) {
    // exp([[0,1],[0,0]]) = I + N exactly
    MatrixXcd n(2, 2);
    n << 0, 1, 0, 0;
    const MatrixXcd e = matrix_exponential(n);
    MatrixXcd expected(2, 2);
    expected << 1, 1, 0, 1;
    EXPECT_LT((e - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MatrixExp, DiagonalCase) {
    MatrixXcd d = MatrixXcd::Zero(2, 2);
    d(0, 0) = std::complex<double>(0.0, -2.0);
    d(1, 1) = std::complex<double>(-1.0, 0.5);
    const MatrixXcd e = matrix_exponential(d);
    EXPECT_LT(std::abs(e(0, 0) - std::exp(d(0, 0))), 1e-14);
    EXPECT_LT(std::abs(e(1, 1) - std::exp(d(1, 1))), 1e-14);
    EXPECT_LT(std::abs(e(0, 1)) + std::abs(e(1, 0)), 1e-15);
}

TEST(MatrixExp, MatchesSeriesOracleOnRandomMatrices) {
    RngStream rng(97);
    for (int dim : {1, 2, 4, 8}) {
        for (double scale : {0.1, 1.0, 10.0}) {
            for (int rep = 0; rep < 5; ++rep) {
                const MatrixXcd a = random_matrix(dim, scale, rng);
                const MatrixXcd pade = matrix_exponential(a);
                const MatrixXcd series = expm_series(a);
                const double ref = series.cwiseAbs().maxCoeff();
                EXPECT_LT((pade - series).cwiseAbs().maxCoeff(), 1e-11 * std::max(1.0, ref))
                    << "dim=" << dim << " scale=" << scale;
            }
        }
    }
}

TEST(MatrixExp, DefectiveEpMatrixStable) {
    // H_eff at the exceptional point (theta = gamma) is non-diagonalizable;
    // the exponential must still match the series oracle.
    const double theta = 0.1;
    MatrixXcd h(2, 2);
    h << 0.0, theta / 2, theta / 2, std::complex<double>(0, -theta);
    for (double t : {1.0, 10.0, 100.0, 1000.0}) {
        const MatrixXcd a = std::complex<double>(0, -t) * h;
        const MatrixXcd pade = matrix_exponential(a);
        const MatrixXcd series = expm_series(a);
        EXPECT_LT((pade - series).cwiseAbs().maxCoeff(), 1e-11) << "t=" << t;
    }
}
