// matrix_exp.hpp
// Dense complex matrix exponential by scaling-and-squaring with Pade
// approximants (Higham, SIAM J. Matrix Anal. Applic. 26:1179-1193, 2005).
// Stable on defective matrices, which eigendecomposition is not.

#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace nonherm {

namespace detail {

using Eigen::MatrixXcd;

inline void pade3(const MatrixXcd& a, MatrixXcd& u, MatrixXcd& v) {
    static const double b[] = {120., 60., 12., 1.};
    const MatrixXcd id = MatrixXcd::Identity(a.rows(), a.cols());
    const MatrixXcd a2 = a * a;
    u = a * (b[3] * a2 + b[1] * id);
    v = b[2] * a2 + b[0] * id;
}

inline void pade5(const MatrixXcd& a, MatrixXcd& u, MatrixXcd& v) {
    static const double b[] = {30240., 15120., 3360., 420., 30., 1.};
    const MatrixXcd id = MatrixXcd::Identity(a.rows(), a.cols());
    const MatrixXcd a2 = a * a;
    const MatrixXcd a4 = a2 * a2;
    u = a * (b[5] * a4 + b[3] * a2 + b[1] * id);
    v = b[4] * a4 + b[2] * a2 + b[0] * id;
}

inline void pade7(const MatrixXcd& a, MatrixXcd& u, MatrixXcd& v) {
    static const double b[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
    const MatrixXcd id = MatrixXcd::Identity(a.rows(), a.cols());
    const MatrixXcd a2 = a * a;
    const MatrixXcd a4 = a2 * a2;
    const MatrixXcd a6 = a4 * a2;
    u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

inline void pade9(const MatrixXcd& a, MatrixXcd& u, MatrixXcd& v) {
    static const double b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                               2162160.,     110880.,     3960.,       90.,        1.};
    const MatrixXcd id = MatrixXcd::Identity(a.rows(), a.cols());
    const MatrixXcd a2 = a * a;
    const MatrixXcd a4 = a2 * a2;
    const MatrixXcd a6 = a4 * a2;
    const MatrixXcd a8 = a6 * a2;
    u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

inline void pade13(const MatrixXcd& a, MatrixXcd& u, MatrixXcd& v) {
    static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                               1187353796428800.,  129060195264000.,   10559470521600.,
                               670442572800.,      33522128640.,       1323241920.,
                               40840800.,          960960.,            16380.,
                               182.,               1.};
    const MatrixXcd id = MatrixXcd::Identity(a.rows(), a.cols());
    const MatrixXcd a2 = a * a;
    const MatrixXcd a4 = a2 * a2;
    const MatrixXcd a6 = a4 * a2;
    u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * id);
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

} // namespace detail

// e^A for a square complex matrix.
inline Eigen::MatrixXcd matrix_exponential(const Eigen::MatrixXcd& a) {
    using Eigen::MatrixXcd;
    const double l1norm = a.cwiseAbs().colwise().sum().maxCoeff();

    MatrixXcd u, v;
    int squarings = 0;
    if (l1norm < 1.495585217958292e-2) {
        detail::pade3(a, u, v);
    } else if (l1norm < 2.539398330063230e-1) {
        detail::pade5(a, u, v);
    } else if (l1norm < 9.504178996162932e-1) {
        detail::pade7(a, u, v);
    } else if (l1norm < 2.097847961257068e0) {
        detail::pade9(a, u, v);
    } else {
        const double max_norm = 5.371920351148152;
        std::frexp(l1norm / max_norm, &squarings);
        if (squarings < 0) squarings = 0;
        const MatrixXcd scaled = a * std::ldexp(1.0, -squarings);
        detail::pade13(scaled, u, v);
    }

    MatrixXcd result = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

} // namespace nonherm
