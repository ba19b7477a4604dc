#pragma once

// Spectral-norm and smallest-singular-value seed estimates for QDWH:
//   alpha ~ ||A||_2 by power iteration on the banded matvec,
//   l0 = ||A/alpha||_1 / (sqrt(n) * cond1(A/alpha))
// with the 1-norm condition number estimated Hager-style from banded LU
// solves.

#include <cmath>
#include <vector>

#include "specproj/banded.hpp"
#include "specproj/banded_lu.hpp"

namespace specproj {

// Power iteration with fixed all-ones start vector; stops when the estimate
// changes by less than 1% or after 100 iterations.
inline double estimate_2norm(const BandedSymmetric& A) {
    const int n = A.n;
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n);
    double est = 0.0;
    for (int it = 0; it < 100; ++it) {
        band_matvec(A, x.data(), y.data());
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) return 0.0;
        if (it > 0 && std::abs(nrm - est) < 1e-2 * nrm) return nrm;
        est = nrm;
        for (int i = 0; i < n; ++i) x[i] = y[i] / nrm;
    }
    return est;
}

namespace detail {

// Hager/Higham estimate of ||B||_1 where B is given by solve callbacks.
// At most five iterations.
template <class Solve, class SolveT>
double hager_norm1(int n, Solve&& solve, SolveT&& solve_t) {
    std::vector<double> x(n, 1.0 / n), y(n), z(n);
    double est = 0.0;
    for (int it = 0; it < 5; ++it) {
        y = x;
        solve(y);
        double e = 0.0;
        for (double v : y) e += std::abs(v);
        if (it > 0 && e <= est) break;
        est = e;
        for (int i = 0; i < n; ++i) z[i] = y[i] >= 0.0 ? 1.0 : -1.0;
        solve_t(z);
        int j = 0;
        double zmax = 0.0, ztx = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = std::abs(z[i]);
            if (a > zmax) { zmax = a; j = i; }
            ztx += z[i] * x[i];
        }
        if (zmax <= ztx) break;
        std::fill(x.begin(), x.end(), 0.0);
        x[j] = 1.0;
    }
    return est;
}

} // namespace detail

// Lower bound for sigma_min(A/alpha). Throws SingularMatrixError if the
// banded factorization breaks down.
inline double estimate_l0(const BandedSymmetric& A, double alpha) {
    const int n = A.n;
    const double n1 = norm1(A) / alpha;
    BandedLu lu(A, 1.0 / alpha);
    const double inv_norm1 = detail::hager_norm1(
        n, [&](std::vector<double>& v) { lu.solve(v); },
        [&](std::vector<double>& v) { lu.solve_transposed(v); });
    const double cond1 = n1 * inv_norm1;
    return n1 / (std::sqrt(static_cast<double>(n)) * cond1);
}

} // namespace specproj
