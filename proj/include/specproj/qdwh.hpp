#pragma once

// QDWH iterations for the matrix sign function and spectral projectors:
// dynamically weighted parameters, a dense reference implementation (QR- and
// Cholesky-based steps with the c <= 100 switching rule), and the HODLR
// driver whose first iterate goes through the structured stacked QR.

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "specproj/banded.hpp"
#include "specproj/dense.hpp"
#include "specproj/dense_factor.hpp"
#include "specproj/estimates.hpp"
#include "specproj/fast_qr.hpp"
#include "specproj/hodlr.hpp"

namespace specproj {

struct QdwhParams {
    double a, b, c;
};

// Weighting parameters a = h(l), b = (a-1)^2/4, c = a + b - 1.
inline QdwhParams qdwh_params(double l) {
    if (!(l > 0.0) || l > 1.0) throw std::domain_error("qdwh_params: l must lie in (0, 1]");
    const double l2 = l * l;
    const double gamma = std::cbrt(4.0 * (1.0 - l2) / (l2 * l2));
    const double sq = std::sqrt(1.0 + gamma);
    const double a = sq + 0.5 * std::sqrt(8.0 - 4.0 * gamma + 8.0 * (2.0 - l2) / (l2 * sq));
    const double b = 0.25 * (a - 1.0) * (a - 1.0);
    return {a, b, a + b - 1.0};
}

// Lower-bound recurrence l_{k} = l(a + b l^2)/(1 + c l^2).
inline double l_update(double l, double a, double b, double c) {
    return l * (a + b * l * l) / (1.0 + c * l * l);
}

enum class QdwhMode { one_qr, multi_qr };

struct DenseQdwhResult {
    Matrix U;
    int iterations = 0;
    double alpha = 0.0;
    double l0 = 0.0;
};

namespace qdwh_detail {

constexpr int kMaxIterations = 60;
constexpr double kCholeskySwitch = 100.0;

inline double clamp_l0(double l0) {
    if (!(l0 > 0.0)) throw std::invalid_argument("qdwh: nonpositive lower bound l0");
    return std::min(l0, 1.0 - 1e-12);
}

inline double dense_norm2_estimate(const Matrix& A) {
    const int n = A.rows();
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n);
    double est = 0.0;
    for (int it = 0; it < 100; ++it) {
        for (int i = 0; i < n; ++i) {
            const double* r = A.row(i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += r[j] * x[j];
            y[i] = s;
        }
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

inline double dense_l0_estimate(const Matrix& A, double alpha) {
    const int n = A.rows();
    double n1 = 0.0;
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::abs(A(i, j));
        n1 = std::max(n1, s / alpha);
    }
    Matrix As = A;
    scale(As, 1.0 / alpha);
    LuResult lu = lu_factor(As);
    Matrix At = transpose(As);
    LuResult lut = lu_factor(At);
    const double inv1 = detail::hager_norm1(
        n,
        [&](std::vector<double>& v) {
            Matrix rhs(n, 1);
            for (int i = 0; i < n; ++i) rhs(i, 0) = v[i];
            Matrix s = lu_solve(lu, rhs);
            for (int i = 0; i < n; ++i) v[i] = s(i, 0);
        },
        [&](std::vector<double>& v) {
            Matrix rhs(n, 1);
            for (int i = 0; i < n; ++i) rhs(i, 0) = v[i];
            Matrix s = lu_solve(lut, rhs);
            for (int i = 0; i < n; ++i) v[i] = s(i, 0);
        });
    return n1 / (std::sqrt(static_cast<double>(n)) * n1 * inv1);
}

inline void dense_symmetrize(Matrix& X) {
    for (int i = 0; i < X.rows(); ++i)
        for (int j = 0; j < i; ++j) {
            const double v = 0.5 * (X(i, j) + X(j, i));
            X(i, j) = v;
            X(j, i) = v;
        }
}

} // namespace qdwh_detail

// Dense reference QDWH with explicit starting parameters.
inline DenseQdwhResult dense_qdwh(const Matrix& A, double alpha, double l0, double delta,
                                  QdwhMode mode) {
    if (A.rows() != A.cols()) throw std::invalid_argument("dense_qdwh: square matrix expected");
    const int n = A.rows();
    Matrix X = A;
    scale(X, 1.0 / alpha);
    double l = qdwh_detail::clamp_l0(l0);
    int k = 0;
    while (std::abs(1.0 - l) > delta && k < qdwh_detail::kMaxIterations) {
        const QdwhParams p = qdwh_params(l);
        const bool qr_step =
            mode == QdwhMode::one_qr ? k == 0 : p.c > qdwh_detail::kCholeskySwitch;
        if (qr_step) {
            const double sc = std::sqrt(p.c);
            Matrix S(2 * n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) S(i, j) = sc * X(i, j);
                S(n + i, i) = 1.0;
            }
            QrResult qr = qr_factor(S);
            Matrix Q1 = qr.Q.block(0, 0, n, n);
            Matrix Q2 = qr.Q.block(n, 0, n, n);
            Matrix M = matmul_nt(Q1, Q2);
            scale(X, p.b / p.c);
            add_scaled(X, (p.a - p.b / p.c) / sc, M);
        } else {
            Matrix Z = matmul_tn(X, X);
            scale(Z, p.c);
            for (int i = 0; i < n; ++i) Z(i, i) += 1.0;
            Matrix R = cholesky_upper(Z);
            Matrix Y = solve_right_upper(R, X);
            Matrix V = solve_right_upperT(R, Y);
            scale(X, p.b / p.c);
            add_scaled(X, p.a - p.b / p.c, V);
        }
        qdwh_detail::dense_symmetrize(X);
        l = l_update(l, p.a, p.b, p.c);
        ++k;
    }
    return {std::move(X), k, alpha, l0};
}

// Dense reference QDWH; alpha and l0 are estimated like the banded driver
// does (power iteration, Hager 1-norm condition estimate).
inline DenseQdwhResult dense_qdwh(const Matrix& A, double delta, QdwhMode mode) {
    const double alpha = qdwh_detail::dense_norm2_estimate(A);
    if (alpha == 0.0) throw SingularMatrixError("dense_qdwh: zero matrix");
    const double l0 = qdwh_detail::dense_l0_estimate(A, alpha);
    return dense_qdwh(A, alpha, l0, delta, mode);
}

struct IterationDiag {
    int k = 0;
    double l = 0.0;
    double c = 0.0;
    int max_rank = 0;
    std::size_t memory_bytes = 0;
    double wall_ms = 0.0;
};

struct ProjectorResult {
    HodlrMatrix P; // spectral projector (I - U)/2
    HodlrMatrix U; // sign-function approximant
    int iterations = 0;
    double alpha = 0.0;
    double l0 = 0.0;
    std::vector<IterationDiag> per_iteration;
};

// hQDWH: one structured QR-based iterate, then Cholesky-based iterates in
// formatted arithmetic, until |1 - l_k| <= delta.
inline ProjectorResult hqdwh(const BandedSymmetric& A, int n_min, double eps, double delta) {
    using clock = std::chrono::steady_clock;
    if (!A.all_finite()) throw std::invalid_argument("hqdwh: nonfinite input");
    ProjectorResult out;
    out.alpha = estimate_2norm(A);
    if (out.alpha == 0.0) throw SingularMatrixError("hqdwh: zero matrix");
    out.l0 = estimate_l0(A, out.alpha);
    double l = qdwh_detail::clamp_l0(out.l0);

    auto tree = make_tree(A.n, n_min);
    HodlrMatrix X = from_banded(scaled(A, 1.0 / out.alpha), tree);

    int k = 0;
    while (std::abs(1.0 - l) > delta && k < qdwh_detail::kMaxIterations) {
        const auto t0 = clock::now();
        const QdwhParams p = qdwh_params(l);
        if (k == 0) {
            const double sc = std::sqrt(p.c);
            StackedQrResult qr = fast_stacked_qr(scaled(A, sc / out.alpha), tree);
            HodlrMatrix M = q1q2t(qr.q1, qr.q2, eps);
            X = hodlr_axpby(p.b / p.c, X, (p.a - p.b / p.c) / sc, M, eps);
        } else {
            HodlrMatrix Z = hodlr_multiply(X, X, eps);
            hodlr_scale(Z, p.c);
            add_scaled_identity(Z, 1.0);
            HodlrMatrix W = hodlr_cholesky(Z, eps);
            HodlrMatrix Y = solve_upper_right(X, W, eps);
            HodlrMatrix V = solve_upperT_right(Y, W, eps);
            X = hodlr_axpby(p.b / p.c, X, p.a - p.b / p.c, V, eps);
        }
        hodlr_symmetrize(X, eps);
        l = l_update(l, p.a, p.b, p.c);
        ++k;
        const HodlrDiagnostics d = diagnostics(X);
        const double ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(clock::now() - t0)
                .count();
        out.per_iteration.push_back({k, l, p.c, d.max_offdiag_rank, d.memory_bytes, ms});
    }
    out.iterations = k;
    out.U = std::move(X);
    out.P = out.U;
    hodlr_scale(out.P, -0.5);
    add_scaled_identity(out.P, 0.5);
    return out;
}

struct SpectralOracle {
    Matrix projector; // dense Pi_{<0}(A)
    int nu = 0;       // number of negative eigenvalues
};

// Dense eigensolver oracle for the spectral projector.
inline SpectralOracle dense_spectral_projector(const Matrix& A) {
    EigResult eig = sym_eig(A);
    const int n = A.rows();
    int nu = 0;
    while (nu < n && eig.values[nu] < 0.0) ++nu;
    Matrix Vneg(n, nu);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nu; ++j) Vneg(i, j) = eig.vectors(i, j);
    return {matmul_nt(Vneg, Vneg), nu};
}

struct ErrorMetrics {
    double e_id = 0.0;
    double e_trace = 0.0;
    double e_sp = 0.0;
};

// Error measures of a computed sign approximant against the dense oracle:
// e_id = ||U^2 - I||_2, e_trace = |trace(U) - trace(sign(A))|,
// e_sp = ||(I - U)/2 - Pi_{<0}(A)||_2.
inline ErrorMetrics error_metrics(const Matrix& U, const SpectralOracle& oracle) {
    const int n = U.rows();
    if (U.cols() != n || oracle.projector.rows() != n)
        throw std::invalid_argument("error_metrics: dimension mismatch");
    ErrorMetrics m;
    std::vector<double> t(n);
    m.e_id = sym_norm2(n, [&](const double* x, double* y) {
        for (int i = 0; i < n; ++i) {
            const double* r = U.row(i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += r[j] * x[j];
            t[i] = s;
        }
        for (int i = 0; i < n; ++i) {
            const double* r = U.row(i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += r[j] * t[j];
            y[i] = s - x[i];
        }
    });
    m.e_trace = std::abs(trace(U) - static_cast<double>(n - 2 * oracle.nu));
    m.e_sp = sym_norm2(n, [&](const double* x, double* y) {
        for (int i = 0; i < n; ++i) {
            const double* r = U.row(i);
            const double* pr = oracle.projector.row(i);
            double su = 0.0, sp = 0.0;
            for (int j = 0; j < n; ++j) {
                su += r[j] * x[j];
                sp += pr[j] * x[j];
            }
            y[i] = 0.5 * (x[i] - su) - sp;
        }
    });
    return m;
}

} // namespace specproj
