#pragma once

// Dense factorizations: Householder QR/LQ, one-sided Jacobi SVD, Cholesky,
// LU with partial pivoting, triangular solves, and a symmetric eigensolver
// (Householder tridiagonalization + implicit-shift QL). Everything is
// written against row-major storage with contiguous inner loops.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "specproj/dense.hpp"

namespace specproj {

struct NotPositiveDefiniteError : std::runtime_error {
    explicit NotPositiveDefiniteError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

struct LqResult {
    Matrix L; // m x r, lower trapezoid
    Matrix Q; // r x n, orthonormal rows
};

// A = L*Q via Householder reflections applied to rows (contiguous in
// row-major storage).
inline LqResult lq_factor(const Matrix& A) {
    const int m = A.rows(), n = A.cols();
    const int r = std::min(m, n);
    Matrix W = A;
    std::vector<double> taus(r, 0.0);
    std::vector<std::vector<double>> vs(r);

    for (int k = 0; k < r; ++k) {
        double* wk = W.row(k);
        double nrm2 = 0.0;
        for (int j = k; j < n; ++j) nrm2 += wk[j] * wk[j];
        double alpha = std::sqrt(nrm2);
        if (alpha == 0.0) { taus[k] = 0.0; vs[k].assign(n - k, 0.0); continue; }
        if (wk[k] > 0.0) alpha = -alpha;
        // v = x - alpha*e1, normalized so v[0] = 1
        std::vector<double> v(n - k);
        v[0] = wk[k] - alpha;
        for (int j = k + 1; j < n; ++j) v[j - k] = wk[j];
        const double v0 = v[0];
        if (v0 == 0.0) { taus[k] = 0.0; vs[k] = std::move(v); continue; }
        for (double& x : v) x /= v0;
        // tau = 2/(v'v) for the normalized v; v'v = 2(nrm2 - x0*alpha)/v0^2
        taus[k] = v0 * v0 / (nrm2 - wk[k] * alpha);
        wk[k] = alpha;
        for (int j = k + 1; j < n; ++j) wk[j] = 0.0;
        // apply H = I - tau v v' to rows k+1..m-1 from the right
        for (int i = k + 1; i < m; ++i) {
            double* wi = W.row(i);
            double dot = 0.0;
            for (int j = k; j < n; ++j) dot += wi[j] * v[j - k];
            dot *= taus[k];
            for (int j = k; j < n; ++j) wi[j] -= dot * v[j - k];
        }
        vs[k] = std::move(v);
    }

    LqResult out;
    out.L = Matrix(m, r);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= std::min(i, r - 1); ++j) out.L(i, j) = W(i, j);
    // Q = H_{r-1} ... H_0 restricted to the first r rows: start from [I 0]
    // and apply reflectors in reverse order.
    out.Q = Matrix(r, n);
    for (int i = 0; i < r; ++i) out.Q(i, i) = 1.0;
    for (int k = r - 1; k >= 0; --k) {
        if (taus[k] == 0.0) continue;
        const std::vector<double>& v = vs[k];
        for (int i = 0; i < r; ++i) {
            double* qi = out.Q.row(i);
            double dot = 0.0;
            for (int j = k; j < n; ++j) dot += qi[j] * v[j - k];
            dot *= taus[k];
            for (int j = k; j < n; ++j) qi[j] -= dot * v[j - k];
        }
    }
    return out;
}

struct QrResult {
    Matrix Q; // m x r, orthonormal columns
    Matrix R; // r x n, upper trapezoid
};

// Economy QR, computed as the transpose of an LQ factorization.
inline QrResult qr_factor(const Matrix& A) {
    LqResult lq = lq_factor(transpose(A));
    return QrResult{transpose(lq.Q), transpose(lq.L)};
}

struct SvdResult {
    Matrix U;                  // m x k
    std::vector<double> sigma; // k, descending
    Matrix V;                  // n x k
};

namespace detail {

// One-sided Jacobi on the rows of Wt (n x m, row i = i-th column of W).
inline void jacobi_sweeps(Matrix& Wt, Matrix& Vt) {
    const int n = Wt.rows(), m = Wt.cols();
    const double tol = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double* wp = Wt.row(p);
                double* wq = Wt.row(q);
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    app += wp[i] * wp[i];
                    aqq += wq[i] * wq[i];
                    apq += wp[i] * wq[i];
                }
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < m; ++i) {
                    const double x = wp[i], y = wq[i];
                    wp[i] = c * x - s * y;
                    wq[i] = s * x + c * y;
                }
                double* vp = Vt.row(p);
                double* vq = Vt.row(q);
                for (int i = 0; i < n; ++i) {
                    const double x = vp[i], y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        if (!rotated) break;
    }
}

} // namespace detail

// Full SVD A = U * diag(sigma) * V^T via one-sided Jacobi.
inline SvdResult jacobi_svd(const Matrix& A) {
    const bool flip = A.rows() < A.cols();
    Matrix B = flip ? transpose(A) : A; // m >= n
    const int m = B.rows(), n = B.cols();

    Matrix Wt = transpose(B);       // n x m, rows are columns of B
    Matrix Vt = Matrix::identity(n);
    detail::jacobi_sweeps(Wt, Vt);

    std::vector<int> order(n);
    std::vector<double> sig(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        const double* w = Wt.row(j);
        for (int i = 0; i < m; ++i) s += w[i] * w[i];
        sig[j] = std::sqrt(s);
        order[j] = j;
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) { return sig[a] > sig[b]; });

    SvdResult out;
    out.sigma.resize(n);
    out.U = Matrix(m, n);
    out.V = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        const int src = order[j];
        out.sigma[j] = sig[src];
        const double* w = Wt.row(src);
        if (sig[src] > 0.0) {
            const double inv = 1.0 / sig[src];
            for (int i = 0; i < m; ++i) out.U(i, j) = w[i] * inv;
        }
        const double* v = Vt.row(src);
        for (int i = 0; i < n; ++i) out.V(i, j) = v[i];
    }
    if (flip) std::swap(out.U, out.V);
    return out;
}

// Singular values only, descending.
inline std::vector<double> singular_values(const Matrix& A) {
    return jacobi_svd(A).sigma;
}

// Lower Cholesky factor, A = L*L^T. Throws NotPositiveDefiniteError.
inline Matrix cholesky_lower(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("cholesky_lower: square matrix expected");
    const int n = A.rows();
    Matrix L(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double* li = L.row(i);
            const double* lj = L.row(j);
            double s = A(i, j);
            for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
            if (i == j) {
                if (!(s > 0.0)) throw NotPositiveDefiniteError("cholesky: nonpositive pivot");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return L;
}

// Upper Cholesky factor, A = R^T*R.
inline Matrix cholesky_upper(const Matrix& A) { return transpose(cholesky_lower(A)); }

// Solve Y*R = X for upper triangular R.
inline Matrix solve_right_upper(const Matrix& R, const Matrix& X) {
    const int n = R.rows();
    if (R.cols() != n || X.cols() != n) throw std::invalid_argument("solve_right_upper: shape");
    Matrix Rt = transpose(R);
    Matrix Y(X.rows(), n);
    for (int i = 0; i < X.rows(); ++i) {
        const double* x = X.row(i);
        double* y = Y.row(i);
        for (int j = 0; j < n; ++j) {
            const double* rj = Rt.row(j); // column j of R
            double s = x[j];
            for (int k = 0; k < j; ++k) s -= y[k] * rj[k];
            const double d = rj[j];
            if (d == 0.0) throw SingularMatrixError("solve_right_upper: zero diagonal");
            y[j] = s / d;
        }
    }
    return Y;
}

// Solve Y*R^T = X for upper triangular R.
inline Matrix solve_right_upperT(const Matrix& R, const Matrix& X) {
    const int n = R.rows();
    if (R.cols() != n || X.cols() != n) throw std::invalid_argument("solve_right_upperT: shape");
    Matrix Y(X.rows(), n);
    for (int i = 0; i < X.rows(); ++i) {
        const double* x = X.row(i);
        double* y = Y.row(i);
        for (int j = n - 1; j >= 0; --j) {
            const double* rj = R.row(j);
            double s = x[j];
            for (int k = j + 1; k < n; ++k) s -= y[k] * rj[k];
            const double d = rj[j];
            if (d == 0.0) throw SingularMatrixError("solve_right_upperT: zero diagonal");
            y[j] = s / d;
        }
    }
    return Y;
}

// Solve R^T*Z = X (forward substitution down the columns of X).
inline Matrix solve_lowerT_left(const Matrix& R, const Matrix& X) {
    // R^T is lower triangular; this is Z = R^{-T} X.
    Matrix Zt = solve_right_upper(R, transpose(X)); // (Z^T) R = X^T  <=>  R^T Z = X
    return transpose(Zt);
}

// Solve R*Z = X (back substitution), R upper triangular.
inline Matrix solve_upper_left(const Matrix& R, const Matrix& X) {
    Matrix Zt = solve_right_upperT(R, transpose(X)); // (Z^T) R^T = X^T  <=>  R Z = X
    return transpose(Zt);
}

struct LuResult {
    Matrix lu;
    std::vector<int> piv;
};

inline LuResult lu_factor(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("lu_factor: square matrix expected");
    const int n = A.rows();
    LuResult f{A, std::vector<int>(n)};
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(f.lu(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(f.lu(i, k));
            if (v > best) { best = v; p = i; }
        }
        f.piv[k] = p;
        if (best == 0.0) throw SingularMatrixError("lu_factor: singular matrix");
        if (p != k)
            for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
        const double inv = 1.0 / f.lu(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double m = f.lu(i, k) * inv;
            f.lu(i, k) = m;
            if (m == 0.0) continue;
            double* ri = f.lu.row(i);
            const double* rk = f.lu.row(k);
            for (int j = k + 1; j < n; ++j) ri[j] -= m * rk[j];
        }
    }
    return f;
}

inline Matrix lu_solve(const LuResult& f, const Matrix& B) {
    const int n = f.lu.rows();
    if (B.rows() != n) throw std::invalid_argument("lu_solve: shape");
    Matrix X = B;
    const int m = X.cols();
    for (int k = 0; k < n; ++k)
        if (f.piv[k] != k)
            for (int j = 0; j < m; ++j) std::swap(X(k, j), X(f.piv[k], j));
    for (int k = 0; k < n; ++k)
        for (int i = k + 1; i < n; ++i) {
            const double l = f.lu(i, k);
            if (l == 0.0) continue;
            for (int j = 0; j < m; ++j) X(i, j) -= l * X(k, j);
        }
    for (int k = n - 1; k >= 0; --k) {
        const double inv = 1.0 / f.lu(k, k);
        for (int j = 0; j < m; ++j) X(k, j) *= inv;
        for (int i = 0; i < k; ++i) {
            const double u = f.lu(i, k);
            if (u == 0.0) continue;
            for (int j = 0; j < m; ++j) X(i, j) -= u * X(k, j);
        }
    }
    return X;
}

struct EigResult {
    std::vector<double> values; // ascending
    Matrix vectors;             // columns are eigenvectors
};

namespace detail {

// Implicit-shift QL with eigenvector accumulation. Zt holds eigenvectors as
// rows and is rotated in place; d/e as in tridiag_eigenvalues.
inline void tql2(std::vector<double>& d, std::vector<double>& e, Matrix& Zt) {
    const int n = static_cast<int>(d.size());
    e.resize(n, 0.0);
    e[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 80) throw std::runtime_error("tql2: no convergence");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    double* zi = Zt.row(i);
                    double* zi1 = Zt.row(i + 1);
                    const int nn = Zt.cols();
                    for (int k = 0; k < nn; ++k) {
                        const double fz = zi1[k];
                        zi1[k] = s * zi[k] + c * fz;
                        zi[k] = c * zi[k] - s * fz;
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

} // namespace detail

// Eigendecomposition of a symmetric tridiagonal matrix given by its diagonal
// and subdiagonal (sub[i] couples diag[i], diag[i+1]).
inline EigResult sym_eig_tridiag(std::vector<double> diag, std::vector<double> sub) {
    const int n = static_cast<int>(diag.size());
    Matrix Zt = Matrix::identity(n);
    if (n > 1) detail::tql2(diag, sub, Zt);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] < diag[b]; });
    EigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = diag[order[j]];
        const double* z = Zt.row(order[j]);
        for (int i = 0; i < n; ++i) out.vectors(i, j) = z[i];
    }
    return out;
}

// Eigendecomposition of a symmetric dense matrix: Householder reduction to
// tridiagonal form followed by implicit-shift QL.
inline EigResult sym_eig(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("sym_eig: square matrix expected");
    const int n = A.rows();
    if (n == 0) return {};
    Matrix T = A;
    Matrix Q = Matrix::identity(n);
    std::vector<double> v(n), w(n), p(n);

    for (int k = 0; k + 2 < n; ++k) {
        double tail = 0.0;
        for (int i = k + 2; i < n; ++i) tail += T(i, k) * T(i, k);
        if (tail == 0.0) continue; // column already tridiagonal
        const double nrm2 = tail + T(k + 1, k) * T(k + 1, k);
        double alpha = std::sqrt(nrm2);
        if (T(k + 1, k) > 0.0) alpha = -alpha;
        double vnrm2 = nrm2 - 2.0 * alpha * T(k + 1, k) + alpha * alpha;
        if (vnrm2 == 0.0) continue;
        for (int i = k + 1; i < n; ++i) v[i] = T(i, k);
        v[k + 1] -= alpha;
        const double inv = 1.0 / std::sqrt(vnrm2);
        for (int i = k + 1; i < n; ++i) v[i] *= inv;

        // symmetric rank-2 update of the trailing block: p = 2 T v,
        // w = p - (v^T p) v, T -= v w^T + w v^T
        for (int i = k + 1; i < n; ++i) {
            const double* ti = T.row(i);
            double s = 0.0;
            for (int j = k + 1; j < n; ++j) s += ti[j] * v[j];
            p[i] = 2.0 * s;
        }
        double vp = 0.0;
        for (int i = k + 1; i < n; ++i) vp += v[i] * p[i];
        for (int i = k + 1; i < n; ++i) w[i] = p[i] - vp * v[i];
        for (int i = k + 1; i < n; ++i) {
            double* ti = T.row(i);
            const double vi = v[i], wi = w[i];
            for (int j = k + 1; j < n; ++j) ti[j] -= vi * w[j] + wi * v[j];
        }
        T(k + 1, k) = alpha;
        T(k, k + 1) = alpha;
        for (int i = k + 2; i < n; ++i) { T(i, k) = 0.0; T(k, i) = 0.0; }

        // Q <- Q H
        for (int i = 0; i < n; ++i) {
            double* qi = Q.row(i);
            double s = 0.0;
            for (int j = k + 1; j < n; ++j) s += qi[j] * v[j];
            s *= 2.0;
            for (int j = k + 1; j < n; ++j) qi[j] -= s * v[j];
        }
    }

    std::vector<double> d(n), e(n, 0.0);
    for (int i = 0; i < n; ++i) d[i] = T(i, i);
    for (int i = 0; i + 1 < n; ++i) e[i] = T(i + 1, i);

    Matrix Zt = transpose(Q);
    if (n > 1) detail::tql2(d, e, Zt);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    EigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = d[order[j]];
        const double* z = Zt.row(order[j]);
        for (int i = 0; i < n; ++i) out.vectors(i, j) = z[i];
    }
    return out;
}

} // namespace specproj
