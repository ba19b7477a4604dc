#pragma once

// Dense row-major matrix type and the handful of BLAS-like kernels the
// library needs. Loops are arranged so the inner dimension is contiguous.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace specproj {

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols)
        : rows_(rows), cols_(cols),
          a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
        assert(rows >= 0 && cols >= 0);
    }

    static Matrix identity(int n) {
        Matrix I(n, n);
        for (int i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) {
        return a_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double operator()(int i, int j) const {
        return a_[static_cast<std::size_t>(i) * cols_ + j];
    }

    double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * cols_; }
    const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * cols_; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    void fill(double v) { std::fill(a_.begin(), a_.end(), v); }

    Matrix block(int i0, int j0, int p, int q) const {
        Matrix B(p, q);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j) B(i, j) = (*this)(i0 + i, j0 + j);
        return B;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

inline Matrix transpose(const Matrix& A) {
    Matrix T(A.cols(), A.rows());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) T(j, i) = A(i, j);
    return T;
}

// C = A*B
inline Matrix matmul(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.rows()) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix C(A.rows(), B.cols());
    const int n = B.cols();
    for (int i = 0; i < A.rows(); ++i) {
        double* ci = C.row(i);
        for (int p = 0; p < A.cols(); ++p) {
            const double a = A(i, p);
            if (a == 0.0) continue;
            const double* bp = B.row(p);
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
    return C;
}

// C = A^T * B
inline Matrix matmul_tn(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) throw std::invalid_argument("matmul_tn: dimension mismatch");
    Matrix C(A.cols(), B.cols());
    const int n = B.cols();
    for (int p = 0; p < A.rows(); ++p) {
        const double* ap = A.row(p);
        const double* bp = B.row(p);
        for (int i = 0; i < A.cols(); ++i) {
            const double a = ap[i];
            if (a == 0.0) continue;
            double* ci = C.row(i);
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
    return C;
}

// C = A * B^T
inline Matrix matmul_nt(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.cols()) throw std::invalid_argument("matmul_nt: dimension mismatch");
    Matrix C(A.rows(), B.rows());
    const int k = A.cols();
    for (int i = 0; i < A.rows(); ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int j = 0; j < B.rows(); ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
    return C;
}

// A += s*B
inline void add_scaled(Matrix& A, double s, const Matrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("add_scaled: dimension mismatch");
    double* a = A.data();
    const double* b = B.data();
    const std::size_t m = static_cast<std::size_t>(A.rows()) * A.cols();
    for (std::size_t i = 0; i < m; ++i) a[i] += s * b[i];
}

inline void scale(Matrix& A, double s) {
    double* a = A.data();
    const std::size_t m = static_cast<std::size_t>(A.rows()) * A.cols();
    for (std::size_t i = 0; i < m; ++i) a[i] *= s;
}

inline double trace(const Matrix& A) {
    double t = 0.0;
    for (int i = 0; i < std::min(A.rows(), A.cols()); ++i) t += A(i, i);
    return t;
}

inline double frobenius_norm(const Matrix& A) {
    double s = 0.0;
    const double* a = A.data();
    const std::size_t m = static_cast<std::size_t>(A.rows()) * A.cols();
    for (std::size_t i = 0; i < m; ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

inline double max_abs_diff(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("max_abs_diff: dimension mismatch");
    double m = 0.0;
    const double* a = A.data();
    const double* b = B.data();
    const std::size_t sz = static_cast<std::size_t>(A.rows()) * A.cols();
    for (std::size_t i = 0; i < sz; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(const Matrix& A) {
    double s = 0.0;
    const double* a = A.data();
    const std::size_t m = static_cast<std::size_t>(A.rows()) * A.cols();
    for (std::size_t i = 0; i < m; ++i) s = std::max(s, std::abs(a[i]));
    return s;
}

namespace detail {

// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL,
// values only. sub[i] couples diag[i] and diag[i+1]; both arrays are
// modified in place, sub is padded to length n.
inline void tridiag_eigenvalues(std::vector<double>& diag, std::vector<double>& sub) {
    const int n = static_cast<int>(diag.size());
    if (n == 0) return;
    sub.resize(n, 0.0);
    sub[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
                if (std::abs(sub[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 80) throw std::runtime_error("tridiag_eigenvalues: no convergence");
                double g = (diag[l + 1] - diag[l]) / (2.0 * sub[l]);
                double r = std::hypot(g, 1.0);
                g = diag[m] - diag[l] + sub[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * sub[i];
                    double b = c * sub[i];
                    r = std::hypot(f, g);
                    sub[i + 1] = r;
                    if (r == 0.0) {
                        diag[i + 1] -= p;
                        sub[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = diag[i + 1] - p;
                    r = (diag[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    diag[i + 1] = g + p;
                    g = c * r - b;
                }
                if (underflow) continue;
                diag[l] -= p;
                sub[l] = g;
                sub[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(diag.begin(), diag.end());
}

} // namespace detail

// Spectral norm of a symmetric operator given by its matvec, via Lanczos with
// full reorthogonalization. Deterministic start vector.
inline double sym_norm2(int n, const std::function<void(const double*, double*)>& matvec,
                        int max_iter = 200, double tol = 1e-11) {
    if (n == 0) return 0.0;
    max_iter = std::min(max_iter, n);
    std::vector<std::vector<double>> V;
    std::vector<double> alpha, beta;
    std::vector<double> v(n), w(n);
    // fixed quasi-random start, normalized
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        v[i] = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
        nrm += v[i] * v[i];
    }
    nrm = std::sqrt(nrm);
    for (int i = 0; i < n; ++i) v[i] /= nrm;

    double prev = 0.0;
    for (int k = 0; k < max_iter; ++k) {
        V.push_back(v);
        matvec(v.data(), w.data());
        double a = 0.0;
        for (int i = 0; i < n; ++i) a += v[i] * w[i];
        alpha.push_back(a);
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& u : V) {
                double d = 0.0;
                for (int i = 0; i < n; ++i) d += u[i] * w[i];
                for (int i = 0; i < n; ++i) w[i] -= d * u[i];
            }
        }
        double b = 0.0;
        for (int i = 0; i < n; ++i) b += w[i] * w[i];
        b = std::sqrt(b);

        std::vector<double> d = alpha, e(alpha.size(), 0.0);
        for (std::size_t i = 0; i < beta.size(); ++i) e[i] = beta[i]; // e[i] couples d[i], d[i+1]
        detail::tridiag_eigenvalues(d, e);
        double est = std::max(std::abs(d.front()), std::abs(d.back()));

        if (b <= 1e-14 * (std::abs(est) + 1.0)) return est; // invariant subspace
        if (k > 4 && std::abs(est - prev) <= tol * std::max(1.0, est)) return est;
        prev = est;
        beta.push_back(b);
        for (int i = 0; i < n; ++i) v[i] = w[i] / b;
    }
    return prev;
}

// Spectral norm of a symmetric dense matrix.
inline double sym_norm2(const Matrix& S) {
    if (S.rows() != S.cols()) throw std::invalid_argument("sym_norm2: square matrix expected");
    const int n = S.rows();
    return sym_norm2(n, [&](const double* x, double* y) {
        for (int i = 0; i < n; ++i) {
            const double* r = S.row(i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += r[j] * x[j];
            y[i] = s;
        }
    });
}

// Spectral norm of a general dense matrix (Lanczos on A^T A).
inline double norm2(const Matrix& A) {
    const int m = A.rows(), n = A.cols();
    if (m == 0 || n == 0) return 0.0;
    std::vector<double> t(m);
    double s2 = sym_norm2(n, [&](const double* x, double* y) {
        for (int i = 0; i < m; ++i) {
            const double* r = A.row(i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += r[j] * x[j];
            t[i] = s;
        }
        for (int j = 0; j < n; ++j) y[j] = 0.0;
        for (int i = 0; i < m; ++i) {
            const double* r = A.row(i);
            const double ti = t[i];
            for (int j = 0; j < n; ++j) y[j] += r[j] * ti;
        }
    });
    return std::sqrt(std::max(0.0, s2));
}

} // namespace specproj
