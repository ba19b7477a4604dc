#pragma once

// Factored low-rank blocks B = U*V^T and their recompression. Truncation is
// absolute: the SVD of the orthogonalized core is computed and exactly the
// singular values > eps are retained, so the discarded part has 2-norm at
// most eps.

#include <vector>

#include "specproj/dense.hpp"
#include "specproj/dense_factor.hpp"

namespace specproj {

struct LowRankBlock {
    Matrix U; // p x k
    Matrix V; // s x k

    LowRankBlock() = default;
    LowRankBlock(Matrix u, Matrix v) : U(std::move(u)), V(std::move(v)) {}

    static LowRankBlock zero(int p, int s) { return {Matrix(p, 0), Matrix(s, 0)}; }

    int rows() const { return U.rows(); }
    int cols() const { return V.rows(); }
    int rank() const { return U.cols(); }
};

inline Matrix to_dense(const LowRankBlock& B) {
    if (B.rank() == 0) return Matrix(B.rows(), B.cols());
    return matmul_nt(B.U, B.V);
}

inline LowRankBlock lr_scaled(const LowRankBlock& B, double a) {
    LowRankBlock C = B;
    scale(C.U, a);
    return C;
}

inline LowRankBlock lr_transpose(const LowRankBlock& B) { return {B.V, B.U}; }

// Horizontal concatenation of factors: value(X) + value(Y).
inline LowRankBlock lr_concat(const LowRankBlock& X, const LowRankBlock& Y) {
    if (X.rank() == 0) return Y;
    if (Y.rank() == 0) return X;
    Matrix U(X.rows(), X.rank() + Y.rank());
    Matrix V(X.cols(), X.rank() + Y.rank());
    for (int i = 0; i < U.rows(); ++i) {
        double* u = U.row(i);
        const double* a = X.U.row(i);
        const double* b = Y.U.row(i);
        for (int j = 0; j < X.rank(); ++j) u[j] = a[j];
        for (int j = 0; j < Y.rank(); ++j) u[X.rank() + j] = b[j];
    }
    for (int i = 0; i < V.rows(); ++i) {
        double* v = V.row(i);
        const double* a = X.V.row(i);
        const double* b = Y.V.row(i);
        for (int j = 0; j < X.rank(); ++j) v[j] = a[j];
        for (int j = 0; j < Y.rank(); ++j) v[X.rank() + j] = b[j];
    }
    return {std::move(U), std::move(V)};
}

// Recompression: economy QR of both factors, SVD of the small core, keep
// singular values > eps. ||B - truncate(B)||_2 <= eps.
inline LowRankBlock truncate(const LowRankBlock& B, double eps) {
    if (B.rank() == 0) return B;
    QrResult qu = qr_factor(B.U);
    QrResult qv = qr_factor(B.V);
    Matrix core = matmul_nt(qu.R, qv.R); // r1 x r2
    SvdResult svd = jacobi_svd(core);
    int k = 0;
    while (k < static_cast<int>(svd.sigma.size()) && svd.sigma[k] > eps) ++k;
    Matrix U(B.rows(), k), V(B.cols(), k);
    if (k > 0) {
        Matrix Uk(core.rows(), k), Vk(core.cols(), k);
        for (int i = 0; i < core.rows(); ++i)
            for (int j = 0; j < k; ++j) Uk(i, j) = svd.U(i, j) * svd.sigma[j];
        for (int i = 0; i < core.cols(); ++i)
            for (int j = 0; j < k; ++j) Vk(i, j) = svd.V(i, j);
        U = matmul(qu.Q, Uk);
        V = matmul(qv.Q, Vk);
    }
    return {std::move(U), std::move(V)};
}

// (Ua Va^T) * (Ub Vb^T) = (Ua G) Vb^T with G = Va^T Ub.
inline LowRankBlock lr_multiply(const LowRankBlock& A, const LowRankBlock& B) {
    if (A.rank() == 0 || B.rank() == 0) return LowRankBlock::zero(A.rows(), B.cols());
    Matrix G = matmul_tn(A.V, B.U);
    return {matmul(A.U, G), B.V};
}

} // namespace specproj
