#pragma once

// HODLR matrices and formatted arithmetic. Off-diagonal blocks are stored in
// factored form, diagonal leaves densely; every low-rank accumulation is
// recompressed with the absolute tolerance eps. All operations require
// operands built over the same partition tree.

#include <memory>
#include <stdexcept>
#include <vector>

#include "specproj/banded.hpp"
#include "specproj/dense.hpp"
#include "specproj/dense_factor.hpp"
#include "specproj/lowrank.hpp"
#include "specproj/tree.hpp"

namespace specproj {

class HodlrMatrix {
public:
    struct NodeData {
        Matrix dense;       // leaf only
        LowRankBlock upper; // rows = left child range, cols = right child range
        LowRankBlock lower; // rows = right child range, cols = left child range
    };

    HodlrMatrix() = default;
    explicit HodlrMatrix(std::shared_ptr<const PartitionTree> t)
        : tree(std::move(t)), nodes(tree->nodes.size()) {
        for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
            const auto& nd = tree->nodes[id];
            if (nd.leaf()) {
                nodes[id].dense = Matrix(nd.size, nd.size);
            } else {
                const int s1 = tree->nodes[nd.left].size;
                const int s2 = tree->nodes[nd.right].size;
                nodes[id].upper = LowRankBlock::zero(s1, s2);
                nodes[id].lower = LowRankBlock::zero(s2, s1);
            }
        }
    }

    int n() const { return tree ? tree->n : 0; }

    std::shared_ptr<const PartitionTree> tree;
    std::vector<NodeData> nodes;
};

inline void check_same_tree(const HodlrMatrix& A, const HodlrMatrix& B, const char* op) {
    if (A.tree == B.tree) return;
    if (!A.tree || !B.tree || !A.tree->same_structure(*B.tree))
        throw std::invalid_argument(std::string(op) + ": partition tree mismatch");
}

inline HodlrMatrix hodlr_identity(std::shared_ptr<const PartitionTree> tree) {
    HodlrMatrix H(std::move(tree));
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        const auto& nd = H.tree->nodes[id];
        if (nd.leaf())
            for (int i = 0; i < nd.size; ++i) H.nodes[id].dense(i, i) = 1.0;
    }
    return H;
}

namespace hodlr_detail {

// Drop factor columns whose value contribution is exactly zero (judged on
// the non-selector factor).
inline LowRankBlock trim_zero_columns(Matrix U, Matrix V, bool judge_v) {
    const Matrix& W = judge_v ? V : U;
    std::vector<int> keep;
    for (int t = 0; t < W.cols(); ++t) {
        bool nz = false;
        for (int i = 0; i < W.rows() && !nz; ++i) nz = W(i, t) != 0.0;
        if (nz) keep.push_back(t);
    }
    if (static_cast<int>(keep.size()) == U.cols()) return {std::move(U), std::move(V)};
    Matrix U2(U.rows(), static_cast<int>(keep.size()));
    Matrix V2(V.rows(), static_cast<int>(keep.size()));
    for (std::size_t t = 0; t < keep.size(); ++t) {
        for (int i = 0; i < U.rows(); ++i) U2(i, t) = U(i, keep[t]);
        for (int i = 0; i < V.rows(); ++i) V2(i, t) = V(i, keep[t]);
    }
    return {std::move(U2), std::move(V2)};
}

} // namespace hodlr_detail

// Exact HODLR representation of a symmetric banded matrix; every
// off-diagonal block is a band corner of rank at most b.
inline HodlrMatrix from_banded(const BandedSymmetric& A, std::shared_ptr<const PartitionTree> tree) {
    if (tree->n != A.n) throw std::invalid_argument("from_banded: size mismatch");
    HodlrMatrix H(std::move(tree));
    const int b = A.b;
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        const auto& nd = H.tree->nodes[id];
        if (nd.leaf()) {
            for (int i = 0; i < nd.size; ++i)
                for (int j = 0; j < nd.size; ++j)
                    H.nodes[id].dense(i, j) = A.at(nd.begin + i, nd.begin + j);
            continue;
        }
        const int mid = H.tree->nodes[nd.right].begin;
        const int s1 = H.tree->nodes[nd.left].size;
        const int s2 = H.tree->nodes[nd.right].size;
        const int kr = std::min(b, s1), kc = std::min(b, s2);
        // upper block, rows [begin, mid) x cols [mid, begin+size)
        if (kr <= kc) {
            Matrix U(s1, kr), V(s2, kr);
            for (int t = 0; t < kr; ++t) {
                U(s1 - kr + t, t) = 1.0;
                for (int cl = 0; cl < s2; ++cl) V(cl, t) = A.at(mid - kr + t, mid + cl);
            }
            H.nodes[id].upper = hodlr_detail::trim_zero_columns(std::move(U), std::move(V), true);
        } else {
            Matrix U(s1, kc), V(s2, kc);
            for (int t = 0; t < kc; ++t) {
                V(t, t) = 1.0;
                for (int rl = 0; rl < s1; ++rl) U(rl, t) = A.at(nd.begin + rl, mid + t);
            }
            H.nodes[id].upper = hodlr_detail::trim_zero_columns(std::move(U), std::move(V), false);
        }
        // lower block, rows [mid, begin+size) x cols [begin, mid)
        if (kc <= kr) {
            Matrix U(s2, kc), V(s1, kc);
            for (int t = 0; t < kc; ++t) {
                U(t, t) = 1.0;
                for (int cl = 0; cl < s1; ++cl) V(cl, t) = A.at(mid + t, nd.begin + cl);
            }
            H.nodes[id].lower = hodlr_detail::trim_zero_columns(std::move(U), std::move(V), true);
        } else {
            Matrix U(s2, kr), V(s1, kr);
            for (int t = 0; t < kr; ++t) {
                V(s1 - kr + t, t) = 1.0;
                for (int rl = 0; rl < s2; ++rl) U(rl, t) = A.at(mid + rl, mid - kr + t);
            }
            H.nodes[id].lower = hodlr_detail::trim_zero_columns(std::move(U), std::move(V), false);
        }
    }
    return H;
}

inline HodlrMatrix from_banded(const BandedSymmetric& A, int n_min) {
    return from_banded(A, make_tree(A.n, n_min));
}

namespace hodlr_detail {

inline void fill_dense(const HodlrMatrix& H, int id, Matrix& M) {
    const auto& nd = H.tree->nodes[id];
    if (nd.leaf()) {
        for (int i = 0; i < nd.size; ++i)
            for (int j = 0; j < nd.size; ++j) M(nd.begin + i, nd.begin + j) = H.nodes[id].dense(i, j);
        return;
    }
    fill_dense(H, nd.left, M);
    fill_dense(H, nd.right, M);
    const int mid = H.tree->nodes[nd.right].begin;
    Matrix Up = to_dense(H.nodes[id].upper);
    for (int i = 0; i < Up.rows(); ++i)
        for (int j = 0; j < Up.cols(); ++j) M(nd.begin + i, mid + j) = Up(i, j);
    Matrix Lo = to_dense(H.nodes[id].lower);
    for (int i = 0; i < Lo.rows(); ++i)
        for (int j = 0; j < Lo.cols(); ++j) M(mid + i, nd.begin + j) = Lo(i, j);
}

// Y[y0.., :] += A * X[x0.., :]
inline void gemm_acc_rows(const Matrix& A, const Matrix& X, int x0, Matrix& Y, int y0) {
    const int m = X.cols();
    for (int i = 0; i < A.rows(); ++i) {
        double* yi = Y.row(y0 + i);
        const double* ai = A.row(i);
        for (int p = 0; p < A.cols(); ++p) {
            const double a = ai[p];
            if (a == 0.0) continue;
            const double* xp = X.row(x0 + p);
            for (int j = 0; j < m; ++j) yi[j] += a * xp[j];
        }
    }
}

// returns A^T * X[x0 .. x0+A.rows())
inline Matrix gemm_tn_rows(const Matrix& A, const Matrix& X, int x0) {
    Matrix T(A.cols(), X.cols());
    const int m = X.cols();
    for (int p = 0; p < A.rows(); ++p) {
        const double* ap = A.row(p);
        const double* xp = X.row(x0 + p);
        for (int i = 0; i < A.cols(); ++i) {
            const double a = ap[i];
            if (a == 0.0) continue;
            double* ti = T.row(i);
            for (int j = 0; j < m; ++j) ti[j] += a * xp[j];
        }
    }
    return T;
}

// Y[rows of node id] += H(id) * X[rows of node id]; `base` is the global
// index of row 0 of X and Y.
inline void apply_rec(const HodlrMatrix& H, int id, const Matrix& X, Matrix& Y, int base) {
    const auto& nd = H.tree->nodes[id];
    const int l0 = nd.begin - base;
    if (nd.leaf()) {
        gemm_acc_rows(H.nodes[id].dense, X, l0, Y, l0);
        return;
    }
    apply_rec(H, nd.left, X, Y, base);
    apply_rec(H, nd.right, X, Y, base);
    const int midl = H.tree->nodes[nd.right].begin - base;
    const auto& up = H.nodes[id].upper;
    if (up.rank() > 0) {
        Matrix T = gemm_tn_rows(up.V, X, midl);
        gemm_acc_rows(up.U, T, 0, Y, l0);
    }
    const auto& lo = H.nodes[id].lower;
    if (lo.rank() > 0) {
        Matrix T = gemm_tn_rows(lo.V, X, l0);
        gemm_acc_rows(lo.U, T, 0, Y, midl);
    }
}

inline void applyT_rec(const HodlrMatrix& H, int id, const Matrix& X, Matrix& Y, int base) {
    const auto& nd = H.tree->nodes[id];
    const int l0 = nd.begin - base;
    if (nd.leaf()) {
        Matrix T = gemm_tn_rows(H.nodes[id].dense, X, l0);
        for (int i = 0; i < T.rows(); ++i) {
            double* yi = Y.row(l0 + i);
            const double* ti = T.row(i);
            for (int j = 0; j < T.cols(); ++j) yi[j] += ti[j];
        }
        return;
    }
    applyT_rec(H, nd.left, X, Y, base);
    applyT_rec(H, nd.right, X, Y, base);
    const int midl = H.tree->nodes[nd.right].begin - base;
    const auto& up = H.nodes[id].upper; // contributes to Y2 via (U V^T)^T X1
    if (up.rank() > 0) {
        Matrix T = gemm_tn_rows(up.U, X, l0);
        gemm_acc_rows(up.V, T, 0, Y, midl);
    }
    const auto& lo = H.nodes[id].lower;
    if (lo.rank() > 0) {
        Matrix T = gemm_tn_rows(lo.U, X, midl);
        gemm_acc_rows(lo.V, T, 0, Y, l0);
    }
}

} // namespace hodlr_detail

inline Matrix to_dense(const HodlrMatrix& H) {
    Matrix M(H.n(), H.n());
    hodlr_detail::fill_dense(H, 0, M);
    return M;
}

// Dense product H * X for the subtree rooted at `id`; X holds the block-local
// rows.
inline Matrix h_apply_sub(const HodlrMatrix& H, int id, const Matrix& X) {
    const auto& nd = H.tree->nodes[id];
    if (X.rows() != nd.size) throw std::invalid_argument("h_apply_sub: dimension mismatch");
    Matrix Y(nd.size, X.cols());
    hodlr_detail::apply_rec(H, id, X, Y, nd.begin);
    return Y;
}

inline Matrix h_applyT_sub(const HodlrMatrix& H, int id, const Matrix& X) {
    const auto& nd = H.tree->nodes[id];
    if (X.rows() != nd.size) throw std::invalid_argument("h_applyT_sub: dimension mismatch");
    Matrix Y(nd.size, X.cols());
    hodlr_detail::applyT_rec(H, id, X, Y, nd.begin);
    return Y;
}

inline Matrix h_apply(const HodlrMatrix& H, const Matrix& X) { return h_apply_sub(H, 0, X); }

inline std::vector<double> hodlr_matvec(const HodlrMatrix& H, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != H.n()) throw std::invalid_argument("hodlr_matvec: dimension mismatch");
    Matrix X(H.n(), 1);
    for (int i = 0; i < H.n(); ++i) X(i, 0) = x[i];
    Matrix Y = h_apply(H, X);
    std::vector<double> y(H.n());
    for (int i = 0; i < H.n(); ++i) y[i] = Y(i, 0);
    return y;
}

inline void hodlr_scale(HodlrMatrix& H, double a) {
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        if (H.tree->nodes[id].leaf())
            scale(H.nodes[id].dense, a);
        else
            scale(H.nodes[id].upper.U, a), scale(H.nodes[id].lower.U, a);
    }
}

// H += mu * I, exact: only diagonal leaves change.
inline void add_scaled_identity(HodlrMatrix& H, double mu) {
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        const auto& nd = H.tree->nodes[id];
        if (nd.leaf())
            for (int i = 0; i < nd.size; ++i) H.nodes[id].dense(i, i) += mu;
    }
}

inline HodlrMatrix hodlr_transpose(const HodlrMatrix& H) {
    HodlrMatrix T(H.tree);
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        if (H.tree->nodes[id].leaf()) {
            T.nodes[id].dense = transpose(H.nodes[id].dense);
        } else {
            T.nodes[id].upper = lr_transpose(H.nodes[id].lower);
            T.nodes[id].lower = lr_transpose(H.nodes[id].upper);
        }
    }
    return T;
}

// C = a*A + b*B with per-block recompression.
inline HodlrMatrix hodlr_axpby(double a, const HodlrMatrix& A, double b, const HodlrMatrix& B,
                               double eps) {
    check_same_tree(A, B, "hodlr_axpby");
    HodlrMatrix C(A.tree);
    for (std::size_t id = 0; id < A.tree->nodes.size(); ++id) {
        if (A.tree->nodes[id].leaf()) {
            Matrix D = A.nodes[id].dense;
            scale(D, a);
            add_scaled(D, b, B.nodes[id].dense);
            C.nodes[id].dense = std::move(D);
        } else {
            C.nodes[id].upper = truncate(
                lr_concat(lr_scaled(A.nodes[id].upper, a), lr_scaled(B.nodes[id].upper, b)), eps);
            C.nodes[id].lower = truncate(
                lr_concat(lr_scaled(A.nodes[id].lower, a), lr_scaled(B.nodes[id].lower, b)), eps);
        }
    }
    return C;
}

inline HodlrMatrix hodlr_add(const HodlrMatrix& A, const HodlrMatrix& B, double eps) {
    return hodlr_axpby(1.0, A, 1.0, B, eps);
}

// (H + H^T)/2, keeping the two off-diagonal factor pairs exact mirrors.
inline void hodlr_symmetrize(HodlrMatrix& H, double eps) {
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        if (H.tree->nodes[id].leaf()) {
            Matrix& D = H.nodes[id].dense;
            for (int i = 0; i < D.rows(); ++i)
                for (int j = 0; j < i; ++j) {
                    const double v = 0.5 * (D(i, j) + D(j, i));
                    D(i, j) = v;
                    D(j, i) = v;
                }
        } else {
            LowRankBlock up = truncate(lr_concat(lr_scaled(H.nodes[id].upper, 0.5),
                                                 lr_scaled(lr_transpose(H.nodes[id].lower), 0.5)),
                                       eps);
            H.nodes[id].lower = lr_transpose(up);
            H.nodes[id].upper = std::move(up);
        }
    }
}

namespace hodlr_detail {

// H(id-subtree) += U[urow0..) * V[vrow0..)^T, recompressing every touched
// off-diagonal block.
inline void add_lowrank_rec(HodlrMatrix& H, int id, const Matrix& U, int urow0, const Matrix& V,
                            int vrow0, double eps) {
    const auto& nd = H.tree->nodes[id];
    const int k = U.cols();
    if (k == 0) return;
    if (nd.leaf()) {
        Matrix& D = H.nodes[id].dense;
        for (int i = 0; i < nd.size; ++i) {
            double* di = D.row(i);
            const double* ui = U.row(urow0 + i);
            for (int j = 0; j < nd.size; ++j) {
                const double* vj = V.row(vrow0 + j);
                double s = 0.0;
                for (int t = 0; t < k; ++t) s += ui[t] * vj[t];
                di[j] += s;
            }
        }
        return;
    }
    const int s1 = H.tree->nodes[nd.left].size;
    const int s2 = H.tree->nodes[nd.right].size;
    LowRankBlock inj_up{U.block(urow0, 0, s1, k), V.block(vrow0 + s1, 0, s2, k)};
    H.nodes[id].upper = truncate(lr_concat(H.nodes[id].upper, inj_up), eps);
    LowRankBlock inj_lo{U.block(urow0 + s1, 0, s2, k), V.block(vrow0, 0, s1, k)};
    H.nodes[id].lower = truncate(lr_concat(H.nodes[id].lower, inj_lo), eps);
    add_lowrank_rec(H, nd.left, U, urow0, V, vrow0, eps);
    add_lowrank_rec(H, nd.right, U, urow0 + s1, V, vrow0 + s1, eps);
}

} // namespace hodlr_detail

// H(id-subtree) += B (block-local low-rank contribution).
inline void add_lowrank_into(HodlrMatrix& H, int id, const LowRankBlock& B, double eps) {
    if (B.rank() == 0) return;
    hodlr_detail::add_lowrank_rec(H, id, B.U, 0, B.V, 0, eps);
}

namespace hodlr_detail {

inline void multiply_rec(const HodlrMatrix& A, const HodlrMatrix& B, HodlrMatrix& C, int id,
                         double eps) {
    const auto& nd = A.tree->nodes[id];
    if (nd.leaf()) {
        C.nodes[id].dense = matmul(A.nodes[id].dense, B.nodes[id].dense);
        return;
    }
    const int l = nd.left, r = nd.right;
    const auto& a12 = A.nodes[id].upper;
    const auto& a21 = A.nodes[id].lower;
    const auto& b12 = B.nodes[id].upper;
    const auto& b21 = B.nodes[id].lower;

    // C11 = A11*B11 + A12*B21
    multiply_rec(A, B, C, l, eps);
    add_lowrank_into(C, l, truncate(lr_multiply(a12, b21), eps), eps);
    // C22 = A22*B22 + A21*B12
    multiply_rec(A, B, C, r, eps);
    add_lowrank_into(C, r, truncate(lr_multiply(a21, b12), eps), eps);

    // C12 = A11*B12 + A12*B22
    LowRankBlock t1 = b12.rank() ? LowRankBlock{h_apply_sub(A, l, b12.U), b12.V}
                                 : LowRankBlock::zero(a12.rows(), a12.cols());
    LowRankBlock t2 = a12.rank() ? LowRankBlock{a12.U, h_applyT_sub(B, r, a12.V)}
                                 : LowRankBlock::zero(a12.rows(), a12.cols());
    C.nodes[id].upper = truncate(lr_concat(t1, t2), eps);

    // C21 = A21*B11 + A22*B21
    LowRankBlock u1 = a21.rank() ? LowRankBlock{a21.U, h_applyT_sub(B, l, a21.V)}
                                 : LowRankBlock::zero(a21.rows(), a21.cols());
    LowRankBlock u2 = b21.rank() ? LowRankBlock{h_apply_sub(A, r, b21.U), b21.V}
                                 : LowRankBlock::zero(a21.rows(), a21.cols());
    C.nodes[id].lower = truncate(lr_concat(u1, u2), eps);
}

} // namespace hodlr_detail

inline HodlrMatrix hodlr_multiply(const HodlrMatrix& A, const HodlrMatrix& B, double eps) {
    check_same_tree(A, B, "hodlr_multiply");
    HodlrMatrix C(A.tree);
    hodlr_detail::multiply_rec(A, B, C, 0, eps);
    return C;
}

namespace hodlr_detail {

// Z = W^{-T} X on the subtree at `id` (forward solve, W upper triangular).
inline void solve_WT_rec(const HodlrMatrix& W, int id, Matrix& X, int base) {
    const auto& nd = W.tree->nodes[id];
    const int l0 = nd.begin - base;
    if (nd.leaf()) {
        const Matrix Rt = transpose(W.nodes[id].dense);
        const int m = X.cols();
        for (int r = 0; r < nd.size; ++r) {
            double* xr = X.row(l0 + r);
            const double* rr = Rt.row(r); // column r of R
            for (int k = 0; k < r; ++k) {
                const double c = rr[k];
                if (c == 0.0) continue;
                const double* xk = X.row(l0 + k);
                for (int j = 0; j < m; ++j) xr[j] -= c * xk[j];
            }
            const double d = rr[r];
            if (d == 0.0) throw SingularMatrixError("hodlr triangular solve: zero diagonal");
            const double inv = 1.0 / d;
            for (int j = 0; j < m; ++j) xr[j] *= inv;
        }
        return;
    }
    solve_WT_rec(W, nd.left, X, base);
    const auto& c12 = W.nodes[id].upper;
    const int midl = W.tree->nodes[nd.right].begin - base;
    if (c12.rank() > 0) {
        Matrix T = gemm_tn_rows(c12.U, X, l0); // U^T X1
        scale(T, -1.0);
        gemm_acc_rows(c12.V, T, 0, X, midl); // X2 -= V (U^T X1)
    }
    solve_WT_rec(W, nd.right, X, base);
}

// Z = W^{-1} X on the subtree at `id` (back solve, W upper triangular).
inline void solve_W_rec(const HodlrMatrix& W, int id, Matrix& X, int base) {
    const auto& nd = W.tree->nodes[id];
    const int l0 = nd.begin - base;
    if (nd.leaf()) {
        const Matrix& R = W.nodes[id].dense;
        const int m = X.cols();
        for (int r = nd.size - 1; r >= 0; --r) {
            double* xr = X.row(l0 + r);
            const double* rr = R.row(r);
            for (int k = r + 1; k < nd.size; ++k) {
                const double c = rr[k];
                if (c == 0.0) continue;
                const double* xk = X.row(l0 + k);
                for (int j = 0; j < m; ++j) xr[j] -= c * xk[j];
            }
            const double d = rr[r];
            if (d == 0.0) throw SingularMatrixError("hodlr triangular solve: zero diagonal");
            const double inv = 1.0 / d;
            for (int j = 0; j < m; ++j) xr[j] *= inv;
        }
        return;
    }
    solve_W_rec(W, nd.right, X, base);
    const auto& c12 = W.nodes[id].upper;
    const int midl = W.tree->nodes[nd.right].begin - base;
    if (c12.rank() > 0) {
        Matrix T = gemm_tn_rows(c12.V, X, midl); // V^T X2
        scale(T, -1.0);
        gemm_acc_rows(c12.U, T, 0, X, l0); // X1 -= U (V^T X2)
    }
    solve_W_rec(W, nd.left, X, base);
}

} // namespace hodlr_detail

// W^T Z = X with W upper triangular in HODLR form; X holds block-local rows
// of the subtree at `id`.
inline Matrix h_solve_WT_left(const HodlrMatrix& W, int id, Matrix X) {
    hodlr_detail::solve_WT_rec(W, id, X, W.tree->nodes[id].begin);
    return X;
}

// W Z = X, same conventions.
inline Matrix h_solve_W_left(const HodlrMatrix& W, int id, Matrix X) {
    hodlr_detail::solve_W_rec(W, id, X, W.tree->nodes[id].begin);
    return X;
}

namespace hodlr_detail {

inline void cholesky_rec(HodlrMatrix& M, HodlrMatrix& W, int id, double eps) {
    const auto& nd = M.tree->nodes[id];
    if (nd.leaf()) {
        try {
            W.nodes[id].dense = cholesky_upper(M.nodes[id].dense);
        } catch (const NotPositiveDefiniteError&) {
            throw NotPositiveDefiniteError("hodlr_cholesky: leaf factorization failed");
        }
        return;
    }
    cholesky_rec(M, W, nd.left, eps);
    const auto& m12 = M.nodes[id].upper;
    LowRankBlock b12 = m12.rank() ? LowRankBlock{h_solve_WT_left(W, nd.left, m12.U), m12.V}
                                  : LowRankBlock::zero(m12.rows(), m12.cols());
    b12 = truncate(b12, eps);
    // Schur complement: M22 -= B12^T B12 = V (Z^T Z) V^T
    if (b12.rank() > 0) {
        Matrix G = matmul_tn(b12.U, b12.U);
        scale(G, -1.0);
        add_lowrank_into(M, nd.right, LowRankBlock{matmul(b12.V, G), b12.V}, eps);
    }
    W.nodes[id].upper = std::move(b12);
    cholesky_rec(M, W, nd.right, eps);
}

} // namespace hodlr_detail

// Upper-triangular HODLR Cholesky factor W with W^T W ~= M. Throws
// NotPositiveDefiniteError when a dense leaf factorization fails.
inline HodlrMatrix hodlr_cholesky(const HodlrMatrix& M, double eps) {
    HodlrMatrix work = M;
    HodlrMatrix W(M.tree);
    hodlr_detail::cholesky_rec(work, W, 0, eps);
    return W;
}

namespace hodlr_detail {

// Y W = B (B is consumed as workspace).
inline void solve_ur_rec(HodlrMatrix& B, const HodlrMatrix& W, HodlrMatrix& Y, int id, double eps) {
    const auto& nd = B.tree->nodes[id];
    if (nd.leaf()) {
        Y.nodes[id].dense = solve_right_upper(W.nodes[id].dense, B.nodes[id].dense);
        return;
    }
    const int l = nd.left, r = nd.right;
    const auto& c12 = W.nodes[id].upper;

    solve_ur_rec(B, W, Y, l, eps);
    // Y21 = B21 W11^{-1}
    const auto& b21 = B.nodes[id].lower;
    Y.nodes[id].lower = b21.rank() ? LowRankBlock{b21.U, h_solve_WT_left(W, l, b21.V)}
                                   : LowRankBlock::zero(b21.rows(), b21.cols());
    // Y12 = (B12 - Y11 C12) W22^{-1}
    LowRankBlock t = c12.rank() ? LowRankBlock{h_apply_sub(Y, l, c12.U), c12.V}
                                : LowRankBlock::zero(c12.rows(), c12.cols());
    LowRankBlock rhs = truncate(lr_concat(B.nodes[id].upper, lr_scaled(t, -1.0)), eps);
    Y.nodes[id].upper = rhs.rank() ? LowRankBlock{rhs.U, h_solve_WT_left(W, r, rhs.V)}
                                   : LowRankBlock::zero(rhs.rows(), rhs.cols());
    // Y22 = (B22 - Y21 C12) W22^{-1}
    if (Y.nodes[id].lower.rank() > 0 && c12.rank() > 0)
        add_lowrank_into(B, r, lr_scaled(truncate(lr_multiply(Y.nodes[id].lower, c12), eps), -1.0),
                         eps);
    solve_ur_rec(B, W, Y, r, eps);
}

// Y W^T = B (B is consumed as workspace).
inline void solve_urt_rec(HodlrMatrix& B, const HodlrMatrix& W, HodlrMatrix& Y, int id,
                          double eps) {
    const auto& nd = B.tree->nodes[id];
    if (nd.leaf()) {
        Y.nodes[id].dense = solve_right_upperT(W.nodes[id].dense, B.nodes[id].dense);
        return;
    }
    const int l = nd.left, r = nd.right;
    const auto& c12 = W.nodes[id].upper;

    // Y12 = B12 W22^{-T}
    const auto& b12 = B.nodes[id].upper;
    Y.nodes[id].upper = b12.rank() ? LowRankBlock{b12.U, h_solve_W_left(W, r, b12.V)}
                                   : LowRankBlock::zero(b12.rows(), b12.cols());
    // Y22 W22^T = B22
    solve_urt_rec(B, W, Y, r, eps);
    // Y11 = (B11 - Y12 C12^T) W11^{-T}
    if (Y.nodes[id].upper.rank() > 0 && c12.rank() > 0)
        add_lowrank_into(
            B, l,
            lr_scaled(truncate(lr_multiply(Y.nodes[id].upper, lr_transpose(c12)), eps), -1.0),
            eps);
    solve_urt_rec(B, W, Y, l, eps);
    // Y21 = (B21 - Y22 C12^T) W11^{-T}
    LowRankBlock t = c12.rank() ? LowRankBlock{h_apply_sub(Y, r, c12.V), c12.U}
                                : LowRankBlock::zero(c12.cols(), c12.rows());
    LowRankBlock rhs = truncate(lr_concat(B.nodes[id].lower, lr_scaled(t, -1.0)), eps);
    Y.nodes[id].lower = rhs.rank() ? LowRankBlock{rhs.U, h_solve_W_left(W, l, rhs.V)}
                                   : LowRankBlock::zero(rhs.rows(), rhs.cols());
}

} // namespace hodlr_detail

// Solve Y*W = B for upper-triangular HODLR W.
inline HodlrMatrix solve_upper_right(const HodlrMatrix& B, const HodlrMatrix& W, double eps) {
    check_same_tree(B, W, "solve_upper_right");
    HodlrMatrix work = B;
    HodlrMatrix Y(B.tree);
    hodlr_detail::solve_ur_rec(work, W, Y, 0, eps);
    return Y;
}

// Solve Y*W^T = B for upper-triangular HODLR W.
inline HodlrMatrix solve_upperT_right(const HodlrMatrix& B, const HodlrMatrix& W, double eps) {
    check_same_tree(B, W, "solve_upperT_right");
    HodlrMatrix work = B;
    HodlrMatrix Y(B.tree);
    hodlr_detail::solve_urt_rec(work, W, Y, 0, eps);
    return Y;
}

inline double hodlr_trace(const HodlrMatrix& H) {
    double t = 0.0;
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id)
        if (H.tree->nodes[id].leaf()) t += trace(H.nodes[id].dense);
    return t;
}

// Recompress every off-diagonal block at tolerance eps.
inline void hodlr_retruncate(HodlrMatrix& H, double eps) {
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        if (H.tree->nodes[id].leaf()) continue;
        H.nodes[id].upper = truncate(H.nodes[id].upper, eps);
        H.nodes[id].lower = truncate(H.nodes[id].lower, eps);
    }
}

struct HodlrDiagnostics {
    int max_offdiag_rank = 0;
    std::size_t memory_bytes = 0;
};

inline HodlrDiagnostics diagnostics(const HodlrMatrix& H) {
    HodlrDiagnostics d;
    std::size_t entries = 0;
    for (std::size_t id = 0; id < H.tree->nodes.size(); ++id) {
        if (H.tree->nodes[id].leaf()) {
            const auto& D = H.nodes[id].dense;
            entries += static_cast<std::size_t>(D.rows()) * D.cols();
        } else {
            for (const LowRankBlock* B : {&H.nodes[id].upper, &H.nodes[id].lower}) {
                d.max_offdiag_rank = std::max(d.max_offdiag_rank, B->rank());
                entries += static_cast<std::size_t>(B->rank()) * (B->rows() + B->cols());
            }
        }
    }
    d.memory_bytes = entries * sizeof(double);
    return d;
}

} // namespace specproj
