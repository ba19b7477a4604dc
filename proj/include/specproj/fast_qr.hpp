#pragma once

// Structured QR factorization of the stacked matrix [cA; I] for a symmetric
// b-banded A. The reduction emits exactly 3n-2 rotations for tridiagonal A
// and (2b+1)n - b^2 - b rotations in general; identity rotations for
// already-zero targets are generated and counted so that replay schedules
// are fixed. Q1 = Q(1:n,1:n) and Q2 = Q(n+1:2n,1:n) are assembled directly
// in HODLR form: each upper off-diagonal block tracks the 2b-dimensional
// spanning basis (columns k+1..k+b, the first auxiliary column, and
// auxiliary columns n+k+1..n+k+b-1, restricted to the block rows) and all
// later rotations act on coefficient vectors only.

#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "specproj/banded.hpp"
#include "specproj/givens.hpp"
#include "specproj/hodlr.hpp"
#include "specproj/tree.hpp"

namespace specproj {

// Upper-triangular banded matrix: diags[d][i] = R(i, i+d).
struct UpperBanded {
    int n = 0;
    int ku = 0;
    std::vector<std::vector<double>> diags;

    UpperBanded() = default;
    UpperBanded(int n_, int ku_) : n(n_), ku(ku_), diags(ku_ + 1) {
        for (int d = 0; d <= ku; ++d) diags[d].assign(std::max(0, n - d), 0.0);
    }

    double at(int i, int j) const {
        const int d = j - i;
        if (d < 0 || d > ku) return 0.0;
        return diags[d][i];
    }
};

inline Matrix to_dense(const UpperBanded& R) {
    Matrix M(R.n, R.n);
    for (int d = 0; d <= R.ku; ++d)
        for (int i = 0; i + d < R.n; ++i) M(i, i + d) = R.diags[d][i];
    return M;
}

namespace fastqr_detail {

// Working storage for the regular rows: row i covers columns [i-b, i+2b].
class RegWork {
public:
    RegWork(const BandedSymmetric& A) : n_(A.n), b_(A.b), w_(3 * A.b + 1) {
        a_.assign(static_cast<std::size_t>(n_) * w_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = std::max(0, i - b_); k <= std::min(n_ - 1, i + b_); ++k)
                at(i, k) = A.at(i, k);
    }

    double& at(int i, int k) { return a_[static_cast<std::size_t>(i) * w_ + (k - i + b_)]; }
    double at(int i, int k) const { return a_[static_cast<std::size_t>(i) * w_ + (k - i + b_)]; }

    UpperBanded extract_upper(int ku) const {
        UpperBanded R(n_, ku);
        for (int d = 0; d <= ku; ++d)
            for (int i = 0; i + d < n_; ++i) R.diags[d][i] = at(i, i + d);
        return R;
    }

private:
    int n_, b_, w_;
    std::vector<double> a_;
};

} // namespace fastqr_detail

// Fast QR reduction of [cA; I] for banded symmetric cA (Algorithm for
// general bandwidth): per column, the auxiliary row is cleaned first, then
// the identity coupling, then the subdiagonal of cA.
inline std::pair<GivensSequence, UpperBanded> reduce_banded(const BandedSymmetric& cA) {
    const int n = cA.n, b = cA.b;
    fastqr_detail::RegWork R(cA);
    std::vector<double> rowN(n, 0.0); // stacked row n (first auxiliary row)
    rowN[0] = 1.0;
    std::vector<double> auxdiag(n, 1.0); // (n+t, t) entries
    std::vector<std::vector<double>> junk; // row n+t fill at columns [t+1, t+b-1]
    if (b > 1) junk.assign(n, std::vector<double>(b - 1, 0.0));

    GivensSequence seq;
    seq.nrows = 2 * n;
    seq.rotations.reserve(static_cast<std::size_t>(2 * b + 1) * n);

    auto push = [&](int i, int j, double f, double g) {
        const GivensTriple t = make_givens(f, g);
        seq.rotations.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                 t.c, t.s});
        return t;
    };
    auto jk = [&](int t, int k) -> double& { return junk[t][k - (t + 1)]; };

    // step 0: beta_1 then the gamma group of column 0
    {
        const GivensTriple g = push(0, n, R.at(0, 0), rowN[0]);
        R.at(0, 0) = g.c * R.at(0, 0) + g.s * rowN[0];
        rowN[0] = 0.0;
        for (int k = 1; k <= std::min(n - 1, b); ++k) {
            const double x = R.at(0, k), y = rowN[k];
            R.at(0, k) = g.c * x + g.s * y;
            rowN[k] = -g.s * x + g.c * y;
        }
        for (int j = 1; j <= std::min(n - 1, b); ++j) {
            const GivensTriple t = push(0, j, R.at(0, 0), R.at(j, 0));
            for (int k = 0; k <= std::min(n - 1, 2 * b); ++k) {
                const double x = R.at(0, k), y = R.at(j, k);
                R.at(0, k) = t.c * x + t.s * y;
                R.at(j, k) = -t.s * x + t.c * y;
            }
            R.at(j, 0) = 0.0;
        }
    }

    for (int t = 1; t < n; ++t) {
        // alpha_{t,t}: rows (n, n+t)
        {
            const GivensTriple g = push(n, n + t, rowN[t], auxdiag[t]);
            rowN[t] = g.c * rowN[t] + g.s * auxdiag[t];
            auxdiag[t] = 0.0;
            for (int k = t + 1; k <= std::min(n - 1, t + b - 1); ++k) {
                const double x = rowN[k], y = jk(t, k);
                rowN[k] = g.c * x + g.s * y;
                jk(t, k) = -g.s * x + g.c * y;
            }
        }
        // alpha_{t,j}: rows (n+j, n+t), j = t+1 .. min(n-1, t+b-1)
        for (int j = t + 1; j <= std::min(n - 1, t + b - 1); ++j) {
            const GivensTriple g = push(n + j, n + t, auxdiag[j], jk(t, j));
            auxdiag[j] = g.c * auxdiag[j] + g.s * jk(t, j);
            jk(t, j) = 0.0;
            for (int k = j + 1; k <= std::min(n - 1, t + b - 1); ++k) {
                const double x = jk(j, k), y = jk(t, k);
                jk(j, k) = g.c * x + g.s * y;
                jk(t, k) = -g.s * x + g.c * y;
            }
        }
        // beta_t: rows (t, n)
        {
            const GivensTriple g = push(t, n, R.at(t, t), rowN[t]);
            R.at(t, t) = g.c * R.at(t, t) + g.s * rowN[t];
            rowN[t] = 0.0;
            for (int k = t + 1; k <= std::min(n - 1, t + b); ++k) {
                const double x = R.at(t, k), y = rowN[k];
                R.at(t, k) = g.c * x + g.s * y;
                rowN[k] = -g.s * x + g.c * y;
            }
        }
        // gamma_{t,j}: rows (t, j), j = t+1 .. min(n-1, t+b)
        for (int j = t + 1; j <= std::min(n - 1, t + b); ++j) {
            const GivensTriple g = push(t, j, R.at(t, t), R.at(j, t));
            for (int k = t; k <= std::min(n - 1, t + 2 * b); ++k) {
                const double x = R.at(t, k), y = R.at(j, k);
                R.at(t, k) = g.c * x + g.s * y;
                R.at(j, k) = -g.s * x + g.c * y;
            }
            R.at(j, t) = 0.0;
        }
    }

    return {std::move(seq), R.extract_upper(2 * b)};
}

// Fast QR reduction of [cA; I] for tridiagonal cA: rotation order beta_1,
// gamma_1, then per column alpha_i, beta_i, gamma_i (gamma skipped in the
// last column); 3n-2 rotations in total.
inline std::pair<GivensSequence, UpperBanded> reduce_tridiag(const BandedSymmetric& cA) {
    if (cA.b != 1) throw std::invalid_argument("reduce_tridiag: bandwidth 1 required");
    const int n = cA.n;
    fastqr_detail::RegWork R(cA);
    std::vector<double> rowN(n, 0.0);
    rowN[0] = 1.0;
    std::vector<double> auxdiag(n, 1.0);

    GivensSequence seq;
    seq.nrows = 2 * n;
    seq.rotations.reserve(3 * static_cast<std::size_t>(n));
    auto push = [&](int i, int j, double f, double g) {
        const GivensTriple t = make_givens(f, g);
        seq.rotations.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                 t.c, t.s});
        return t;
    };
    auto mix_reg = [&](int t, int j, const GivensTriple& g) {
        for (int k = t; k <= std::min(n - 1, t + 2); ++k) {
            const double x = R.at(t, k), y = R.at(j, k);
            R.at(t, k) = g.c * x + g.s * y;
            R.at(j, k) = -g.s * x + g.c * y;
        }
        R.at(j, t) = 0.0;
    };

    {
        const GivensTriple g = push(0, n, R.at(0, 0), rowN[0]);
        R.at(0, 0) = g.c * R.at(0, 0) + g.s * rowN[0];
        rowN[0] = 0.0;
        if (n > 1) {
            const double x = R.at(0, 1);
            R.at(0, 1) = g.c * x;
            rowN[1] = -g.s * x;
        }
        const GivensTriple t = push(0, 1, R.at(0, 0), R.at(1, 0));
        mix_reg(0, 1, t);
    }
    for (int t = 1; t < n; ++t) {
        const GivensTriple a = push(n, n + t, rowN[t], auxdiag[t]);
        rowN[t] = a.c * rowN[t] + a.s * auxdiag[t];
        auxdiag[t] = 0.0;
        const GivensTriple be = push(t, n, R.at(t, t), rowN[t]);
        R.at(t, t) = be.c * R.at(t, t) + be.s * rowN[t];
        rowN[t] = 0.0;
        if (t + 1 < n) {
            const double x = R.at(t, t + 1), y = rowN[t + 1];
            R.at(t, t + 1) = be.c * x + be.s * y;
            rowN[t + 1] = -be.s * x + be.c * y;
            const GivensTriple ga = push(t, t + 1, R.at(t, t), R.at(t + 1, t));
            mix_reg(t, t + 1, ga);
        }
    }

    return {std::move(seq), R.extract_upper(2)};
}

namespace fastqr_detail {

struct LiveColumn {
    std::vector<double> v; // length 2n
    int hi_reg = -1;       // nonzero regular rows are [0, hi_reg]
    int hi_aux = -1;       // nonzero auxiliary rows are [n, n+hi_aux]
    bool active = false;
};

// Per-node coefficient tracker for the upper off-diagonal blocks of Q1/Q2.
struct NodeTracker {
    int node_id = -1;
    int cs = 0;       // first block column (global)
    int s2 = 0;       // number of block columns
    int p = 0;        // block rows (left child size)
    int dim = 0;      // basis dimension, 2b
    long start = -1;  // snapshot after this rotation index
    long finish = -1; // extract after this rotation index
    Matrix basis_q1;  // p x dim
    Matrix basis_q2;  // p x dim
    Matrix reg_coeff; // tracked regular columns cs..cs+s2+b-1 (rows) x dim
    Matrix aux_coeff; // tracked auxiliary columns n+cs..n+cs+s2+b-2 x dim
    std::vector<double> auxN_coeff; // column n

    bool wants(int col, int n) const {
        if (col < n) return col >= cs && col - cs < reg_coeff.rows();
        if (col == n) return true;
        return col - n >= cs && col - n - cs < aux_coeff.rows();
    }

    double* coeff_for(int col, int n) {
        if (col < n) return reg_coeff.row(col - cs);
        if (col == n) return auxN_coeff.data();
        return aux_coeff.row(col - n - cs);
    }
};

} // namespace fastqr_detail

// HODLR assembly of Q1 and Q2 from the rotation sequence of
// reduce_tridiag/reduce_banded.
inline std::pair<HodlrMatrix, HodlrMatrix> assemble_q(const GivensSequence& seq,
                                                      std::shared_ptr<const PartitionTree> tree,
                                                      int b) {
    const int n = tree->n;
    if (seq.nrows != 2 * n) throw std::invalid_argument("assemble_q: sequence/tree size mismatch");
    const int dim = 2 * b;
    const long nrot = static_cast<long>(seq.rotations.size());

    // last rotation touching each stacked column
    std::vector<long> last_touch(2 * n, -1);
    for (long r = 0; r < nrot; ++r) {
        const auto& g = seq.rotations[r];
        if (g.i >= static_cast<std::uint32_t>(2 * n) || g.j >= static_cast<std::uint32_t>(2 * n) ||
            g.i == g.j)
            throw std::invalid_argument("assemble_q: malformed sequence");
        last_touch[g.i] = r;
        last_touch[g.j] = r;
    }

    HodlrMatrix q1(tree), q2(tree);

    // trackers, triggered when their boundary column becomes final
    std::vector<fastqr_detail::NodeTracker> trackers;
    std::vector<std::vector<int>> snap_at(nrot + 1);   // rotation index -> tracker ids
    std::vector<std::vector<int>> finish_at(nrot + 1); // rotation index -> tracker ids
    for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
        const auto& nd = tree->nodes[id];
        if (nd.leaf()) continue;
        fastqr_detail::NodeTracker t;
        t.node_id = static_cast<int>(id);
        t.cs = tree->nodes[nd.right].begin;
        t.s2 = tree->nodes[nd.right].size;
        t.p = tree->nodes[nd.left].size;
        t.dim = dim;
        t.start = t.cs > 0 ? last_touch[t.cs - 1] : -1;
        t.finish = last_touch[t.cs + t.s2 - 1];
        trackers.push_back(std::move(t));
    }
    for (std::size_t k = 0; k < trackers.size(); ++k) {
        snap_at[trackers[k].start + 1].push_back(static_cast<int>(k));
        finish_at[trackers[k].finish + 1].push_back(static_cast<int>(k));
    }

    // leaf lookup and lower-block entry collection
    std::vector<int> leaf_of(n, 0);
    for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
        const auto& nd = tree->nodes[id];
        if (nd.leaf())
            for (int i = nd.begin; i < nd.begin + nd.size; ++i) leaf_of[i] = static_cast<int>(id);
    }
    struct LowerEntry {
        int rl, cl;
        double v;
    };
    std::vector<std::vector<LowerEntry>> lower_entries(tree->nodes.size());

    std::vector<fastqr_detail::LiveColumn> live(2 * n);
    auto materialize = [&](int col) {
        auto& L = live[col];
        if (L.active) return;
        L.active = true;
        L.v.assign(2 * n, 0.0);
        L.v[col] = 1.0;
        if (col < n) {
            L.hi_reg = col;
            L.hi_aux = -1;
        } else {
            L.hi_reg = -1;
            L.hi_aux = col - n;
        }
    };

    auto snapshot = [&](int tk) {
        auto& t = trackers[tk];
        t.basis_q1 = Matrix(t.p, dim);
        t.basis_q2 = Matrix(t.p, dim);
        const int row0 = tree->nodes[t.node_id].begin;
        auto fill = [&](int col, int which) {
            if (col >= 2 * n) return;
            const auto& L = live[col];
            if (!L.active) return; // still a unit vector with support outside the block
            for (int i = 0; i < t.p; ++i) {
                t.basis_q1(i, which) = L.v[row0 + i];
                t.basis_q2(i, which) = L.v[n + row0 + i];
            }
        };
        // basis: regular columns cs..cs+b-1 in slots 0..b-1, the first
        // auxiliary column in slot b, auxiliary columns n+cs..n+cs+b-2 in
        // slots b+1..2b-1
        for (int j = 0; j < b; ++j) fill(t.cs + j < n ? t.cs + j : 2 * n, j);
        fill(n, b);
        for (int j = 0; j + 1 < b; ++j)
            fill(t.cs + j < n ? n + t.cs + j : 2 * n, b + 1 + j);
        const int reg_rows = std::min(n, t.cs + t.s2 + b) - t.cs;
        t.reg_coeff = Matrix(std::max(reg_rows, 0), dim);
        for (int j = 0; j < std::min(b, reg_rows); ++j) t.reg_coeff(j, j) = 1.0;
        const int aux_rows = std::min(n, t.cs + t.s2 + b - 1) - t.cs;
        t.aux_coeff = Matrix(std::max(aux_rows, 0), dim);
        t.auxN_coeff.assign(dim, 0.0);
        t.auxN_coeff[b] = 1.0;
        for (int j = 0; j + 1 < b && j < aux_rows; ++j) t.aux_coeff(j, b + 1 + j) = 1.0;
    };

    auto finish = [&](int tk) {
        auto& t = trackers[tk];
        Matrix V(t.s2, dim);
        for (int j = 0; j < t.s2; ++j)
            for (int d = 0; d < dim; ++d) V(j, d) = t.reg_coeff(j, d);
        q1.nodes[t.node_id].upper =
            hodlr_detail::trim_zero_columns(t.basis_q1, V, false);
        q1.nodes[t.node_id].upper =
            hodlr_detail::trim_zero_columns(std::move(q1.nodes[t.node_id].upper.U),
                                            std::move(q1.nodes[t.node_id].upper.V), true);
        q2.nodes[t.node_id].upper = hodlr_detail::trim_zero_columns(t.basis_q2, V, false);
        q2.nodes[t.node_id].upper =
            hodlr_detail::trim_zero_columns(std::move(q2.nodes[t.node_id].upper.U),
                                            std::move(q2.nodes[t.node_id].upper.V), true);
        t.reg_coeff = Matrix();
        t.aux_coeff = Matrix();
    };

    // dispatch a finalized regular column into leaves and lower blocks
    auto dispatch = [&](int j) {
        const auto& L = live[j];
        const int lid = leaf_of[j];
        const auto& leaf = tree->nodes[lid];
        const int jl = j - leaf.begin;
        if (L.active) {
            for (int r = leaf.begin; r < leaf.begin + leaf.size; ++r)
                if (r <= std::min(n - 1, j + b)) q1.nodes[lid].dense(r - leaf.begin, jl) = L.v[r];
            for (int r = leaf.begin; r <= std::min(leaf.begin + leaf.size - 1, j); ++r)
                q2.nodes[lid].dense(r - leaf.begin, jl) = L.v[n + r];
            // rows below the leaf belong to lower off-diagonal blocks
            for (int r = leaf.begin + leaf.size; r <= std::min(n - 1, j + b); ++r) {
                if (L.v[r] == 0.0) continue;
                int id = 0;
                while (true) {
                    const auto& nd = tree->nodes[id];
                    const int mid = tree->nodes[nd.right].begin;
                    if (j < mid && r >= mid) {
                        lower_entries[id].push_back({r - mid, j - nd.begin, L.v[r]});
                        break;
                    }
                    id = r < mid ? nd.left : nd.right;
                }
            }
        } else {
            // untouched unit column
            q1.nodes[lid].dense(jl, jl) = 1.0;
        }
    };

    // main replay
    std::vector<int> active_trackers;
    auto refresh_active = [&](long r) {
        active_trackers.clear();
        for (std::size_t k = 0; k < trackers.size(); ++k)
            if (trackers[k].start < r && r <= trackers[k].finish)
                active_trackers.push_back(static_cast<int>(k));
    };

    for (long r = 0; r <= nrot; ++r) {
        for (int tk : snap_at[r]) snapshot(tk);
        for (int tk : finish_at[r]) finish(tk);
        if (r == nrot) break;
        if (r == 0 || !snap_at[r].empty() || !finish_at[r].empty()) refresh_active(r);

        const auto& g = seq.rotations[r];
        const int ci = static_cast<int>(g.i), cj = static_cast<int>(g.j);
        materialize(ci);
        materialize(cj);
        auto& A = live[ci];
        auto& B = live[cj];
        const int hr = std::max(A.hi_reg, B.hi_reg);
        for (int k = 0; k <= hr; ++k) {
            const double x = A.v[k], y = B.v[k];
            A.v[k] = g.c * x + g.s * y;
            B.v[k] = -g.s * x + g.c * y;
        }
        const int ha = std::max(A.hi_aux, B.hi_aux);
        for (int k = n; k <= n + ha; ++k) {
            const double x = A.v[k], y = B.v[k];
            A.v[k] = g.c * x + g.s * y;
            B.v[k] = -g.s * x + g.c * y;
        }
        A.hi_reg = B.hi_reg = hr;
        A.hi_aux = B.hi_aux = ha;

        for (int tk : active_trackers) {
            auto& t = trackers[tk];
            const bool wi = t.wants(ci, n), wj = t.wants(cj, n);
            if (!wi && !wj) continue;
            if (wi != wj) throw std::invalid_argument("assemble_q: rotation crosses tracked set");
            double* a = t.coeff_for(ci, n);
            double* bb = t.coeff_for(cj, n);
            for (int d = 0; d < dim; ++d) {
                const double x = a[d], y = bb[d];
                a[d] = g.c * x + g.s * y;
                bb[d] = -g.s * x + g.c * y;
            }
        }

        // finalize columns whose last rotation this was
        for (int col : {ci, cj})
            if (col < n && last_touch[col] == r) {
                dispatch(col);
                live[col].v.clear();
                live[col].v.shrink_to_fit();
            }
    }
    // columns never touched by any rotation
    for (int j = 0; j < n; ++j)
        if (last_touch[j] < 0) dispatch(j);

    // build the lower blocks of Q1 from collected corner entries
    for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
        const auto& nd = tree->nodes[id];
        if (nd.leaf()) continue;
        const int s1 = tree->nodes[nd.left].size;
        const int s2 = tree->nodes[nd.right].size;
        const int k = std::min(b, std::min(s1, s2));
        if (lower_entries[id].empty() || k == 0) continue;
        Matrix U(s2, k), V(s1, k);
        for (int t = 0; t < k; ++t) U(t, t) = 1.0;
        for (const auto& e : lower_entries[id]) {
            if (e.rl >= k) throw std::logic_error("assemble_q: lower spill beyond bandwidth");
            V(e.cl, e.rl) = e.v;
        }
        q1.nodes[id].lower = hodlr_detail::trim_zero_columns(std::move(U), std::move(V), true);
    }
    return {std::move(q1), std::move(q2)};
}

// Symmetrized product Q1*Q2^T in HODLR format.
inline HodlrMatrix q1q2t(const HodlrMatrix& q1, const HodlrMatrix& q2, double eps) {
    check_same_tree(q1, q2, "q1q2t");
    HodlrMatrix M = hodlr_multiply(q1, hodlr_transpose(q2), eps);
    hodlr_symmetrize(M, eps);
    return M;
}

struct StackedQrResult {
    GivensSequence givens;
    UpperBanded R;
    HodlrMatrix q1, q2;
};

// Reduction + assembly with the bandwidth-1 dispatch of the driver.
inline StackedQrResult fast_stacked_qr(const BandedSymmetric& cA,
                                       std::shared_ptr<const PartitionTree> tree) {
    StackedQrResult out;
    auto [seq, R] = cA.b == 1 ? reduce_tridiag(cA) : reduce_banded(cA);
    out.givens = std::move(seq);
    out.R = std::move(R);
    auto [m1, m2] = assemble_q(out.givens, tree, cA.b);
    out.q1 = std::move(m1);
    out.q2 = std::move(m2);
    return out;
}

// Binary diagnostic dump: little-endian records (i:u32, j:u32, c:f64, s:f64).
inline void write_givens_binary(const std::string& path, const GivensSequence& seq) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_givens_binary: cannot open " + path);
    for (const auto& g : seq.rotations) {
        os.write(reinterpret_cast<const char*>(&g.i), 4);
        os.write(reinterpret_cast<const char*>(&g.j), 4);
        os.write(reinterpret_cast<const char*>(&g.c), 8);
        os.write(reinterpret_cast<const char*>(&g.s), 8);
    }
    if (!os) throw std::runtime_error("write_givens_binary: write failed");
}

} // namespace specproj
