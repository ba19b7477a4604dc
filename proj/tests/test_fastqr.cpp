#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "specproj/fast_qr.hpp"
#include "specproj/synth.hpp"

using namespace specproj;

namespace {

BandedSymmetric random_banded(int n, int b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    BandedSymmetric A(n, b);
    for (int d = 0; d <= b; ++d)
        for (int i = 0; i + d < n; ++i) A.bands[d][i] = dist(rng);
    return A;
}

Matrix stacked(const BandedSymmetric& cA) {
    Matrix S(2 * cA.n, cA.n);
    Matrix D = to_dense(cA);
    for (int i = 0; i < cA.n; ++i) {
        for (int j = 0; j < cA.n; ++j) S(i, j) = D(i, j);
        S(cA.n + i, i) = 1.0;
    }
    return S;
}

int numerical_rank(const Matrix& B, double thresh) {
    if (B.rows() == 0 || B.cols() == 0) return 0;
    std::vector<double> sv = singular_values(B);
    int r = 0;
    for (double s : sv)
        if (s > thresh) ++r;
    return r;
}

} // namespace

TEST(ReduceCounts, TridiagExactly3nMinus2) {
    for (int n = 2; n <= 64; ++n) {
        BandedSymmetric A = random_banded(n, 1, 100 + n);
        auto [seq, R] = reduce_tridiag(A);
        EXPECT_EQ(seq.size(), static_cast<std::size_t>(3 * n - 2)) << "n=" << n;
    }
}

TEST(ReduceCounts, BandedExactFormula) {
    for (int n = 2; n <= 64; ++n)
        for (int b = 1; b <= std::min(8, n - 1); ++b) {
            BandedSymmetric A = random_banded(n, b, 1000 + 13 * n + b);
            auto [seq, R] = reduce_banded(A);
            EXPECT_EQ(seq.size(), static_cast<std::size_t>((2 * b + 1) * n - b * b - b))
                << "n=" << n << " b=" << b;
        }
}

TEST(ReduceCounts, SpecExampleN6B3) {
    BandedSymmetric A = random_banded(6, 3, 7);
    auto [seq, R] = reduce_banded(A);
    EXPECT_EQ(seq.size(), 30u);
    BandedSymmetric T = random_banded(4, 1, 8);
    auto [seq1, R1] = reduce_banded(T);
    EXPECT_EQ(seq1.size(), 10u);
}

TEST(ReduceBanded, MatchesTridiagScheduleAtB1) {
    BandedSymmetric A = random_banded(12, 1, 11);
    auto [s1, r1] = reduce_tridiag(A);
    auto [s2, r2] = reduce_banded(A);
    ASSERT_EQ(s1.size(), s2.size());
    for (std::size_t k = 0; k < s1.size(); ++k) {
        EXPECT_EQ(s1.rotations[k].i, s2.rotations[k].i) << k;
        EXPECT_EQ(s1.rotations[k].j, s2.rotations[k].j) << k;
        EXPECT_EQ(s1.rotations[k].c, s2.rotations[k].c) << k;
        EXPECT_EQ(s1.rotations[k].s, s2.rotations[k].s) << k;
    }
}

TEST(ReduceBanded, ReplayYieldsUpperTriangular) {
    for (auto [n, b] : {std::pair{16, 1}, {16, 3}, {33, 5}, {20, 8}}) {
        BandedSymmetric A = random_banded(n, b, 17 * n + b);
        auto [seq, R] = reduce_banded(A);
        Matrix S = stacked(A);
        apply_to_rows(seq, S);
        const double scale = norm1(A) + 1.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i > j) EXPECT_NEAR(S(i, j), 0.0, 1e-13 * scale);
                EXPECT_NEAR(S(n + i, j), 0.0, 1e-13 * scale);
            }
        // replayed R matches the compact R
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) EXPECT_NEAR(S(i, j), R.at(i, j), 1e-13 * scale);
        // bandwidth of R is at most 2b
        for (int i = 0; i < n; ++i)
            for (int j = i + 2 * b + 1; j < n; ++j) EXPECT_EQ(R.at(i, j), 0.0);
    }
}

TEST(ReduceTridiag, TwoByTwoClosedForm) {
    // A = [[2,1],[1,2]]: R^T R = A^2 + I, R11 = sqrt(6), R12 = 4/sqrt(6),
    // R22 = sqrt(10/3), up to column sign convention
    BandedSymmetric A(2, 1);
    A.bands[0] = {2.0, 2.0};
    A.bands[1] = {1.0};
    auto [seq, R] = reduce_tridiag(A);
    EXPECT_NEAR(std::abs(R.at(0, 0)), std::sqrt(6.0), 1e-14);
    EXPECT_NEAR(std::abs(R.at(0, 1)), 4.0 / std::sqrt(6.0), 1e-14);
    EXPECT_NEAR(std::abs(R.at(1, 1)), std::sqrt(10.0 / 3.0), 1e-14);
}

TEST(ReduceTridiag, IdentityGivesSqrtTwo) {
    BandedSymmetric I(8, 1);
    for (int i = 0; i < 8; ++i) I.bands[0][i] = 1.0;
    auto [seq, R] = reduce_tridiag(I);
    for (int i = 0; i < 8; ++i) {
        EXPECT_NEAR(std::abs(R.at(i, i)), std::sqrt(2.0), 1e-14);
        for (int j = i + 1; j < 8; ++j) EXPECT_NEAR(R.at(i, j), 0.0, 1e-14);
    }
}

TEST(ReduceBanded, RtRIsASquaredPlusIdentity) {
    BandedSymmetric A = random_banded(32, 2, 23);
    auto [seq, R] = reduce_banded(A);
    Matrix Rd = to_dense(R);
    Matrix RtR = matmul_tn(Rd, Rd);
    Matrix D = to_dense(A);
    Matrix expect = matmul(D, D);
    for (int i = 0; i < 32; ++i) expect(i, i) += 1.0;
    EXPECT_LT(max_abs_diff(RtR, expect), 1e-12);
}

TEST(AssembleQ, MatchesDenseAccumulation) {
    for (auto [n, b, n_min] : {std::tuple{32, 2, 8}, {32, 1, 4}, {40, 5, 8}, {17, 3, 4}}) {
        BandedSymmetric A = random_banded(n, b, 29 * n + b);
        auto [seq, R] = b == 1 ? reduce_tridiag(A) : reduce_banded(A);
        auto tree = make_tree(n, n_min);
        auto [q1, q2] = assemble_q(seq, tree, b);
        Matrix Q = accumulate_q(seq);
        Matrix Q1d = Q.block(0, 0, n, n);
        Matrix Q2d = Q.block(n, 0, n, n);
        EXPECT_LT(max_abs_diff(to_dense(q1), Q1d), 1e-13) << "n=" << n << " b=" << b;
        EXPECT_LT(max_abs_diff(to_dense(q2), Q2d), 1e-13) << "n=" << n << " b=" << b;
    }
}

TEST(AssembleQ, OrthonormalColumns) {
    const int n = 32, b = 2;
    BandedSymmetric A = random_banded(n, b, 31);
    auto tree = make_tree(n, 8);
    StackedQrResult qr = fast_stacked_qr(A, tree);
    Matrix Q1 = to_dense(qr.q1), Q2 = to_dense(qr.q2);
    Matrix G = matmul_tn(Q1, Q1);
    add_scaled(G, 1.0, matmul_tn(Q2, Q2));
    EXPECT_LT(max_abs_diff(G, Matrix::identity(n)), 1e-13);
}

TEST(AssembleQ, StructuralZeroPatterns) {
    const int n = 40, b = 3;
    BandedSymmetric A = random_banded(n, b, 37);
    auto tree = make_tree(n, 8);
    StackedQrResult qr = fast_stacked_qr(A, tree);
    Matrix Q1 = to_dense(qr.q1), Q2 = to_dense(qr.q2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i > j + b) EXPECT_EQ(Q1(i, j), 0.0) << i << "," << j; // b-Hessenberg, exactly
            if (i > j) EXPECT_EQ(Q2(i, j), 0.0) << i << "," << j;     // upper triangular, exactly
        }
}

TEST(AssembleQ, FactorizationResidual) {
    const int n = 48, b = 4;
    BandedSymmetric A = random_banded(n, b, 41);
    auto tree = make_tree(n, 8);
    StackedQrResult qr = fast_stacked_qr(A, tree);
    Matrix Rd = to_dense(qr.R);
    Matrix D = to_dense(A);
    Matrix r1 = matmul(to_dense(qr.q1), Rd);
    add_scaled(r1, -1.0, D);
    EXPECT_LT(norm2(r1), 1e-12 * std::max(1.0, norm2(D)));
    Matrix r2 = matmul(to_dense(qr.q2), Rd);
    add_scaled(r2, -1.0, Matrix::identity(n));
    EXPECT_LT(norm2(r2), 1e-12);
}

TEST(AssembleQ, TridiagStoredRanks) {
    // n = 8, b = 1, n_min = 2: upper blocks of Q1 rank <= 2, lower <= 1;
    // Q2 lower blocks rank 0
    BandedSymmetric A = random_banded(8, 1, 43);
    auto [seq, R] = reduce_tridiag(A);
    auto tree = make_tree(8, 2);
    auto [q1, q2] = assemble_q(seq, tree, 1);
    for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
        if (tree->nodes[id].leaf()) continue;
        EXPECT_LE(q1.nodes[id].upper.rank(), 2);
        EXPECT_LE(q1.nodes[id].lower.rank(), 1);
        EXPECT_LE(q2.nodes[id].upper.rank(), 2);
        EXPECT_EQ(q2.nodes[id].lower.rank(), 0);
    }
}

TEST(AssembleQ, RankTheoremNumerical) {
    const int n = 64, b = 1;
    BandedSymmetric A = random_banded(n, b, 47);
    auto tree = make_tree(n, 8);
    StackedQrResult qr = fast_stacked_qr(A, tree);
    Matrix Q1 = to_dense(qr.q1), Q2 = to_dense(qr.q2);
    Matrix P = matmul_nt(Q1, Q2);
    for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
        const auto& nd = tree->nodes[id];
        if (nd.leaf()) continue;
        const int mid = tree->nodes[nd.right].begin;
        const int s1 = mid - nd.begin, s2 = nd.begin + nd.size - mid;
        for (const Matrix* M : {&Q1, &Q2, &P}) {
            EXPECT_LE(numerical_rank(M->block(nd.begin, mid, s1, s2), 1e-12), 2 * b);
            EXPECT_LE(numerical_rank(M->block(mid, nd.begin, s2, s1), 1e-12), 2 * b);
        }
    }
}

TEST(Q1Q2T, IdentityInput) {
    // for A = I: |Q1 Q2^T| = I/2 entrywise up to sign convention
    BandedSymmetric I(16, 1);
    for (int i = 0; i < 16; ++i) I.bands[0][i] = 1.0;
    auto tree = make_tree(16, 4);
    StackedQrResult qr = fast_stacked_qr(I, tree);
    HodlrMatrix M = q1q2t(qr.q1, qr.q2, 1e-14);
    Matrix D = to_dense(M);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            EXPECT_NEAR(std::abs(D(i, j)), i == j ? 0.5 : 0.0, 1e-14);
}

TEST(Q1Q2T, EqualsResolventFormula) {
    // Q1 Q2^T = A (A^2 + I)^{-1} for c = 1
    const int n = 32;
    BandedSymmetric A = random_banded(n, 1, 53);
    auto tree = make_tree(n, 8);
    StackedQrResult qr = fast_stacked_qr(A, tree);
    HodlrMatrix M = q1q2t(qr.q1, qr.q2, 1e-14);
    Matrix D = to_dense(A);
    Matrix Z = matmul(D, D);
    for (int i = 0; i < n; ++i) Z(i, i) += 1.0;
    Matrix expect = transpose(lu_solve(lu_factor(Z), D)); // (Z^{-1} A)^T = A Z^{-1}
    EXPECT_LT(max_abs_diff(to_dense(M), expect), 1e-12);
}

TEST(Q1Q2T, ExactProductRankBound) {
    const int n = 64, b = 1;
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(n, 1e-1);
    BandedSymmetric A = synth_banded(spec, b, 5);
    auto tree = make_tree(n, 8);
    StackedQrResult qr = fast_stacked_qr(A, tree);
    Matrix P = matmul_nt(to_dense(qr.q1), to_dense(qr.q2));
    for (std::size_t id = 0; id < tree->nodes.size(); ++id) {
        const auto& nd = tree->nodes[id];
        if (nd.leaf()) continue;
        const int mid = tree->nodes[nd.right].begin;
        EXPECT_LE(numerical_rank(P.block(nd.begin, mid, mid - nd.begin,
                                         nd.begin + nd.size - mid), 1e-12), 2);
    }
}

TEST(GivensBinaryDump, RecordLayout) {
    BandedSymmetric A = random_banded(6, 1, 59);
    auto [seq, R] = reduce_tridiag(A);
    const std::string path = "/tmp/specproj_test_givens.bin";
    write_givens_binary(path, seq);
    std::ifstream is(path, std::ios::binary);
    is.seekg(0, std::ios::end);
    EXPECT_EQ(static_cast<std::size_t>(is.tellg()), seq.size() * 24);
    is.seekg(0);
    std::uint32_t i0, j0;
    double c0, s0;
    is.read(reinterpret_cast<char*>(&i0), 4);
    is.read(reinterpret_cast<char*>(&j0), 4);
    is.read(reinterpret_cast<char*>(&c0), 8);
    is.read(reinterpret_cast<char*>(&s0), 8);
    EXPECT_EQ(i0, seq.rotations[0].i);
    EXPECT_EQ(j0, seq.rotations[0].j);
    EXPECT_EQ(c0, seq.rotations[0].c);
    EXPECT_EQ(s0, seq.rotations[0].s);
}
