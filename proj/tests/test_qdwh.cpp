#include <gtest/gtest.h>

#include <cmath>

#include "specproj/qdwh.hpp"
#include "specproj/synth.hpp"

using namespace specproj;

namespace {

// Independent high-precision evaluation of the weighting function.
QdwhParams params_oracle(long double l) {
    const long double l2 = l * l;
    const long double gamma = cbrtl(4.0L * (1.0L - l2) / (l2 * l2));
    const long double sq = sqrtl(1.0L + gamma);
    const long double a = sq + 0.5L * sqrtl(8.0L - 4.0L * gamma + 8.0L * (2.0L - l2) / (l2 * sq));
    const long double b = 0.25L * (a - 1.0L) * (a - 1.0L);
    return {static_cast<double>(a), static_cast<double>(b), static_cast<double>(a + b - 1.0L)};
}

BandedSymmetric minus_identity(int n) {
    BandedSymmetric A(n, 1);
    for (int i = 0; i < n; ++i) A.bands[0][i] = -1.0;
    return A;
}

} // namespace

TEST(QdwhParams, FixedPoint) {
    QdwhParams p = qdwh_params(1.0);
    EXPECT_NEAR(p.a, 3.0, 1e-14);
    EXPECT_NEAR(p.b, 1.0, 1e-14);
    EXPECT_NEAR(p.c, 3.0, 1e-14);
    EXPECT_EQ(l_update(1.0, 3.0, 1.0, 3.0), 1.0);
}

TEST(QdwhParams, HalfAgainstHighPrecisionOracle) {
    QdwhParams p = qdwh_params(0.5);
    QdwhParams o = params_oracle(0.5L);
    EXPECT_NEAR(p.a, o.a, 1e-13);
    EXPECT_NEAR(p.b, o.b, 1e-13);
    EXPECT_NEAR(p.c, o.c, 1e-13);
    EXPECT_NEAR(p.a, 4.35934, 1e-4);
    EXPECT_NEAR(p.b, 2.82125, 1e-4);
    EXPECT_NEAR(p.c, 6.18059, 1e-4);
}

TEST(QdwhParams, MonotoneTowardHalleyPoint) {
    EXPECT_GT(qdwh_params(0.1).a, qdwh_params(0.5).a);
    EXPECT_GT(qdwh_params(0.5).a, qdwh_params(1.0).a);
    EXPECT_THROW(qdwh_params(0.0), std::domain_error);
    EXPECT_THROW(qdwh_params(-0.5), std::domain_error);
    EXPECT_THROW(qdwh_params(1.5), std::domain_error);
}

TEST(LUpdate, MovesTowardOne) {
    for (double l : {0.01, 0.1, 0.5, 0.9}) {
        QdwhParams p = qdwh_params(l);
        const double l1 = l_update(l, p.a, p.b, p.c);
        EXPECT_GT(l1, l);
        EXPECT_LE(l1, 1.0 + 1e-14);
    }
}

TEST(LUpdate, CubicConvergenceProbe) {
    // 1 - l_{k+1} = O((1 - l_k)^3) near the fixed point
    for (double d : {1e-2, 1e-3, 1e-4}) {
        const double l = 1.0 - d;
        QdwhParams p = qdwh_params(l);
        const double l1 = l_update(l, p.a, p.b, p.c);
        const double ratio = (1.0 - l1) / (d * d * d);
        EXPECT_LT(ratio, 2.0) << "d=" << d;
    }
}

TEST(DenseQdwh, SignOfDiagonalMatrix) {
    Matrix A(2, 2);
    A(0, 0) = -2.0;
    A(1, 1) = 3.0;
    DenseQdwhResult r = dense_qdwh(A, 1e-15, QdwhMode::one_qr);
    EXPECT_NEAR(r.U(0, 0), -1.0, 1e-14);
    EXPECT_NEAR(r.U(1, 1), 1.0, 1e-14);
    EXPECT_NEAR(r.U(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(r.U(1, 0), 0.0, 1e-14);
}

TEST(DenseQdwh, AtMostSixIterations) {
    for (double gap : {1e-1, 1e-4, 1e-8, 1e-12}) {
        SpectrumSpec spec = SpectrumSpec::uniform_two_sided(128, gap);
        BandedSymmetric A = synth_banded(spec, 1, 3);
        DenseQdwhResult r = dense_qdwh(to_dense(A), 1e-15, QdwhMode::one_qr);
        EXPECT_LE(r.iterations, 6) << "gap=" << gap;
        DenseQdwhResult rm = dense_qdwh(to_dense(A), 1e-15, QdwhMode::multi_qr);
        EXPECT_LE(rm.iterations, 6) << "gap=" << gap;
    }
}

TEST(DenseQdwh, OneQrAccuracyOrderOfMagnitude) {
    const int n = 300;
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(n, 1e-1);
    BandedSymmetric A = synth_banded(spec, 1, 1);
    Matrix D = to_dense(A);
    DenseQdwhResult r = dense_qdwh(D, 1e-15, QdwhMode::one_qr);
    SpectralOracle oracle = dense_spectral_projector(D);
    ErrorMetrics m = error_metrics(r.U, oracle);
    EXPECT_LT(m.e_trace, 1e-13);
    EXPECT_LT(m.e_id, 1e-12);
    EXPECT_LT(m.e_sp, 1e-12);
}

TEST(Hqdwh, MinusIdentityGivesFullProjector) {
    ProjectorResult r = hqdwh(minus_identity(32), 8, 1e-10, 1e-15);
    Matrix P = to_dense(r.P);
    EXPECT_LT(max_abs_diff(P, Matrix::identity(32)), 1e-10);
    Matrix U = to_dense(r.U);
    Matrix UU = matmul(U, U);
    for (int i = 0; i < 32; ++i) UU(i, i) -= 1.0;
    EXPECT_LT(max_abs(UU), 1e-10);
}

TEST(Hqdwh, SpecAccuracyExampleGap1e1) {
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(512, 1e-1);
    BandedSymmetric A = synth_banded(spec, 1, 4);
    ProjectorResult r = hqdwh(A, 250, 1e-10, 1e-15);
    SpectralOracle oracle = dense_spectral_projector(to_dense(A));
    ErrorMetrics m = error_metrics(to_dense(r.U), oracle);
    EXPECT_LT(m.e_id, 1e-8);
    EXPECT_LT(m.e_trace, 1e-8);
    EXPECT_LT(m.e_sp, 1e-6);
}

TEST(Hqdwh, TraceFixedByConstruction) {
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(512, 1e-4);
    BandedSymmetric A = synth_banded(spec, 8, 5);
    ProjectorResult r = hqdwh(A, 500, 1e-10, 1e-15);
    Matrix P = to_dense(r.P);
    EXPECT_NEAR(trace(P), 256.0, 1e-6);
}

TEST(Hqdwh, OracleEquivalenceSample) {
    for (auto [n, b, gap] : {std::tuple{128, 1, 1e-1}, {96, 2, 1e-2}, {160, 4, 1e-3}}) {
        SpectrumSpec spec = SpectrumSpec::uniform_two_sided(n, gap);
        BandedSymmetric A = synth_banded(spec, b, 11 + n);
        ProjectorResult rh = hqdwh(A, 32, 1e-12, 1e-15);
        DenseQdwhResult rd = dense_qdwh(to_dense(A), 1e-15, QdwhMode::one_qr);
        Matrix diff = to_dense(rh.U);
        add_scaled(diff, -1.0, rd.U);
        EXPECT_LT(norm2(diff), 1e-8) << "n=" << n << " b=" << b;
    }
}

TEST(Hqdwh, ProjectorAlgebraAndCommutation) {
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(256, 1e-2);
    BandedSymmetric A = synth_banded(spec, 2, 13);
    ProjectorResult r = hqdwh(A, 64, 1e-10, 1e-15);
    Matrix P = to_dense(r.P);
    Matrix PP = matmul(P, P);
    add_scaled(PP, -1.0, P);
    EXPECT_LT(norm2(PP), 1e-8);
    EXPECT_LT(max_abs_diff(P, transpose(P)), 1e-12);
    Matrix D = to_dense(A);
    Matrix C = matmul(D, P);
    add_scaled(C, -1.0, matmul(P, D));
    EXPECT_LT(norm2(C), 1e-7 * norm2(D));
}

TEST(Hqdwh, IterationDiagnosticsMonotone) {
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(256, 1e-5);
    BandedSymmetric A = synth_banded(spec, 1, 17);
    ProjectorResult r = hqdwh(A, 64, 1e-10, 1e-15);
    EXPECT_LE(r.iterations, 6);
    double prev_l = r.l0;
    double prev_c = std::numeric_limits<double>::infinity();
    for (const auto& d : r.per_iteration) {
        EXPECT_GT(d.l, prev_l);
        EXPECT_LT(d.c, prev_c);
        EXPECT_GE(d.c, 3.0 - 1e-12);
        prev_l = d.l;
        prev_c = d.c;
    }
}

TEST(Hqdwh, PropagatesCholeskyFailure) {
    // coarse eps against a tiny gap: c_1*eps truncation error in Z exceeds
    // lambda_min(Z) = 1 and a dense leaf factorization fails
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(256, 1e-8);
    BandedSymmetric A = synth_banded(spec, 1, 19);
    EXPECT_THROW(hqdwh(A, 32, 1e-2, 1e-15), NotPositiveDefiniteError);
}

TEST(ErrorMetrics, ExactSignCases) {
    Matrix A(4, 4);
    A(0, 0) = -1.5;
    A(1, 1) = -0.5;
    A(2, 2) = 2.0;
    A(3, 3) = 4.0;
    SpectralOracle oracle = dense_spectral_projector(A);
    EXPECT_EQ(oracle.nu, 2);
    Matrix U = Matrix::identity(4);
    U(0, 0) = -1.0;
    U(1, 1) = -1.0;
    ErrorMetrics m = error_metrics(U, oracle);
    EXPECT_LT(m.e_id, 1e-13);
    EXPECT_LT(m.e_trace, 1e-13);
    EXPECT_LT(m.e_sp, 1e-13);

    // positive definite: U = I, nu = 0, all zero
    Matrix B = Matrix::identity(3);
    B(1, 1) = 2.0;
    SpectralOracle o2 = dense_spectral_projector(B);
    EXPECT_EQ(o2.nu, 0);
    ErrorMetrics m2 = error_metrics(Matrix::identity(3), o2);
    EXPECT_LT(m2.e_id, 1e-14);
    EXPECT_LT(m2.e_trace, 1e-14);
    EXPECT_LT(m2.e_sp, 1e-14);
}

TEST(ErrorMetrics, FirstOrderPerturbation) {
    // U = U_exact + 1e-8 I: e_id = ||2e-8 U + 1e-16 I|| ~ 2e-8
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(64, 1e-1);
    BandedSymmetric A = synth_banded(spec, 1, 23);
    Matrix D = to_dense(A);
    SpectralOracle oracle = dense_spectral_projector(D);
    DenseQdwhResult r = dense_qdwh(D, 1e-15, QdwhMode::one_qr);
    Matrix U = r.U;
    for (int i = 0; i < 64; ++i) U(i, i) += 1e-8;
    ErrorMetrics m = error_metrics(U, oracle);
    EXPECT_NEAR(m.e_id, 2e-8, 4e-9);
}
