#include <gtest/gtest.h>

#include <cmath>

#include "specproj/qdwh.hpp"
#include "specproj/synth.hpp"
#include "specproj/zolotarev.hpp"

using namespace specproj;

namespace {

// quadrature oracle for K(kappa), Simpson on the theta form
double elliptic_K_quadrature(double kappa) {
    const int N = 20000; // even
    const double h = M_PI / 2.0 / N;
    auto f = [&](double t) { return 1.0 / std::sqrt(1.0 - kappa * kappa * std::sin(t) * std::sin(t)); };
    double s = f(0.0) + f(M_PI / 2.0);
    for (int i = 1; i < N; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace

TEST(EllipticK, SpecialValuesAndQuadrature) {
    EXPECT_NEAR(elliptic_K(0.0), M_PI / 2.0, 1e-15);
    EXPECT_NEAR(elliptic_K(1.0 / std::sqrt(2.0)), 1.854074677301372, 1e-14);
    for (double k : {0.0, 0.3, 0.7, 0.99})
        EXPECT_NEAR(elliptic_K(k), elliptic_K_quadrature(k), 1e-12) << "kappa=" << k;
    EXPECT_GT(elliptic_K(0.9), elliptic_K(0.5));
    EXPECT_GT(elliptic_K(0.5), elliptic_K(0.0));
    EXPECT_THROW(elliptic_K(1.0), std::domain_error);
    EXPECT_THROW(elliptic_K(-0.1), std::domain_error);
}

TEST(JacobiSn, DegenerateAndQuarterPeriod) {
    for (double u : {0.0, 0.3, 1.0, 1.5})
        EXPECT_NEAR(jacobi_sn(u, 0.0), std::sin(u), 1e-13);
    for (double k : {0.2, 0.6, 0.95, 0.9999}) {
        EXPECT_NEAR(jacobi_sn(elliptic_K(k), k), 1.0, 1e-12) << "kappa=" << k;
        EXPECT_EQ(jacobi_sn(0.0, k), 0.0);
    }
    EXPECT_THROW(jacobi_sn(0.5, 1.0), std::domain_error);
}

TEST(JacobiSn, SnCnIdentityAlongLandenRecursion) {
    for (double k : {0.3, 0.8, 0.999}) {
        const double K = elliptic_K(k);
        for (double f : {0.1, 0.33, 0.5, 0.77, 0.95}) {
            const double phi = zolo_detail::jacobi_am_complement(
                f * K, std::sqrt((1.0 - k) * (1.0 + k)));
            const double sn = std::sin(phi), cn = std::cos(phi);
            EXPECT_NEAR(sn * sn + cn * cn, 1.0, 1e-12);
            EXPECT_NEAR(sn, jacobi_sn(f * K, k), 1e-15);
        }
    }
}

TEST(Zolotarev, CoefficientsIncreasing) {
    ZolotarevSpec z = zolotarev(4, 100.0);
    ASSERT_EQ(z.coeffs.size(), 7u);
    EXPECT_GT(z.coeffs[0], 0.0);
    for (std::size_t i = 0; i + 1 < z.coeffs.size(); ++i)
        EXPECT_LT(z.coeffs[i], z.coeffs[i + 1]);
    EXPECT_NEAR(z.kappa, std::sqrt(1.0 - 1e-4), 1e-15);
    EXPECT_GT(z.E_lower, 0.0);
    EXPECT_LE(z.E_lower, z.E_upper);
    EXPECT_LT(z.E_upper, 4.0);
}

TEST(Zolotarev, SupErrorWithinBracket) {
    ZolotarevSpec z = zolotarev(4, 100.0);
    const double e = zolotarev_sup_error(z);
    EXPECT_GE(e, z.E_lower * (1.0 - 1e-9));
    EXPECT_LE(e, z.E_upper * (1.0 + 1e-9));
}

TEST(Zolotarev, OddSymmetry) {
    ZolotarevSpec z = zolotarev(3, 50.0);
    for (double x : {1.0, 2.5, 7.0, 49.0}) {
        EXPECT_NEAR(zolotarev_eval(z, -x), -zolotarev_eval(z, x), 1e-13);
    }
    EXPECT_EQ(zolotarev_eval(z, 0.0), 0.0);
}

TEST(Zolotarev, SimplifiedBoundDominates) {
    for (int m : {1, 3, 6})
        for (double R : {10.0, 100.0, 1e4}) {
            ZolotarevSpec z = zolotarev(m, R);
            const double simple = zolotarev_simple_bound(m, 1.0 / R);
            EXPECT_GE(simple, z.E_upper * (1.0 - 1e-12)) << "m=" << m << " R=" << R;
            EXPECT_LE(zolotarev_sup_error(z), simple);
        }
}

TEST(SvDecayBound, SpecValueAndMonotonicity) {
    const double v = sv_decay_bound(35, 1, 1e-4);
    EXPECT_GT(v, 1.7e-10);
    EXPECT_LT(v, 2.0e-10); // ~1.9e-10
    for (int m = 1; m < 20; ++m)
        EXPECT_LT(sv_decay_bound(m + 1, 1, 1e-2), sv_decay_bound(m, 1, 1e-2));
    EXPECT_GT(sv_decay_bound(5, 1, 1e-8), sv_decay_bound(5, 1, 1e-2));
    EXPECT_GT(sv_decay_bound(5, 1, 1e-2), sv_decay_bound(5, 1, 1e-1));
}

TEST(VerifyDecay, DiagonalMatrixTrivial) {
    Matrix P(64, 64);
    for (int i = 0; i < 32; ++i) P(i, i) = 1.0; // projector of a diagonal matrix
    DecayReport rep = verify_decay(P, 1, 1e-1, 16);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.worst_margin, 0.0);
    EXPECT_GT(rep.checks, 0);
}

TEST(VerifyDecay, OracleProjectorSmall) {
    for (auto [b, gap] : {std::pair{1, 1e-1}, {2, 1e-2}}) {
        SpectrumSpec spec = SpectrumSpec::uniform_two_sided(128, gap);
        BandedSymmetric A = synth_banded(spec, b, 7);
        SpectralOracle oracle = dense_spectral_projector(to_dense(A));
        DecayReport rep = verify_decay(oracle.projector, b, gap, 32);
        EXPECT_TRUE(rep.pass) << "b=" << b << " gap=" << gap
                              << " margin=" << rep.worst_margin;
    }
}
