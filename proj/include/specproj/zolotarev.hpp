#pragma once

// Zolotarev rational approximation of the sign function and the a priori
// singular-value decay bound for off-diagonal blocks of spectral projectors.
// Elliptic machinery runs through AGM iterations; coefficients come from the
// Jacobi amplitude so that c_i = tan^2(am(iK/2m)) avoids cancellation near
// the quarter period.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "specproj/dense.hpp"
#include "specproj/dense_factor.hpp"
#include "specproj/tree.hpp"

namespace specproj {

namespace zolo_detail {

// K from the complementary modulus: K(kappa) = pi / (2 agm(1, kappa')).
inline double elliptic_K_complement(double kp) {
    if (!(kp > 0.0)) throw std::domain_error("elliptic_K: modulus 1 is singular");
    double a = 1.0, g = kp;
    for (int it = 0; it < 80 && std::abs(a - g) > 1e-17 * a; ++it) {
        const double an = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = an;
    }
    return M_PI / (2.0 * a);
}

// Jacobi amplitude am(u; kappa) via the descending Landen/AGM recursion,
// parameterized by the complementary modulus for accuracy at kappa ~ 1.
inline double jacobi_am_complement(double u, double kp) {
    const double k2 = (1.0 - kp) * (1.0 + kp);
    const double kappa = k2 > 0.0 ? std::sqrt(k2) : 0.0;
    if (kappa == 0.0) return u;
    std::vector<double> a{1.0}, c{kappa};
    double g = kp;
    int nlev = 0;
    while (std::abs(c.back()) > 1e-17 * a.back() && nlev < 60) {
        const double an = 0.5 * (a.back() + g);
        const double cn = 0.5 * (a.back() - g);
        g = std::sqrt(a.back() * g);
        a.push_back(an);
        c.push_back(cn);
        ++nlev;
    }
    double phi = std::ldexp(a.back() * u, nlev);
    for (int i = nlev; i >= 1; --i)
        phi = 0.5 * (phi + std::asin(std::clamp(c[i] / a[i] * std::sin(phi), -1.0, 1.0)));
    return phi;
}

} // namespace zolo_detail

// Complete elliptic integral of the first kind, modulus convention:
// K(kappa) = int_0^{pi/2} dtheta / sqrt(1 - kappa^2 sin^2 theta).
inline double elliptic_K(double kappa) {
    if (kappa < 0.0 || kappa >= 1.0) throw std::domain_error("elliptic_K: 0 <= kappa < 1 required");
    return zolo_detail::elliptic_K_complement(std::sqrt((1.0 - kappa) * (1.0 + kappa)));
}

// Jacobi elliptic sn(u; kappa), accurate on u in [0, K(kappa)].
inline double jacobi_sn(double u, double kappa) {
    if (kappa < 0.0 || kappa >= 1.0) throw std::domain_error("jacobi_sn: 0 <= kappa < 1 required");
    return std::sin(zolo_detail::jacobi_am_complement(u, std::sqrt((1.0 - kappa) * (1.0 + kappa))));
}

struct ZolotarevSpec {
    int m = 0;                  // type (2m-1, 2m)
    double R = 0.0;             // approximation range [-R,-1] u [1,R]
    double kappa = 0.0;         // sqrt(1 - 1/R^2)
    std::vector<double> coeffs; // c_1 .. c_{2m-1} (c_{2m} is infinite)
    double C = 0.0;             // equioscillation scaling
    double E_lower = 0.0;
    double E_upper = 0.0;
};

namespace zolo_detail {

// s_m(x)/C for x > 0.
inline long double rational_part(const std::vector<double>& c, long double x) {
    const int m = static_cast<int>((c.size() + 1) / 2);
    const long double x2 = x * x;
    long double g = x;
    for (int i = 1; i < m; ++i) g *= (x2 + c[2 * i - 1]) / (x2 + c[2 * i - 2]);
    g /= (x2 + c[2 * m - 2]);
    return g;
}

struct Extrema {
    double gmin, gmax;
};

// Grid scan (1e4 log-spaced points) with golden-section refinement of every
// bracketed extremum.
inline Extrema scan_extrema(const std::vector<double>& c, double R) {
    const int grid = 10000;
    std::vector<long double> xs(grid), gs(grid);
    const long double lR = std::log(static_cast<long double>(R));
    for (int i = 0; i < grid; ++i) {
        xs[i] = std::exp(lR * i / (grid - 1));
        gs[i] = rational_part(c, xs[i]);
    }
    const long double gr = 0.5L * (std::sqrt(5.0L) - 1.0L);
    auto refine = [&](int i, int sign) {
        long double lo = xs[i - 1], hi = xs[i + 1];
        long double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        long double f1 = sign * rational_part(c, x1), f2 = sign * rational_part(c, x2);
        for (int it = 0; it < 90 && hi - lo > 1e-14L * hi; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = sign * rational_part(c, x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = sign * rational_part(c, x1);
            }
        }
        return static_cast<long double>(sign) * std::max(f1, f2);
    };
    long double gmin = std::min(gs.front(), gs.back());
    long double gmax = std::max(gs.front(), gs.back());
    for (int i = 1; i + 1 < grid; ++i) {
        if (gs[i] >= gs[i - 1] && gs[i] >= gs[i + 1]) gmax = std::max(gmax, refine(i, +1));
        if (gs[i] <= gs[i - 1] && gs[i] <= gs[i + 1]) gmin = std::min(gmin, refine(i, -1));
    }
    return {static_cast<double>(gmin), static_cast<double>(gmax)};
}

} // namespace zolo_detail

// Zolotarev function of type (2m-1, 2m) on [-R,-1] u [1,R]: coefficients
// from the elliptic parametrization, scaling C from the equioscillation
// condition (bisection; both extrema are affine in C), and the error
// bracket 4 rho^m/(rho^m + 1) <= E_m <= 4 rho^m.
inline ZolotarevSpec zolotarev(int m, double R) {
    if (m < 1) throw std::invalid_argument("zolotarev: m >= 1 required");
    if (!(R > 1.0)) throw std::invalid_argument("zolotarev: R > 1 required");
    ZolotarevSpec z;
    z.m = m;
    z.R = R;
    const double kp = 1.0 / R;
    z.kappa = std::sqrt((1.0 - kp) * (1.0 + kp));
    const double K = zolo_detail::elliptic_K_complement(kp);
    z.coeffs.resize(2 * m - 1);
    for (int i = 1; i <= 2 * m - 1; ++i) {
        const double phi = zolo_detail::jacobi_am_complement(i * K / (2 * m), kp);
        const double t = std::tan(phi);
        z.coeffs[i - 1] = t * t;
    }

    const zolo_detail::Extrema ex = zolo_detail::scan_extrema(z.coeffs, R);
    // bisection on psi(C) = max(1 - C g) + min(1 - C g) = 2 - C (gmin + gmax)
    {
        double lo = 0.0, hi = 4.0 / (ex.gmin + ex.gmax);
        for (int it = 0; it < 200 && (hi - lo) > 1e-16 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double psi = 2.0 - mid * (ex.gmin + ex.gmax);
            (psi > 0.0 ? lo : hi) = mid;
        }
        z.C = 0.5 * (lo + hi);
    }

    // rho = exp(-pi K(mu')/(2 K(mu))), mu = ((sqrt(R)-1)/(sqrt(R)+1))^2
    const double sR = std::sqrt(R);
    const double mu = std::pow((sR - 1.0) / (sR + 1.0), 2);
    const double one_minus_mu = 4.0 * sR / ((sR + 1.0) * (sR + 1.0));
    const double mup = std::sqrt(one_minus_mu * (1.0 + mu));
    const double Kmu = zolo_detail::elliptic_K_complement(mup);
    const double Kmup = zolo_detail::elliptic_K_complement(mu);
    const double log_rho = -M_PI * Kmup / (2.0 * Kmu);
    const double rho_m = std::exp(m * log_rho); // log-space guard for tiny gaps
    z.E_upper = 4.0 * rho_m;
    z.E_lower = rho_m > 0.0 ? 4.0 * rho_m / (rho_m + 1.0) : 0.0;
    return z;
}

inline double zolotarev_eval(const ZolotarevSpec& z, double x) {
    const long double ax = std::abs(static_cast<long double>(x));
    if (ax == 0.0L) return 0.0;
    const long double g = zolo_detail::rational_part(z.coeffs, ax);
    const long double v = z.C * g;
    return static_cast<double>(x > 0.0 ? v : -v);
}

// Grid-measured sup-error of s_m over [1, R] (equals the sup over the full
// two-sided domain by oddness). Extrema are refined by golden section.
inline double zolotarev_sup_error(const ZolotarevSpec& z) {
    const zolo_detail::Extrema ex = zolo_detail::scan_extrema(z.coeffs, z.R);
    const double dev_low = 1.0 - z.C * ex.gmin;  // largest deviation below 1
    const double dev_high = z.C * ex.gmax - 1.0; // largest deviation above 1
    return std::max(std::abs(dev_low), std::abs(dev_high));
}

// Simplified gap-explicit bound 4 exp(-pi^2 m / (4 log(4/gap^{1/4} + 2))).
inline double zolotarev_simple_bound(int m, double gap) {
    return 4.0 * std::exp(-M_PI * M_PI * m / (4.0 * std::log(4.0 / std::pow(gap, 0.25) + 2.0)));
}

// Bound on sigma_{2mb+1} of any off-diagonal projector block.
inline double sv_decay_bound(int m, int b, double gap) {
    (void)b; // enters through the index 2mb+1, not the value
    return 2.0 * std::exp(-M_PI * M_PI * m / (4.0 * std::log(4.0 / std::pow(gap, 0.25) + 2.0)));
}

struct DecayReport {
    bool pass = true;
    double worst_margin = 0.0;      // max sigma / (bound*(1+slack) + floor)
    double worst_raw_margin = 0.0;  // max sigma / (bound*(1+slack)), no floor
    int checks = 0;
    double noise_floor = 0.0;
};

// Checks sigma_{2mb+1}(block) <= sv_decay_bound(m,b,gap)*(1+1e-6) + floor for
// every off-diagonal block of the partition and every admissible m. The
// additive floor (50 n eps_mach, for a unit-norm projector) accounts for the
// rounding error carried by the oracle projector itself; without it the
// comparison is vacuous once the bound drops below machine precision.
inline DecayReport verify_decay(const Matrix& P, int b, double gap, int n_min = 32) {
    if (P.rows() != P.cols()) throw std::invalid_argument("verify_decay: square matrix expected");
    const int n = P.rows();
    DecayReport rep;
    rep.noise_floor = 50.0 * n * 2.220446049250313e-16;
    PartitionTree tree(n, n_min);
    for (const auto& nd : tree.nodes) {
        if (nd.leaf()) continue;
        const int mid = nd.mid();
        const int s1 = mid - nd.begin, s2 = nd.begin + nd.size - mid;
        for (int side = 0; side < 2; ++side) {
            const Matrix B = side == 0 ? P.block(nd.begin, mid, s1, s2)
                                       : P.block(mid, nd.begin, s2, s1);
            const std::vector<double> sv = singular_values(B);
            const int smin = static_cast<int>(sv.size());
            for (int m = 1; 2 * m * b + 1 <= smin; ++m) {
                const double sigma = sv[2 * m * b];
                const double bound = sv_decay_bound(m, b, gap) * (1.0 + 1e-6);
                rep.worst_margin = std::max(rep.worst_margin, sigma / (bound + rep.noise_floor));
                rep.worst_raw_margin = std::max(rep.worst_raw_margin, sigma / bound);
                if (sigma > bound + rep.noise_floor) rep.pass = false;
                ++rep.checks;
            }
        }
    }
    return rep;
}

} // namespace specproj
