#pragma once

// Synthetic symmetric banded test matrices with a prescribed spectrum:
// an orthogonal similarity built from adjacent Givens rotations is applied
// to diag(lambda), and the out-of-band fill is chased off to the bottom
// right corner, Schwarz-style. The whole construction runs in band storage.

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "specproj/banded.hpp"
#include "specproj/givens.hpp"

namespace specproj {

struct SpectrumSpec {
    enum class Distribution { uniform_two_sided, custom };

    std::vector<double> eigenvalues;
    double gap = 0.0;
    Distribution distribution = Distribution::custom;

    // Eigenvalues uniformly spaced in [-1,-gap] u [gap,1], floor(n/2) of
    // them negative.
    static SpectrumSpec uniform_two_sided(int n, double gap) {
        if (n < 2) throw std::invalid_argument("SpectrumSpec: n >= 2 required");
        if (!(gap > 0.0) || gap > 1.0) throw std::invalid_argument("SpectrumSpec: 0 < gap <= 1 required");
        SpectrumSpec s;
        s.gap = gap;
        s.distribution = Distribution::uniform_two_sided;
        const int nneg = n / 2, npos = n - nneg;
        s.eigenvalues.reserve(n);
        for (int i = 0; i < nneg; ++i)
            s.eigenvalues.push_back(nneg == 1 ? -1.0
                                              : -1.0 + (1.0 - gap) * i / (nneg - 1));
        for (int i = 0; i < npos; ++i)
            s.eigenvalues.push_back(npos == 1 ? 1.0
                                              : gap + (1.0 - gap) * i / (npos - 1));
        return s;
    }

    int negative_count() const {
        int nu = 0;
        for (double v : eigenvalues)
            if (v < 0.0) ++nu;
        return nu;
    }
};

namespace detail {

// Orthogonal similarity on adjacent rows/cols (p, p+1) of a banded symmetric
// matrix, with at most one out-of-band entry ("bulge") alive at lower
// position (p+1, p-b) on entry and (p+b+1, p) on exit. Returns the created
// bulge value; *created is false when the bulge falls outside the matrix.
inline double rotate_adjacent(BandedSymmetric& A, int p, double c, double s,
                              double bulge_in, bool has_bulge_in, bool* created) {
    const int n = A.n, b = A.b;
    const int q = p + 1;

    // rows (p, q) against earlier columns
    for (int k = std::max(0, p - b); k < p; ++k) {
        const double x = A.bands[p - k][k];
        double y;
        const bool y_in_band = q - k <= b;
        if (y_in_band)
            y = A.bands[q - k][k];
        else
            y = has_bulge_in && k == p - b ? bulge_in : 0.0;
        A.bands[p - k][k] = c * x + s * y;
        if (y_in_band) A.bands[q - k][k] = -s * x + c * y;
        // else: the rotation was constructed to annihilate the bulge
    }

    // 2x2 diagonal block
    {
        const double app = A.bands[0][p], aqq = A.bands[0][q], apq = A.bands[1][p];
        A.bands[0][p] = c * c * app + 2.0 * c * s * apq + s * s * aqq;
        A.bands[0][q] = s * s * app - 2.0 * c * s * apq + c * c * aqq;
        A.bands[1][p] = c * s * (aqq - app) + (c * c - s * s) * apq;
    }

    // later rows against columns (p, q)
    double bulge_out = 0.0;
    for (int k = q + 1; k <= std::min(n - 1, p + b + 1); ++k) {
        const bool x_in_band = k - p <= b;
        const double x = x_in_band ? A.bands[k - p][p] : 0.0;
        const double y = A.bands[k - q][q];
        if (x_in_band)
            A.bands[k - p][p] = c * x + s * y;
        else
            bulge_out = c * x + s * y; // new fill at (p+b+1, p)
        A.bands[k - q][q] = -s * x + c * y;
    }
    *created = (p + b + 1 <= n - 1);
    return bulge_out;
}

} // namespace detail

// Banded symmetric matrix with the prescribed eigenvalue multiset. The seed
// only shuffles the order in which eigenvalues are placed on the initial
// diagonal (0 keeps them sorted ascending).
inline BandedSymmetric synth_banded(const SpectrumSpec& spec, int b, std::uint64_t seed = 0) {
    const int n = static_cast<int>(spec.eigenvalues.size());
    if (n < 2) throw std::invalid_argument("synth_banded: n >= 2 required");
    if (b < 1 || b >= n) throw std::invalid_argument("synth_banded: 1 <= b < n required");
    for (double v : spec.eigenvalues)
        if (v == 0.0) throw std::invalid_argument("synth_banded: zero eigenvalue (matrix must be nonsingular)");

    std::vector<double> lam = spec.eigenvalues;
    std::sort(lam.begin(), lam.end());
    if (seed != 0) {
        std::mt19937_64 rng(seed);
        std::shuffle(lam.begin(), lam.end(), rng);
    }

    BandedSymmetric A(n, b);
    A.bands[0] = lam;

    for (int i = n - 1; i >= 1; --i) {
        const GivensTriple g = make_givens(A.bands[0][i], 1.0);
        bool have;
        double bulge = detail::rotate_adjacent(A, i - 1, g.c, g.s, 0.0, false, &have);
        int brow = i + b; // lower bulge position (brow, brow - b - 1)
        while (have) {
            const int p = brow - 1;
            const double f = A.bands[b][p - b]; // A(p, p-b)
            const GivensTriple ch = make_givens(f, bulge);
            bulge = detail::rotate_adjacent(A, p, ch.c, ch.s, bulge, true, &have);
            brow += b;
        }
    }
    return A;
}

} // namespace specproj
