#pragma once

// LU factorization with partial pivoting for banded matrices, LINPACK-style
// compact storage: column j keeps rows [j-2b, j+b], so U may fill up to 2b
// superdiagonals under pivoting. O(b^2 n) factor, O(b n) solve.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "specproj/banded.hpp"
#include "specproj/dense_factor.hpp"

namespace specproj {

class BandedLu {
public:
    explicit BandedLu(const BandedSymmetric& A, double diag_scale = 1.0) : n_(A.n), b_(A.b) {
        const int w = 3 * b_ + 1;
        w_.assign(static_cast<std::size_t>(n_) * w, 0.0);
        piv_.resize(n_);
        for (int j = 0; j < n_; ++j)
            for (int i = std::max(0, j - b_); i <= std::min(n_ - 1, j + b_); ++i)
                at(i, j) = A.at(i, j) * diag_scale;
        factor();
    }

    int n() const { return n_; }

    // Solve A x = rhs in place.
    void solve(std::vector<double>& x) const {
        for (int k = 0; k < n_; ++k) {
            if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
            const int rend = std::min(n_ - 1, k + b_);
            for (int r = k + 1; r <= rend; ++r) x[r] -= at(r, k) * x[k];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            x[j] /= at(j, j);
            const int rlo = std::max(0, j - 2 * b_);
            for (int r = rlo; r < j; ++r) x[r] -= at(r, j) * x[j];
        }
    }

    // Solve A^T z = rhs in place.
    void solve_transposed(std::vector<double>& x) const {
        for (int j = 0; j < n_; ++j) {
            const int rlo = std::max(0, j - 2 * b_);
            double s = x[j];
            for (int r = rlo; r < j; ++r) s -= at(r, j) * x[r];
            x[j] = s / at(j, j);
        }
        for (int k = n_ - 1; k >= 0; --k) {
            const int rend = std::min(n_ - 1, k + b_);
            double s = x[k];
            for (int r = k + 1; r <= rend; ++r) s -= at(r, k) * x[r];
            x[k] = s;
            if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
        }
    }

private:
    // stored iff i - j in [-2b, b]
    double& at(int i, int j) { return w_[static_cast<std::size_t>(j) * (3 * b_ + 1) + (i - j + 2 * b_)]; }
    double at(int i, int j) const { return w_[static_cast<std::size_t>(j) * (3 * b_ + 1) + (i - j + 2 * b_)]; }

    void factor() {
        for (int k = 0; k < n_; ++k) {
            int p = k;
            double best = std::abs(at(k, k));
            const int rend = std::min(n_ - 1, k + b_);
            for (int r = k + 1; r <= rend; ++r) {
                const double v = std::abs(at(r, k));
                if (v > best) { best = v; p = r; }
            }
            piv_[k] = p;
            if (best == 0.0) throw SingularMatrixError("BandedLu: zero pivot");
            const int cend = std::min(n_ - 1, k + 2 * b_);
            if (p != k)
                for (int c = k; c <= cend; ++c) std::swap(at(k, c), at(p, c));
            const double inv = 1.0 / at(k, k);
            for (int r = k + 1; r <= rend; ++r) {
                const double m = at(r, k) * inv;
                at(r, k) = m;
                if (m == 0.0) continue;
                for (int c = k + 1; c <= cend; ++c) at(r, c) -= m * at(k, c);
            }
        }
    }

    int n_, b_;
    std::vector<double> w_;
    std::vector<int> piv_;
};

} // namespace specproj
