#pragma once

// Compact storage for symmetric banded matrices. Only the lower diagonals
// are stored: bands[d][i] = A(i+d, i) for d = 0..b; symmetry is implicit and
// reconstruction is exactly symmetric.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "specproj/dense.hpp"

namespace specproj {

struct BandedSymmetric {
    int n = 0;
    int b = 0;
    std::vector<std::vector<double>> bands; // bands[d] has n-d entries

    BandedSymmetric() = default;
    BandedSymmetric(int n_, int b_) : n(n_), b(b_) {
        if (n < 2) throw std::invalid_argument("BandedSymmetric: n >= 2 required");
        if (b < 1 || b >= n) throw std::invalid_argument("BandedSymmetric: 1 <= b < n required");
        bands.resize(b + 1);
        for (int d = 0; d <= b; ++d) bands[d].assign(n - d, 0.0);
    }

    // A(i, j), zero outside the band.
    double at(int i, int j) const {
        const int d = i >= j ? i - j : j - i;
        if (d > b) return 0.0;
        return bands[d][i < j ? i : j];
    }

    void set(int i, int j, double v) {
        const int d = i >= j ? i - j : j - i;
        if (d > b) throw std::out_of_range("BandedSymmetric::set: outside band");
        bands[d][i < j ? i : j] = v;
    }

    bool all_finite() const {
        for (const auto& diag : bands)
            for (double v : diag)
                if (!std::isfinite(v)) return false;
        return true;
    }
};

inline Matrix to_dense(const BandedSymmetric& A) {
    Matrix M(A.n, A.n);
    for (int d = 0; d <= A.b; ++d)
        for (int i = 0; i + d < A.n; ++i) {
            M(i + d, i) = A.bands[d][i];
            M(i, i + d) = A.bands[d][i];
        }
    return M;
}

// Lower-band extraction; entries of M outside the band are ignored and the
// strictly lower part is taken as authoritative.
inline BandedSymmetric from_dense(const Matrix& M, int b) {
    if (M.rows() != M.cols()) throw std::invalid_argument("from_dense: square matrix expected");
    BandedSymmetric A(M.rows(), b);
    for (int d = 0; d <= b; ++d)
        for (int i = 0; i + d < A.n; ++i) A.bands[d][i] = M(i + d, i);
    return A;
}

inline void band_matvec(const BandedSymmetric& A, const double* x, double* y) {
    const int n = A.n, b = A.b;
    for (int i = 0; i < n; ++i) y[i] = A.bands[0][i] * x[i];
    for (int d = 1; d <= b; ++d) {
        const double* diag = A.bands[d].data();
        for (int i = 0; i + d < n; ++i) {
            y[i + d] += diag[i] * x[i];
            y[i] += diag[i] * x[i + d];
        }
    }
}

inline std::vector<double> band_matvec(const BandedSymmetric& A, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != A.n)
        throw std::invalid_argument("band_matvec: dimension mismatch");
    std::vector<double> y(A.n);
    band_matvec(A, x.data(), y.data());
    return y;
}

// Exact 1-norm (max absolute column sum) from band storage.
inline double norm1(const BandedSymmetric& A) {
    std::vector<double> colsum(A.n, 0.0);
    for (int i = 0; i < A.n; ++i) colsum[i] = std::abs(A.bands[0][i]);
    for (int d = 1; d <= A.b; ++d)
        for (int i = 0; i + d < A.n; ++i) {
            const double v = std::abs(A.bands[d][i]);
            colsum[i] += v;
            colsum[i + d] += v;
        }
    double m = 0.0;
    for (double v : colsum) m = std::max(m, v);
    return m;
}

inline BandedSymmetric scaled(const BandedSymmetric& A, double s) {
    BandedSymmetric B = A;
    for (auto& diag : B.bands)
        for (double& v : diag) v *= s;
    return B;
}

// SBM text format: line 1 "SBM <n> <b>", then one line per diagonal d with
// n-d whitespace-separated values at full round-trip precision.
inline void write_sbm(std::ostream& os, const BandedSymmetric& A) {
    os << "SBM " << A.n << " " << A.b << "\n";
    char buf[32];
    for (int d = 0; d <= A.b; ++d) {
        const auto& diag = A.bands[d];
        for (std::size_t i = 0; i < diag.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", diag[i]);
            os << buf << (i + 1 == diag.size() ? "" : " ");
        }
        os << "\n";
    }
}

inline void write_sbm(const std::string& path, const BandedSymmetric& A) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_sbm: cannot open " + path);
    write_sbm(os, A);
    if (!os) throw std::runtime_error("write_sbm: write failed for " + path);
}

inline BandedSymmetric read_sbm(std::istream& is) {
    std::string tag;
    int n = 0, b = 0;
    if (!(is >> tag >> n >> b) || tag != "SBM")
        throw std::runtime_error("read_sbm: malformed header");
    BandedSymmetric A(n, b);
    for (int d = 0; d <= b; ++d)
        for (int i = 0; i + d < n; ++i)
            if (!(is >> A.bands[d][i])) throw std::runtime_error("read_sbm: truncated data");
    if (!A.all_finite()) throw std::runtime_error("read_sbm: nonfinite entry");
    return A;
}

inline BandedSymmetric read_sbm(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_sbm: cannot open " + path);
    return read_sbm(is);
}

} // namespace specproj
