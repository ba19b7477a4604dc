#pragma once

// Givens rotation kernel and replayable rotation sequences.
//
// Convention: make_givens(f, g) returns (c, s, r) with
//   c*f + s*g = r,   -s*f + c*g = 0,   c^2 + s^2 = 1,
// where r carries the sign of f (g = 0 gives the identity rotation and
// f = 0 gives the pure swap). A stored rotation (i, j, c, s) is replayed on
// rows as
//   row_i <- c*row_i + s*row_j,   row_j <- -s*row_i + c*row_j,
// i.e. row i is the pivot and row j is the annihilated target; the paired
// column update on an orthogonal accumulator uses the same formulas.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "specproj/dense.hpp"

namespace specproj {

struct GivensTriple {
    double c, s, r;
};

inline GivensTriple make_givens(double f, double g) {
    if (g == 0.0) return {1.0, 0.0, f};
    if (f == 0.0) return {0.0, 1.0, g};
    const double af = std::abs(f), ag = std::abs(g);
    const double scale = af + ag;
    const double fs = f / scale, gs = g / scale;
    double r = scale * std::sqrt(fs * fs + gs * gs);
    if (f < 0.0) r = -r;
    return {f / r, g / r, r};
}

struct GivensRotation {
    std::uint32_t i, j; // pivot row, annihilated row
    double c, s;
};

struct GivensSequence {
    int nrows = 0; // ambient dimension of the stacked matrix, 2n
    std::vector<GivensRotation> rotations;

    std::size_t size() const { return rotations.size(); }
};

// Replay on the rows of M (as applied to R in the reduction).
inline void apply_to_rows(const GivensSequence& seq, Matrix& M) {
    if (M.rows() != seq.nrows) throw std::invalid_argument("apply_to_rows: row count mismatch");
    const int w = M.cols();
    for (const GivensRotation& g : seq.rotations) {
        double* a = M.row(static_cast<int>(g.i));
        double* b = M.row(static_cast<int>(g.j));
        for (int k = 0; k < w; ++k) {
            const double x = a[k], y = b[k];
            a[k] = g.c * x + g.s * y;
            b[k] = -g.s * x + g.c * y;
        }
    }
}

// Replay on the columns of M (as applied to an orthogonal accumulator Q).
inline void apply_to_cols(const GivensSequence& seq, Matrix& M) {
    if (M.cols() != seq.nrows) throw std::invalid_argument("apply_to_cols: column count mismatch");
    for (const GivensRotation& g : seq.rotations) {
        const int ci = static_cast<int>(g.i), cj = static_cast<int>(g.j);
        for (int r = 0; r < M.rows(); ++r) {
            double* row = M.row(r);
            const double x = row[ci], y = row[cj];
            row[ci] = g.c * x + g.s * y;
            row[cj] = -g.s * x + g.c * y;
        }
    }
}

// Densely accumulated orthogonal factor: identity with all rotations applied
// to its columns.
inline Matrix accumulate_q(const GivensSequence& seq) {
    Matrix Q = Matrix::identity(seq.nrows);
    apply_to_cols(seq, Q);
    return Q;
}

} // namespace specproj
