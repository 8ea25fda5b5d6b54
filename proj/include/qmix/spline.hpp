#pragma once

#include <complex>
#include <vector>

namespace qmix::spline {

using cplx = std::complex<double>;

// Coefficient blocks carry two extra nodes on each side of every axis.
inline constexpr int kMargin = 2;

inline int coeff_extent(int n) { return n + 2 * kMargin; }

// Cubic B-spline coefficients of a d-dimensional block (extent n per axis,
// row-major), treating values outside the block as zero. out has extent
// n + 4 per axis.
void prefilter(const cplx* in, int n, int d, cplx* out);

struct Taps {
    int first = 0;  // coefficient index (margin included) of the first tap
    double w[4] = {0, 0, 0, 0};
    bool inside = false;
};

// Taps for position x in node units; inside is false outside [0, n-1].
Taps taps_at(double x, int n);

// Value at pos (node units per axis); zero outside the block.
cplx evaluate(const cplx* coeff, int n, int d, const double* pos);

// out[j] = spline(j + shift) for every node j of the block (zero when the
// shifted point leaves the block). Shifts are per axis, in node units.
void shift_block(const cplx* coeff, int n, int d, const double* shift, cplx* out, std::vector<cplx>& scratch);

// Tensor-product resampling: out has extent pos[a].size() on axis a and holds
// the spline at (pos[0][i], pos[1][j], ...), zero where a position leaves
// [0, n-1].
void resample(const cplx* coeff, int n, int d, const std::vector<double>* pos, cplx* out,
              std::vector<cplx>& scratch_a, std::vector<cplx>& scratch_b);

}  // namespace qmix::spline
