#include "qmix/spline.hpp"

#include <cmath>

namespace qmix::spline {

namespace {

constexpr double kPole = -0.26794919243112270;  // sqrt(3) - 2
constexpr int kPad = 28;                         // |pole|^28 < 1e-16
// Points this close (in node units) to either end count as inside, so that
// mirrored shifts keep or drop the end nodes together.
constexpr double kEdge = 1e-9;

long ipow(long b, int e)
{
    long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

// Filters the interior n values of a strided line in place, writing n + 4
// coefficients starting at the line origin (margin included).
void filter_line(cplx* line, long stride, int n, std::vector<cplx>& buf)
{
    int len = n + 2 * kPad;
    buf.assign(len, 0.0);
    for (int i = 0; i < n; ++i) buf[kPad + i] = line[(i + kMargin) * stride];
    cplx prev = 0.0;
    for (int i = 0; i < len; ++i) {
        buf[i] += kPole * prev;
        prev = buf[i];
    }
    buf[len - 1] *= kPole / (kPole * kPole - 1.0);
    for (int i = len - 2; i >= 0; --i) buf[i] = kPole * (buf[i + 1] - buf[i]);
    for (int i = 0; i < n + 2 * kMargin; ++i) line[i * stride] = 6.0 * buf[kPad - kMargin + i];
}

void weights(double f, double* w)
{
    double g = 1.0 - f, f2 = f * f, f3 = f2 * f;
    w[0] = g * g * g / 6.0;
    w[1] = (4.0 - 6.0 * f2 + 3.0 * f3) / 6.0;
    w[2] = (1.0 + 3.0 * f + 3.0 * f2 - 3.0 * f3) / 6.0;
    w[3] = f3 / 6.0;
}

}  // namespace

void prefilter(const cplx* in, int n, int d, cplx* out)
{
    int m = coeff_extent(n);
    long total = ipow(m, d);
    for (long i = 0; i < total; ++i) out[i] = 0.0;
    // Copy the block into the interior.
    long count = ipow(n, d);
    for (long f = 0; f < count; ++f) {
        long rem = f, dst = 0;
        for (int a = 0; a < d; ++a) {
            long p = ipow(n, d - 1 - a);
            long idx = rem / p;
            rem %= p;
            dst = dst * m + idx + kMargin;
        }
        out[dst] = in[f];
    }
    std::vector<cplx> buf;
    for (int a = 0; a < d; ++a) {
        long stride = ipow(m, d - 1 - a);
        long lines = total / m;
        for (long l = 0; l < lines; ++l) {
            long hi = l / stride, lo = l % stride;
            cplx* line = out + hi * stride * m + lo;
            filter_line(line, stride, n, buf);
        }
    }
}

Taps taps_at(double x, int n)
{
    Taps t;
    if (!(x >= -kEdge && x <= n - 1 + kEdge)) return t;
    double fl = std::floor(x);
    int i = static_cast<int>(fl);
    weights(x - fl, t.w);
    t.first = i - 1 + kMargin;
    t.inside = true;
    return t;
}

cplx evaluate(const cplx* coeff, int n, int d, const double* pos)
{
    int m = coeff_extent(n);
    Taps t[3];
    for (int a = 0; a < d; ++a) {
        t[a] = taps_at(pos[a], n);
        if (!t[a].inside) return 0.0;
    }
    if (d == 1) {
        const cplx* c = coeff + t[0].first;
        return t[0].w[0] * c[0] + t[0].w[1] * c[1] + t[0].w[2] * c[2] + t[0].w[3] * c[3];
    }
    cplx sum = 0.0;
    if (d == 2) {
        for (int i = 0; i < 4; ++i) {
            const cplx* c = coeff + long(t[0].first + i) * m + t[1].first;
            cplx row = t[1].w[0] * c[0] + t[1].w[1] * c[1] + t[1].w[2] * c[2] + t[1].w[3] * c[3];
            sum += t[0].w[i] * row;
        }
        return sum;
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const cplx* c = coeff + (long(t[0].first + i) * m + (t[1].first + j)) * m + t[2].first;
            cplx row = t[2].w[0] * c[0] + t[2].w[1] * c[1] + t[2].w[2] * c[2] + t[2].w[3] * c[3];
            sum += t[0].w[i] * t[1].w[j] * row;
        }
    return sum;
}

void shift_block(const cplx* coeff, int n, int d, const double* shift, cplx* out, std::vector<cplx>& scratch)
{
    int m = coeff_extent(n);
    // Pass over each axis, shrinking it from m coefficients to n values.
    // ext[a] is the current extent of axis a.
    int ext[3] = {m, m, m};
    const cplx* src = coeff;
    std::vector<cplx> tmp_a, tmp_b;
    for (int a = 0; a < d; ++a) {
        double fl = std::floor(shift[a]);
        int base = static_cast<int>(fl);
        double w[4];
        weights(shift[a] - fl, w);
        long outer = 1, inner = 1;
        for (int b = 0; b < a; ++b) outer *= ext[b];
        for (int b = a + 1; b < d; ++b) inner *= ext[b];
        std::vector<cplx>& dst_buf = (a == d - 1) ? scratch : ((a % 2 == 0) ? tmp_a : tmp_b);
        dst_buf.assign(outer * n * inner, 0.0);
        for (long o = 0; o < outer; ++o) {
            for (int j = 0; j < n; ++j) {
                double x = j + shift[a];
                if (!(x >= -kEdge && x <= n - 1 + kEdge)) continue;
                int first = j + base - 1 + kMargin;
                const cplx* s0 = src + (o * ext[a] + first) * inner;
                cplx* dst = dst_buf.data() + (o * n + j) * inner;
                for (long q = 0; q < inner; ++q)
                    dst[q] = w[0] * s0[q] + w[1] * s0[q + inner] + w[2] * s0[q + 2 * inner] +
                             w[3] * s0[q + 3 * inner];
            }
        }
        ext[a] = n;
        src = dst_buf.data();
    }
    long count = ipow(n, d);
    for (long i = 0; i < count; ++i) out[i] = src[i];
}

void resample(const cplx* coeff, int n, int d, const std::vector<double>* pos, cplx* out,
              std::vector<cplx>& scratch_a, std::vector<cplx>& scratch_b)
{
    int m = coeff_extent(n);
    long ext[3] = {m, m, m};
    const cplx* src = coeff;
    for (int a = 0; a < d; ++a) {
        long outer = 1, inner = 1;
        for (int b = 0; b < a; ++b) outer *= ext[b];
        for (int b = a + 1; b < d; ++b) inner *= ext[b];
        long len = static_cast<long>(pos[a].size());
        bool last = (a == d - 1);
        std::vector<cplx>& buf = (a % 2 == 0) ? scratch_a : scratch_b;
        cplx* dst_base;
        if (last) {
            dst_base = out;
        } else {
            buf.resize(outer * len * inner);
            dst_base = buf.data();
        }
        for (long j = 0; j < len; ++j) {
            Taps t = taps_at(pos[a][j], n);
            for (long o = 0; o < outer; ++o) {
                cplx* dst = dst_base + (o * len + j) * inner;
                if (!t.inside) {
                    for (long q = 0; q < inner; ++q) dst[q] = 0.0;
                    continue;
                }
                const cplx* s0 = src + (o * ext[a] + t.first) * inner;
                for (long q = 0; q < inner; ++q)
                    dst[q] = t.w[0] * s0[q] + t.w[1] * s0[q + inner] + t.w[2] * s0[q + 2 * inner] +
                             t.w[3] * s0[q + 3 * inner];
            }
        }
        ext[a] = len;
        src = dst_base;
    }
}

}  // namespace qmix::spline
