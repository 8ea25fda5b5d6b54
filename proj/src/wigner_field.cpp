#include "qmix/wigner_field.hpp"

#include <algorithm>
#include <cmath>

namespace qmix {

namespace {

std::size_t ipow(std::size_t b, int e)
{
    std::size_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

void unflatten(std::size_t f, int n, int d, int* m)
{
    for (int a = d - 1; a >= 0; --a) {
        m[a] = static_cast<int>(f % n) - (n - 1) / 2;
        f /= n;
    }
}

}  // namespace

WignerField::WignerField(int dim, AxisGrid k_axis, AxisGrid eta_axis, double hbar, double time)
    : dim_(dim), k_(k_axis), eta_(eta_axis), hbar_(hbar), time_(time)
{
    if (dim < 1 || dim > 3) throw DomainError("field dimension must be 1, 2 or 3");
    if (k_.n < 1 || k_.n % 2 == 0 || eta_.n < 1 || eta_.n % 2 == 0)
        throw DomainError("grid axes need an odd number of nodes");
    if (!(k_.step > 0.0) || !(eta_.step > 0.0)) throw DomainError("grid steps must be positive");
    if (!(hbar >= 0.0 && hbar <= 1.0)) throw DomainError("hbar must lie in [0, 1]");
    k_count_ = ipow(k_.n, dim);
    eta_count_ = ipow(eta_.n, dim);
    values_.assign(k_count_ * eta_count_, 0.0);
}

void WignerField::k_index(std::size_t kf, int* m) const { unflatten(kf, k_.n, dim_, m); }
void WignerField::eta_index(std::size_t ef, int* m) const { unflatten(ef, eta_.n, dim_, m); }

long WignerField::k_flat(const int* m) const
{
    long f = 0;
    int h = k_.half();
    for (int a = 0; a < dim_; ++a) {
        if (m[a] < -h || m[a] > h) return -1;
        f = f * k_.n + (m[a] + h);
    }
    return f;
}

Vec WignerField::k_at(std::size_t kf) const
{
    int m[3];
    k_index(kf, m);
    Vec v(dim_);
    for (int a = 0; a < dim_; ++a) v[a] = m[a] * k_.step;
    return v;
}

Vec WignerField::eta_at(std::size_t ef) const
{
    int m[3];
    eta_index(ef, m);
    Vec v(dim_);
    for (int a = 0; a < dim_; ++a) v[a] = m[a] * eta_.step;
    return v;
}

double WignerField::max_abs() const
{
    double m = 0.0;
    for (const cplx& v : values_) m = std::max(m, std::abs(v));
    return m;
}

double WignerField::boundary_max_abs() const
{
    double m = 0.0;
    int mk[3], me[3];
    for (std::size_t kf = 0; kf < k_count_; ++kf) {
        k_index(kf, mk);
        bool kb = false;
        for (int a = 0; a < dim_; ++a) kb = kb || std::abs(mk[a]) == k_.half();
        for (std::size_t ef = 0; ef < eta_count_; ++ef) {
            bool b = kb;
            if (!b) {
                eta_index(ef, me);
                for (int a = 0; a < dim_; ++a) b = b || std::abs(me[a]) == eta_.half();
            }
            if (b) m = std::max(m, std::abs(at(kf, ef)));
        }
    }
    return m;
}

double WignerField::conjugate_defect() const
{
    // Row-major with equal extents: the mirror of flat index f is N - 1 - f.
    std::size_t N = values_.size();
    double m = 0.0;
    for (std::size_t f = 0; f < N; ++f) m = std::max(m, std::abs(values_[N - 1 - f] - std::conj(values_[f])));
    return m;
}

void WignerField::symmetrize()
{
    std::size_t N = values_.size();
    for (std::size_t f = 0; f <= (N - 1) / 2; ++f) {
        std::size_t g = N - 1 - f;
        cplx avg = 0.5 * (values_[f] + std::conj(values_[g]));
        values_[f] = avg;
        values_[g] = std::conj(avg);
    }
}

double WignerField::cell() const { return std::pow(k_.step * eta_.step, dim_); }

}  // namespace qmix
