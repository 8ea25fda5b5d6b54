#include "qmix/initial.hpp"

#include <cmath>

#include "qmix/spline.hpp"

namespace qmix {

struct InitialWigner::Grid {
    WignerField field;
    std::vector<cplx> coeff;  // per k row
    std::size_t block = 0;
};

namespace {

void check_common(int dim, double amplitude, double wk, double we)
{
    if (dim < 1 || dim > 3) throw DomainError("initial data dimension must be 1, 2 or 3");
    if (!std::isfinite(amplitude)) throw DomainError("initial amplitude must be finite");
    if (!(wk > 0.0) || !(we > 0.0)) throw DomainError("initial data widths must be positive");
}

}  // namespace

InitialWigner InitialWigner::gaussian(int dim, double amplitude, double width_k, double width_eta)
{
    check_common(dim, amplitude, width_k, width_eta);
    InitialWigner w;
    w.kind_ = Kind::gaussian;
    w.dim_ = dim;
    w.amp_ = amplitude;
    w.wk_ = width_k;
    w.we_ = width_eta;
    w.x0_ = Vec(dim);
    w.v0_ = Vec(dim);
    return w;
}

InitialWigner InitialWigner::rational(int dim, double amplitude, double width_k, double width_eta, double power)
{
    check_common(dim, amplitude, width_k, width_eta);
    if (!(power > 0.0)) throw DomainError("rational initial data needs a positive power");
    InitialWigner w = gaussian(dim, amplitude, width_k, width_eta);
    w.kind_ = Kind::rational;
    w.power_ = power;
    return w;
}

InitialWigner InitialWigner::sampled(const WignerField& field)
{
    InitialWigner w;
    w.kind_ = Kind::grid;
    w.dim_ = field.dim();
    auto g = std::make_shared<Grid>();
    g->field = field;
    int n = field.eta_axis().n, d = field.dim();
    g->block = static_cast<std::size_t>(std::pow(spline::coeff_extent(n), d));
    g->coeff.resize(g->block * field.k_count());
    for (std::size_t kf = 0; kf < field.k_count(); ++kf)
        spline::prefilter(field.row(kf), n, d, g->coeff.data() + kf * g->block);
    w.grid_ = std::move(g);
    return w;
}

InitialWigner InitialWigner::with_shift(const Vec& x0, const Vec& v0) const
{
    if (kind_ == Kind::grid) throw UnsupportedError("phase shifts apply to analytic initial data only");
    if (x0.dim != dim_ || v0.dim != dim_) throw DomainError("shift dimension mismatch");
    InitialWigner w = *this;
    w.x0_ = x0;
    w.v0_ = v0;
    return w;
}

InitialWigner InitialWigner::scaled(double factor) const
{
    InitialWigner w = *this;
    if (kind_ == Kind::grid) {
        auto g = std::make_shared<Grid>(*grid_);
        for (auto& v : g->field.values()) v *= factor;
        for (auto& v : g->coeff) v *= factor;
        w.grid_ = std::move(g);
    } else {
        w.amp_ *= factor;
    }
    return w;
}

cplx InitialWigner::operator()(const Vec& k, const Vec& eta) const
{
    if (kind_ == Kind::grid) {
        const WignerField& f = grid_->field;
        int m[3];
        double pos[3];
        double dk = f.k_axis().step, de = f.eta_axis().step;
        for (int a = 0; a < dim_; ++a) {
            double r = k[a] / dk;
            m[a] = static_cast<int>(std::lround(r));
            if (std::abs(r - m[a]) > 1e-9) throw RangeError("grid initial data queried off the k grid");
            pos[a] = eta[a] / de + f.eta_axis().half();
        }
        long kf = f.k_flat(m);
        if (kf < 0) return 0.0;
        bool node = true;
        for (int a = 0; a < dim_; ++a) node = node && pos[a] == std::floor(pos[a]);
        if (node) {
            long ef = 0;
            int n = f.eta_axis().n;
            for (int a = 0; a < dim_; ++a) {
                if (pos[a] < 0 || pos[a] > n - 1) return 0.0;
                ef = ef * n + static_cast<long>(pos[a]);
            }
            return f.at(kf, ef);
        }
        return spline::evaluate(grid_->coeff.data() + kf * grid_->block, f.eta_axis().n, dim_, pos);
    }
    double k2 = k.norm2(), e2 = eta.norm2();
    double shape = (kind_ == Kind::gaussian) ? std::exp(-e2 / (we_ * we_))
                                             : std::pow(1.0 + e2 / (we_ * we_), -0.5 * power_);
    double mag = amp_ * std::exp(-k2 / (wk_ * wk_)) * shape;
    double phase = k.dot(x0_) + eta.dot(v0_);
    if (phase == 0.0) return mag;
    return std::polar(mag, -phase);
}

void InitialWigner::sample(WignerField& field, double factor) const
{
    for (std::size_t kf = 0; kf < field.k_count(); ++kf) {
        Vec k = field.k_at(kf);
        for (std::size_t ef = 0; ef < field.eta_count(); ++ef)
            field.at(kf, ef) = factor * (*this)(k, field.eta_at(ef));
    }
}

}  // namespace qmix
