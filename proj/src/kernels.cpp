#include "qmix/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "qmix/quadrature.hpp"

namespace qmix {

namespace {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

double gauss_marginal_prefactor(int d, double beta)
{
    return std::pow(kTwoPi * beta * beta, 0.5 * (d - 1));
}

// ∫_0^R f(r) dr over knot-aligned intervals of width h.
template <class F>
double knot_integral(F&& f, double h, std::size_t intervals)
{
    double total = 0.0;
    for (std::size_t i = 0; i < intervals; ++i) total += integrate_panels(f, i * h, (i + 1) * h, 1);
    return total;
}

}  // namespace

double sphere_area(int d)
{
    switch (d) {
    case 1: return 2.0;
    case 2: return kTwoPi;
    case 3: return 4.0 * kPi;
    default: throw DomainError("dimension must be 1, 2 or 3");
    }
}

struct VelocityProfile::Table {
    int dim = 1;
    double step = 0.0;
    std::size_t n = 0;
    double r_max = 0.0;
    Spline spline;

    mutable std::once_flag ghat_once;
    mutable double ghat_step = 0.0;
    mutable double ghat_max = 0.0;
    mutable double ghat_radius = 0.0;
    mutable std::vector<double> ghat_samples;
    mutable std::unique_ptr<Spline> ghat_spline;

    Table(int d, const std::vector<double>& v, double h)
        : dim(d), step(h), n(v.size()), r_max(h * (v.size() - 1)),
          spline(v.begin(), v.end(), 0.0, h, 0.0, 0.0)
    {
    }

    double g(double r) const
    {
        r = std::abs(r);
        if (r > r_max) return 0.0;
        return std::max(0.0, spline(r));
    }
    double gp(double r) const
    {
        if (r > r_max) return 0.0;
        return spline.prime(r);
    }

    // ĝ by Hankel-type radial quadrature.
    double hankel(double s) const
    {
        std::size_t m = n - 1;
        switch (dim) {
        case 1:
            return 2.0 * knot_integral([&](double r) { return g(r) * std::cos(s * r); }, step, m);
        case 2:
            return kTwoPi * knot_integral(
                                [&](double r) { return g(r) * std::cyl_bessel_j(0.0, s * r) * r; },
                                step, m);
        default:
            if (s == 0.0)
                return 4.0 * kPi * knot_integral([&](double r) { return g(r) * r * r; }, step, m);
            return 4.0 * kPi / s *
                   knot_integral([&](double r) { return g(r) * std::sin(s * r) * r; }, step, m);
        }
    }

    void build_fourier_table() const
    {
        std::call_once(ghat_once, [this] {
            double g0 = hankel(0.0);
            ghat_step = std::min(0.01, kPi / (8.0 * r_max));
            // Scan until |ĝ| stays below 1e-14 ĝ(0) for a while, or the
            // sampling of g stops resolving the oscillation.
            double s_cap = kPi / step;
            ghat_samples.clear();
            int quiet = 0;
            double s = 0.0;
            ghat_radius = s_cap;
            for (std::size_t i = 0;; ++i) {
                s = i * ghat_step;
                double v = (i == 0) ? g0 : hankel(s);
                ghat_samples.push_back(v);
                quiet = (std::abs(v) < 1e-14 * g0) ? quiet + 1 : 0;
                if (quiet > 50 || s >= s_cap) {
                    ghat_radius = s;
                    break;
                }
            }
            ghat_max = s;
            ghat_spline = std::make_unique<Spline>(ghat_samples.begin(), ghat_samples.end(), 0.0,
                                                   ghat_step, 0.0);
        });
    }

    double ghat(double s) const
    {
        build_fourier_table();
        if (s > ghat_max) return hankel(s);
        if (s == 0.0) return ghat_samples[0];
        return (*ghat_spline)(s);
    }

    double moment(int power) const
    {
        return sphere_area(dim) *
               knot_integral([&](double r) { return g(r) * std::pow(r, power); }, step, n - 1);
    }
};

VelocityProfile VelocityProfile::gaussian(int dim, double scale, double amplitude)
{
    if (dim < 1 || dim > 3) throw DomainError("profile dimension must be 1, 2 or 3");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("gaussian scale must be positive");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
        throw DomainError("profile amplitude must be positive");
    VelocityProfile g;
    g.kind_ = Kind::gaussian;
    g.dim_ = dim;
    g.amp_ = amplitude;
    g.beta_ = scale;
    return g;
}

VelocityProfile VelocityProfile::tabulated(int dim, std::vector<double> samples, double step,
                                           double amplitude)
{
    if (dim < 1 || dim > 3) throw DomainError("profile dimension must be 1, 2 or 3");
    if (samples.size() < 8) throw DomainError("tabulated profile needs at least 8 samples");
    if (!(step > 0.0)) throw DomainError("tabulated profile step must be positive");
    for (double& v : samples) {
        if (!std::isfinite(v) || v < 0.0) throw DomainError("tabulated profile must be finite and >= 0");
        v *= amplitude;
    }
    VelocityProfile g;
    g.kind_ = Kind::tabulated;
    g.dim_ = dim;
    g.amp_ = amplitude;
    auto t = std::make_shared<Table>(dim, samples, step);
    double m0 = t->moment(dim - 1), m2 = t->moment(dim + 1);
    if (!(m0 > 0.0)) throw DomainError("tabulated profile has zero mass");
    g.beta_ = std::sqrt(m2 / (dim * m0));
    g.table_ = std::move(t);
    return g;
}

double VelocityProfile::radial(double r) const
{
    if (kind_ == Kind::gaussian) return amp_ * std::exp(-r * r / (2.0 * beta_ * beta_));
    return table_->g(r);
}

double VelocityProfile::fourier_radial(double s) const
{
    s = std::abs(s);
    if (kind_ == Kind::gaussian)
        return amp_ * std::pow(std::sqrt(kTwoPi) * beta_, dim_) * std::exp(-0.5 * beta_ * beta_ * s * s);
    return table_->ghat(s);
}

double VelocityProfile::fourier_curvature() const
{
    if (kind_ == Kind::gaussian) return -beta_ * beta_ * fourier_radial(0.0);
    return -table_->moment(dim_ + 1) / dim_;
}

double VelocityProfile::marginal(double u) const
{
    if (!std::isfinite(u)) throw DomainError("marginal argument must be finite");
    if (kind_ == Kind::gaussian)
        return amp_ * gauss_marginal_prefactor(dim_, beta_) * std::exp(-u * u / (2.0 * beta_ * beta_));
    const Table& t = *table_;
    double au = std::abs(u);
    switch (dim_) {
    case 1: return t.g(au);
    case 2: {
        if (au >= t.r_max) return 0.0;
        double smax = std::sqrt(t.r_max * t.r_max - au * au);
        auto f = [&](double s) { return t.g(std::sqrt(au * au + s * s)); };
        return 2.0 * integrate_panels(f, 0.0, smax, panels_for(0.0, smax, 4.0 * t.step));
    }
    default: {
        if (au >= t.r_max) return 0.0;
        auto f = [&](double r) { return t.g(r) * r; };
        return kTwoPi * integrate_panels(f, au, t.r_max, panels_for(au, t.r_max, 2.0 * t.step));
    }
    }
}

double VelocityProfile::marginal_derivative(double u) const
{
    if (kind_ == Kind::gaussian) return -u / (beta_ * beta_) * marginal(u);
    const Table& t = *table_;
    double au = std::abs(u);
    switch (dim_) {
    case 1: return (u < 0 ? -1.0 : 1.0) * t.gp(au);
    case 2: {
        if (au >= t.r_max || u == 0.0) return 0.0;
        double smax = std::sqrt(t.r_max * t.r_max - au * au);
        auto f = [&](double s) {
            double r = std::sqrt(u * u + s * s);
            return t.gp(r) * u / r;
        };
        return 2.0 * integrate_panels(f, 0.0, smax, panels_for(0.0, smax, 4.0 * t.step));
    }
    default: return -kTwoPi * u * t.g(au);
    }
}

double VelocityProfile::velocity_radius() const
{
    if (kind_ == Kind::gaussian) return 9.5 * beta_;
    return table_->r_max;
}

double VelocityProfile::fourier_radius() const
{
    if (kind_ == Kind::gaussian) return 9.0 / beta_;
    table_->build_fourier_table();
    return table_->ghat_radius;
}

double VelocityProfile::mass() const
{
    if (kind_ == Kind::tabulated) return table_->moment(dim_ - 1);
    double R = velocity_radius();
    auto f = [&](double r) { return radial(r) * std::pow(r, dim_ - 1); };
    return sphere_area(dim_) * integrate_panels(f, 0.0, R, panels_for(0.0, R, 0.25 * beta_));
}

double profile_fourier(const VelocityProfile& g, const Vec& p)
{
    if (!p.finite()) throw DomainError("profile_fourier: non-finite argument");
    return g.fourier_radial(p.norm());
}

double marginal(const VelocityProfile& g, double u) { return g.marginal(u); }

double steady_density(const VelocityProfile& g) { return g.fourier_radial(0.0) / two_pi_pow(g.dim()); }

double steady_wigner(const VelocityProfile& g, const Vec& xi, double hbar)
{
    if (!(hbar > 0.0)) throw DomainError("steady_wigner needs hbar > 0");
    int d = g.dim();
    double q = xi.norm();
    // y-radius where ĝ(|y|/ħ) is negligible; panel resolves both scales.
    double Y = hbar * g.fourier_radius();
    double width = std::min(0.1 * hbar / g.scale(), q > 0 ? 0.5 * hbar / q : 1e300);
    auto kern = [&](double rho) { return g.fourier_radial(rho / hbar) / two_pi_pow(d); };
    double a = q / hbar;
    double integral;
    switch (d) {
    case 1:
        integral = 2.0 * integrate_panels([&](double r) { return std::cos(a * r) * kern(r); }, 0.0, Y,
                                          panels_for(0.0, Y, width));
        break;
    case 2:
        integral = kTwoPi * integrate_panels(
                                [&](double r) { return std::cyl_bessel_j(0.0, a * r) * kern(r) * r; },
                                0.0, Y, panels_for(0.0, Y, width));
        break;
    default:
        integral = 4.0 * kPi *
                   integrate_panels(
                       [&](double r) {
                           double x = a * r;
                           double sinc = (x < 1e-8) ? 1.0 - x * x / 6.0 : std::sin(x) / x;
                           return sinc * kern(r) * r * r;
                       },
                       0.0, Y, panels_for(0.0, Y, width));
    }
    return integral / (two_pi_pow(d) * std::pow(hbar, d));
}

struct InteractionKernel::Table {
    double step;
    double k_max;
    Spline spline;
    Table(const std::vector<double>& v, double h)
        : step(h), k_max(h * (v.size() - 1)), spline(v.begin(), v.end(), 0.0, h, 0.0)
    {
    }
};

InteractionKernel InteractionKernel::yukawa(int dim, double alpha, double strength)
{
    if (dim != 3) throw UnsupportedError("yukawa kernel is defined for d = 3 only");
    if (!(alpha > 0.0)) throw DomainError("yukawa alpha must be positive");
    InteractionKernel w;
    w.kind_ = Kind::yukawa;
    w.dim_ = dim;
    w.param_ = alpha;
    w.strength_ = strength;
    w.l1_ = std::abs(strength) * 4.0 * kPi / (alpha * alpha);
    return w;
}

InteractionKernel InteractionKernel::gaussian(int dim, double width, double strength)
{
    if (dim < 1 || dim > 3) throw DomainError("kernel dimension must be 1, 2 or 3");
    if (!(width > 0.0)) throw DomainError("gaussian kernel width must be positive");
    InteractionKernel w;
    w.kind_ = Kind::gaussian;
    w.dim_ = dim;
    w.param_ = width;
    w.strength_ = strength;
    w.l1_ = std::abs(strength) * std::pow(std::sqrt(kTwoPi) * width, dim);
    return w;
}

InteractionKernel InteractionKernel::zero(int dim)
{
    if (dim < 1 || dim > 3) throw DomainError("kernel dimension must be 1, 2 or 3");
    InteractionKernel w;
    w.dim_ = dim;
    return w;
}

InteractionKernel InteractionKernel::tabulated(int dim, std::vector<double> samples, double step,
                                               double l1)
{
    if (dim < 1 || dim > 3) throw DomainError("kernel dimension must be 1, 2 or 3");
    if (samples.size() < 4 || !(step > 0.0)) throw DomainError("tabulated kernel needs >= 4 samples");
    double sup = 0.0;
    for (double v : samples) {
        if (!std::isfinite(v)) throw DomainError("tabulated kernel has non-finite sample");
        sup = std::max(sup, std::abs(v));
    }
    InteractionKernel w;
    w.kind_ = Kind::tabulated;
    w.dim_ = dim;
    w.strength_ = 1.0;
    w.l1_ = l1 >= 0.0 ? l1 : sup;
    w.table_ = std::make_shared<Table>(samples, step);
    return w;
}

double InteractionKernel::fourier_radial(double k) const
{
    k = std::abs(k);
    switch (kind_) {
    case Kind::yukawa: return strength_ * 4.0 * kPi / (k * k + param_ * param_);
    case Kind::gaussian:
        return strength_ * std::pow(std::sqrt(kTwoPi) * param_, dim_) *
               std::exp(-0.5 * param_ * param_ * k * k);
    case Kind::zero: return 0.0;
    case Kind::tabulated:
        if (k > table_->k_max * (1.0 + 1e-12))
            throw RangeError("tabulated kernel queried at |k| = " + std::to_string(k) +
                             " beyond table range " + std::to_string(table_->k_max));
        return strength_ * table_->spline(std::min(k, table_->k_max));
    }
    return 0.0;
}

double InteractionKernel::l1_norm_bound() const { return l1_; }

double InteractionKernel::sup_abs(double k_max, int samples) const
{
    if (kind_ == Kind::tabulated) k_max = std::min(k_max, table_->k_max);
    double s = 0.0;
    for (int i = 0; i < samples; ++i) s = std::max(s, std::abs(fourier_radial(k_max * i / (samples - 1))));
    return s;
}

double InteractionKernel::decay_certificate(double k_max, int samples) const
{
    if (kind_ == Kind::tabulated) k_max = std::min(k_max, table_->k_max);
    int M = (dim_ + 2) / 2;  // ceil((d+1)/2)
    double s = 0.0;
    for (int i = 0; i < samples; ++i) {
        double k = k_max * i / (samples - 1);
        s = std::max(s, std::pow(bracket(k), M - 0.5) * std::abs(fourier_radial(k)));
    }
    return s;
}

double InteractionKernel::real_space(double r) const
{
    switch (kind_) {
    case Kind::yukawa: return strength_ * std::exp(-param_ * r) / r;
    case Kind::gaussian: return strength_ * std::exp(-r * r / (2.0 * param_ * param_));
    case Kind::zero: return 0.0;
    case Kind::tabulated: throw UnsupportedError("tabulated kernel has no real-space form");
    }
    return 0.0;
}

InteractionKernel InteractionKernel::scaled(double factor) const
{
    InteractionKernel w = *this;
    w.strength_ *= factor;
    w.l1_ *= std::abs(factor);
    return w;
}

double kernel_hat(const InteractionKernel& w, const Vec& k)
{
    if (!k.finite()) throw DomainError("kernel_hat: non-finite argument");
    return w.fourier_radial(k.norm());
}

}  // namespace qmix
