#include "qmix/linear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qmix/chirpz.hpp"
#include "qmix/parallel.hpp"
#include "qmix/penrose.hpp"

namespace qmix {

const char* provenance_name(Provenance p)
{
    switch (p) {
    case Provenance::free: return "free";
    case Provenance::volterra: return "volterra";
    case Provenance::green: return "green";
    case Provenance::nonlinear: return "nonlinear";
    }
    return "unknown";
}

std::size_t sample_count(double dt, double T)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(T >= dt) || !std::isfinite(T)) throw DomainError("T must be at least dt");
    return static_cast<std::size_t>(std::ceil(T / dt - 1e-9)) + 1;
}

cplx free_density(const InitialWigner& W0, const Vec& k, double t)
{
    if (!(t >= 0.0)) throw DomainError("free_density needs t >= 0");
    return W0(k, k * t);
}

DensityTrace free_trace(const InitialWigner& W0, const Vec& k, double dt, double T, double hbar)
{
    std::size_t n = sample_count(dt, T);
    DensityTrace tr;
    tr.k = k;
    tr.dt = dt;
    tr.hbar = hbar;
    tr.provenance = Provenance::free;
    tr.times.resize(n);
    tr.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        tr.times[j] = static_cast<double>(j) * dt;
        tr.values[j] = free_density(W0, k, tr.times[j]);
    }
    return tr;
}

double volterra_kernel(const InteractionKernel& w, const VelocityProfile& g, double hbar, double t, const Vec& k)
{
    double k2 = k.norm2();
    if (k2 == 0.0 || t == 0.0) return 0.0;
    return kernel_hat(w, k) / two_pi_pow(k.dim) * sinc_factor(hbar, t * k2) * g.fourier_radial(std::sqrt(k2) * t);
}

DensityTrace solve_volterra(const std::function<double(double)>& kernel, const std::function<cplx(double)>& forcing,
                            double dt, double T)
{
    std::size_t n = sample_count(dt, T);
    std::vector<double> L(n);
    for (std::size_t j = 0; j < n; ++j) L[j] = kernel(static_cast<double>(j) * dt);
    DensityTrace tr;
    tr.dt = dt;
    tr.provenance = Provenance::volterra;
    tr.times.resize(n);
    tr.values.resize(n);
    double diag = 1.0 + 0.5 * dt * L[0];
    if (diag == 0.0) throw NumericalError("singular product-trapezoid diagonal", 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double t = static_cast<double>(m) * dt;
        tr.times[m] = t;
        cplx acc = 0.0;
        if (m > 0) {
            acc = 0.5 * L[m] * tr.values[0];
            for (std::size_t j = 1; j < m; ++j) acc += L[m - j] * tr.values[j];
        }
        cplx v = m == 0 ? forcing(t) : (forcing(t) - dt * acc) / diag;
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericalError("non-finite Volterra value at step " + std::to_string(m), std::abs(v));
        tr.values[m] = v;
    }
    return tr;
}

DensityTrace linear_density_volterra(const InitialWigner& W0, const InteractionKernel& w, const VelocityProfile& g,
                                     double hbar, const Vec& k, double dt, double T)
{
    auto kern = [&](double t) { return volterra_kernel(w, g, hbar, t, k); };
    auto force = [&](double t) { return free_density(W0, k, t); };
    DensityTrace tr = solve_volterra(kern, force, dt, T);
    tr.k = k;
    tr.hbar = hbar;
    return tr;
}

namespace {

// e^{-μt}(a t + b t^2/2 + c t^3/6) and its Laplace transform.
struct Model {
    double a = 0, b = 0, c = 0, mu = 1;
    double at(double t) const { return std::exp(-mu * t) * t * (a + t * (b / 2 + t * c / 6)); }
    cplx laplace(cplx lam) const
    {
        cplx z = 1.0 / (lam + mu);
        cplx z2 = z * z;
        return z2 * (a + z * (b + z * c));
    }
};

Model green_model(const InteractionKernel& w, const VelocityProfile& g, double hbar, const Vec& k)
{
    double k2 = k.norm2(), kabs = std::sqrt(k2);
    double c0 = kernel_hat(w, k) / two_pi_pow(k.dim);
    double g0 = g.fourier_radial(0.0), g2 = g.fourier_curvature();
    double h = 0.5 * hbar * k2;
    Model m;
    m.a = c0 * k2 * g0;
    double l3 = c0 * (-k2 * h * h * g0 + 3.0 * k2 * k2 * g2);
    double g3 = l3 - m.a * m.a;
    m.mu = std::max(0.5, kabs * bracket(hbar * kabs));
    m.b = 2.0 * m.a * m.mu;
    m.c = g3 + 3.0 * m.a * m.mu * m.mu;
    return m;
}

}  // namespace

GreenRemainder green_remainder(const InteractionKernel& w, const VelocityProfile& g, double hbar, const Vec& k,
                               double dt, std::size_t count, const GreenOptions& opt)
{
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    if (opt.n_tau < 2) throw DomainError("n_tau must be at least 2");
    double kabs = k.norm();
    GreenRemainder out;
    out.tau_max = opt.tau_max > 0.0 ? opt.tau_max : 40.0 * std::max(1.0, bracket(hbar * kabs) * kabs);
    out.dtau = 2.0 * out.tau_max / opt.n_tau;
    double horizon = dt * static_cast<double>(count > 0 ? count - 1 : 0);
    if (horizon >= kTwoPi / out.dtau)
        throw RangeError("time grid exceeds the alias-free window 2π/dτ = " + std::to_string(kTwoPi / out.dtau));
    out.values.assign(count, 0.0);
    out.min_abs_one_plus_L = 1.0;
    if (kabs == 0.0 || kernel_hat(w, k) == 0.0) return out;

    Model model = green_model(w, g, hbar, k);
    std::size_t n = static_cast<std::size_t>(opt.n_tau) + 1;
    std::vector<cplx> resid(n);
    std::vector<double> mins(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double tau = -out.tau_max + static_cast<double>(i) * out.dtau;
            cplx opl = dispersion(w, g, k, cplx(0.0, tau), hbar).one_plus_L;
            mins[i] = std::abs(opl);
            cplx gr = (opl - 1.0) / opl;
            resid[i] = gr - model.laplace(cplx(0.0, tau));
        }
    });
    out.min_abs_one_plus_L = *std::min_element(mins.begin(), mins.end());
    if (out.min_abs_one_plus_L < 1e-6)
        throw InstabilityError("|1 + L̃| = " + std::to_string(out.min_abs_one_plus_L) + " on the τ grid");

    // |R| ~ τ^{-5}: ∫_{τm}^∞ |R| ≈ |R(τm)| τm / 4
    out.truncation_bound = (std::abs(resid.front()) + std::abs(resid.back())) * out.tau_max / 4.0 / kTwoPi;

    std::vector<cplx> x(resid);
    x.front() *= 0.5;
    x.back() *= 0.5;
    std::vector<cplx> s = chirp_sum(x, -out.tau_max, out.dtau, dt, count);
    double scale = out.dtau / kTwoPi;
    for (std::size_t j = 0; j < count; ++j) out.values[j] = model.at(static_cast<double>(j) * dt) + scale * s[j];
    return out;
}

DensityTrace linear_density_green(const InitialWigner& W0, const InteractionKernel& w, const VelocityProfile& g,
                                  double hbar, const Vec& k, double dt, double T, const GreenOptions& opt)
{
    DensityTrace tr = free_trace(W0, k, dt, T, hbar);
    tr.provenance = Provenance::green;
    std::size_t n = tr.values.size();
    GreenRemainder gr = green_remainder(w, g, hbar, k, dt, n, opt);
    std::vector<cplx> H = tr.values;
    for (std::size_t m = 1; m < n; ++m) {
        cplx acc = 0.5 * (gr.values[m] * H[0] + gr.values[0] * H[m]);
        for (std::size_t j = 1; j < m; ++j) acc += gr.values[m - j] * H[j];
        tr.values[m] = H[m] - dt * acc;
    }
    return tr;
}

}  // namespace qmix
