#include "qmix/penrose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qmix/parallel.hpp"
#include "qmix/quadrature.hpp"

namespace qmix {

namespace {

constexpr double kWindowHalf = 8.0;

double hilbert_of(const VelocityProfile& g, double c, bool derivative)
{
    double R = g.velocity_radius();
    double panel = 0.25 * g.scale();
    auto f = [&](double u) { return derivative ? g.marginal_derivative(u) : g.marginal(u); };
    if (std::abs(c) - kWindowHalf > R) {
        auto plain = [&](double u) { return f(u) / (u - c); };
        return integrate_panels(plain, -R, R, panels_for(-R, R, panel));
    }
    return principal_value(f, c, -R, R, kWindowHalf, panel);
}

cplx one_plus_L(double what, cplx m) { return 1.0 + what * m; }

void check_hbar(double hbar)
{
    if (!(hbar >= 0.0 && hbar <= 1.0)) throw DomainError("hbar must lie in [0, 1]");
}

}  // namespace

double marginal_hilbert(const VelocityProfile& g, double c) { return hilbert_of(g, c, false); }
double marginal_derivative_hilbert(const VelocityProfile& g, double c) { return hilbert_of(g, c, true); }

cplx lindhard_damped(const VelocityProfile& g, double kabs, cplx lambda, double hbar)
{
    double re = lambda.real(), im = lambda.imag();
    if (!(re > 0.0)) throw DomainError("damped branch needs Re λ > 0");
    double h = 0.5 * hbar * kabs;
    double osc = std::max(std::abs(im) / kabs, h);
    double width = 0.5 * g.fourier_scale();
    if (osc > 0.0) width = std::min(width, kPi / osc);
    width = std::min(width, 0.5 * kabs / re);
    double smax = std::min(g.fourier_radius(), 32.3 * kabs / re);
    cplx rate = lambda / kabs;
    auto f = [&](double s) {
        return std::exp(-rate * s) * (sinc_factor(hbar * kabs, s) * g.fourier_radial(s));
    };
    double ref = g.fourier_radial(0.0) * g.fourier_scale() * g.fourier_scale();
    int n = panels_for(0.0, smax, width);
    cplx coarse = integrate_panels(f, 0.0, smax, n);
    cplx fine = integrate_panels(f, 0.0, smax, 2 * n);
    double gap = std::abs(fine - coarse);
    if (gap > 1e-8 * std::max(std::abs(fine), ref)) {
        coarse = fine;
        fine = integrate_panels(f, 0.0, smax, 4 * n);
        gap = std::abs(fine - coarse);
        if (gap > 1e-8 * std::max(std::abs(fine), ref))
            throw NumericalError("lindhard quadrature did not converge", gap);
    }
    return fine / two_pi_pow(g.dim());
}

cplx lindhard_boundary(const VelocityProfile& g, double kabs, double tau, double hbar)
{
    double pref = 1.0 / two_pi_pow(g.dim());
    double a = tau / kabs;
    if (hbar == 0.0) {
        double pv = marginal_derivative_hilbert(g, a);
        return pref * cplx(-pv, kPi * g.marginal_derivative(a));
    }
    double h = 0.5 * hbar * kabs;
    double re = marginal_hilbert(g, a - h) - marginal_hilbert(g, a + h);
    double jump = kPi * (g.marginal(a + h) - g.marginal(a - h));
    return pref / (hbar * kabs) * cplx(re, jump);
}

cplx lindhard(const VelocityProfile& g, const Vec& k, cplx lambda, double hbar)
{
    check_hbar(hbar);
    if (!(lambda.real() >= 0.0)) throw DomainError("lindhard needs Re λ >= 0");
    if (!k.finite() || !std::isfinite(lambda.imag())) throw DomainError("lindhard: non-finite input");
    double kabs = k.norm();
    if (kabs == 0.0) return 0.0;
    if (lambda.real() > 0.0) return lindhard_damped(g, kabs, lambda, hbar);
    return lindhard_boundary(g, kabs, lambda.imag(), hbar);
}

DispersionPoint dispersion(const InteractionKernel& w, const VelocityProfile& g, const Vec& k, cplx lambda,
                           double hbar)
{
    DispersionPoint p;
    p.lambda = lambda;
    p.k = k;
    p.hbar = hbar;
    double what = kernel_hat(w, k);
    if (what == 0.0 || k.norm() == 0.0) {
        check_hbar(hbar);
        if (!(lambda.real() >= 0.0)) throw DomainError("dispersion needs Re λ >= 0");
        p.m_g = (k.norm() == 0.0) ? cplx(0.0) : lindhard(g, k, lambda, hbar);
        p.one_plus_L = 1.0;
        return p;
    }
    p.m_g = lindhard(g, k, lambda, hbar);
    p.one_plus_L = one_plus_L(what, p.m_g);
    return p;
}

namespace {

template <class Eval>
void refine_curve(std::vector<double>& taus, std::vector<cplx>& zs, Eval&& eval, const NyquistOptions& opt)
{
    for (;;) {
        std::vector<double> nt;
        std::vector<cplx> nz;
        bool inserted = false;
        for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
            nt.push_back(taus[i]);
            nz.push_back(zs[i]);
            if (std::abs(zs[i + 1] - zs[i]) >= opt.max_step) {
                double tm = 0.5 * (taus[i] + taus[i + 1]);
                if (tm == taus[i] || tm == taus[i + 1])
                    throw ResolutionError("nyquist curve refinement hit floating-point resolution");
                nt.push_back(tm);
                nz.push_back(eval(tm));
                inserted = true;
            }
        }
        nt.push_back(taus.back());
        nz.push_back(zs.back());
        taus.swap(nt);
        zs.swap(nz);
        if (!inserted) return;
        if (taus.size() > opt.max_points)
            throw ResolutionError("nyquist curve refinement exceeded " + std::to_string(opt.max_points) +
                                  " points");
    }
}

}  // namespace

std::vector<cplx> nyquist_curve(const InteractionKernel& w, const VelocityProfile& g, const Vec& k, double hbar,
                                const std::vector<double>& tau_grid, const NyquistOptions& opt)
{
    check_hbar(hbar);
    if (tau_grid.size() < 2) throw DomainError("nyquist tau grid needs at least 2 points");
    for (std::size_t i = 0; i + 1 < tau_grid.size(); ++i)
        if (!(tau_grid[i] < tau_grid[i + 1])) throw DomainError("nyquist tau grid must be increasing");
    if (std::abs(tau_grid.front() + tau_grid.back()) > 1e-12 * std::abs(tau_grid.back()))
        throw DomainError("nyquist tau grid must be symmetric about 0");
    double what = kernel_hat(w, k), kabs = k.norm();
    std::vector<double> taus = tau_grid;
    std::vector<cplx> zs(taus.size(), 0.0);
    if (what != 0.0 && kabs != 0.0) {
        auto eval = [&](double t) { return what * lindhard_boundary(g, kabs, t, hbar); };
        for (std::size_t i = 0; i < taus.size(); ++i) zs[i] = eval(taus[i]);
        refine_curve(taus, zs, eval, opt);
    }
    zs.push_back(zs.front());
    return zs;
}

int winding_number(const std::vector<cplx>& curve, cplx point)
{
    if (curve.size() < 2) throw DomainError("winding number needs a closed curve");
    double scale = 1.0;
    for (const cplx& z : curve) scale = std::max(scale, std::abs(z));
    if (std::abs(curve.front() - curve.back()) > 1e-9 * scale)
        throw DomainError("winding number needs a closed curve (first != last)");
    double total = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (std::abs(curve[i] - point) < 1e-9)
            throw DegeneracyError("curve passes within 1e-9 of the winding point");
        if (i + 1 < curve.size()) total += std::arg((curve[i + 1] - point) / (curve[i] - point));
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

bool PenroseReport::stable() const
{
    if (!(kappa > 0.0) || tail_certificate < 0.5) return false;
    for (const auto& s : winding_numbers)
        if (s.winding != 0) return false;
    return true;
}

namespace {

struct KResult {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_lam = 0;
    std::size_t best_h = 0;
    double tail = std::numeric_limits<double>::infinity();
    std::vector<WindingSample> windings;
    std::size_t count = 0;
};

}  // namespace

PenroseReport penrose_margin(const InteractionKernel& w, const VelocityProfile& g,
                             const std::vector<double>& hbar_set, double K, double Lambda,
                             const ScanResolution& res)
{
    if (!(K > 0.0) || !(Lambda > 0.0)) throw DomainError("penrose scan needs K > 0 and Λ > 0");
    if (hbar_set.empty()) throw DomainError("penrose scan needs a nonempty hbar set");
    for (double h : hbar_set) check_hbar(h);
    if (res.n_k < 1 || res.n_tau < 3 || res.n_interior_re < 1 || res.n_interior_im < 1 || res.n_shell < 1)
        throw DomainError("penrose scan resolution too small");

    // Fixed λ list shared by every k: boundary, interior, shell.
    std::vector<cplx> lams;
    std::vector<bool> on_shell;
    for (int j = 0; j < res.n_tau; ++j) {
        double tau = -Lambda + 2.0 * Lambda * j / (res.n_tau - 1);
        lams.emplace_back(0.0, tau);
        on_shell.push_back(j == 0 || j == res.n_tau - 1);
    }
    std::size_t n_boundary = lams.size();
    for (int a = 0; a < res.n_interior_re; ++a) {
        double x = (res.n_interior_re == 1)
                       ? Lambda * 0.5
                       : Lambda * std::pow(1e-3, 1.0 - double(a) / (res.n_interior_re - 1));
        for (int b = 0; b < res.n_interior_im; ++b) {
            double y = (res.n_interior_im == 1) ? 0.0 : -Lambda + 2.0 * Lambda * b / (res.n_interior_im - 1);
            if (std::hypot(x, y) <= Lambda * (1.0 + 1e-12)) {
                lams.emplace_back(x, y);
                on_shell.push_back(false);
            }
        }
    }
    for (int j = 0; j < res.n_shell; ++j) {
        double th = -0.5 * kPi + kPi * (j + 1) / (res.n_shell + 1);
        lams.push_back(std::polar(Lambda, th));
        on_shell.push_back(true);
    }

    std::vector<KResult> out(res.n_k);
    int d = g.dim();
    parallel_for(res.n_k, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double kabs = K * double(i + 1) / res.n_k;
            bool k_shell = (int(i) == res.n_k - 1);
            double what = w.fourier_radial(kabs);
            KResult& r = out[i];
            std::vector<std::vector<double>> mod(hbar_set.size(), std::vector<double>(lams.size()));
            for (std::size_t hi = 0; hi < hbar_set.size(); ++hi) {
                double hbar = hbar_set[hi];
                auto L = [&](cplx lam) -> cplx {
                    if (what == 0.0) return 0.0;
                    return what * lindhard(g, Vec::along(d, kabs), lam, hbar);
                };
                std::vector<cplx> zs(lams.size());
                for (std::size_t j = 0; j < lams.size(); ++j) {
                    zs[j] = L(lams[j]);
                    double m = std::abs(1.0 + zs[j]);
                    if (!std::isfinite(m))
                        throw NumericalError("NaN in penrose scan at |k|=" + std::to_string(kabs) +
                                             " λ=(" + std::to_string(lams[j].real()) + "," +
                                             std::to_string(lams[j].imag()) + ") ħ=" + std::to_string(hbar));
                    mod[hi][j] = m;
                    if (k_shell || on_shell[j]) r.tail = std::min(r.tail, m);
                }
                r.count += lams.size();

                // Nyquist curve: boundary values, extended until L̃ has decayed.
                std::vector<double> taus;
                std::vector<cplx> curve;
                for (std::size_t j = 0; j < n_boundary; ++j) {
                    taus.push_back(lams[j].imag());
                    curve.push_back(zs[j]);
                }
                double ext = Lambda;
                std::vector<double> ext_t;
                std::vector<cplx> ext_lo, ext_hi;
                while (std::abs(curve.back()) >= 0.25 || (!ext_hi.empty() && std::abs(ext_hi.back()) >= 0.25)) {
                    ext *= 1.5;
                    if (ext > 1e7) throw ResolutionError("L̃ does not decay along the imaginary axis");
                    ext_t.push_back(ext);
                    ext_hi.push_back(L(cplx(0.0, ext)));
                    ext_lo.push_back(L(cplx(0.0, -ext)));
                    if (std::abs(ext_hi.back()) < 0.25 && std::abs(ext_lo.back()) < 0.25) break;
                }
                std::vector<double> t_all;
                std::vector<cplx> z_all;
                for (std::size_t j = ext_t.size(); j-- > 0;) {
                    t_all.push_back(-ext_t[j]);
                    z_all.push_back(ext_lo[j]);
                }
                for (std::size_t j = 0; j < taus.size(); ++j) {
                    t_all.push_back(taus[j]);
                    z_all.push_back(curve[j]);
                }
                for (std::size_t j = 0; j < ext_t.size(); ++j) {
                    t_all.push_back(ext_t[j]);
                    z_all.push_back(ext_hi[j]);
                }
                if (what != 0.0) refine_curve(t_all, z_all, [&](double t) { return L(cplx(0.0, t)); }, {});
                // Descending τ traverses the right half plane counterclockwise.
                std::vector<cplx> closed(z_all.rbegin(), z_all.rend());
                closed.push_back(closed.front());
                WindingSample ws;
                ws.k = kabs;
                ws.hbar = hbar;
                ws.tau_extent = t_all.back();
                try {
                    ws.winding = winding_number(closed, -1.0);
                } catch (const DegeneracyError&) {
                    ws.winding = 0;  // margin is 0 there; kappa reports it
                }
                r.windings.push_back(ws);
            }
            for (std::size_t j = 0; j < lams.size(); ++j)
                for (std::size_t hi = 0; hi < hbar_set.size(); ++hi)
                    if (mod[hi][j] < r.best) {
                        r.best = mod[hi][j];
                        r.best_lam = j;
                        r.best_h = hi;
                    }
        }
    });

    PenroseReport rep;
    rep.K = K;
    rep.Lambda = Lambda;
    rep.resolution = res;
    rep.dk = K / res.n_k;
    rep.dtau = 2.0 * Lambda / (res.n_tau - 1);
    rep.kappa = std::numeric_limits<double>::infinity();
    rep.tail_certificate = std::numeric_limits<double>::infinity();
    for (int i = 0; i < res.n_k; ++i) {
        const KResult& r = out[i];
        if (r.best < rep.kappa) {
            rep.kappa = r.best;
            rep.argmin = {lams[r.best_lam], K * double(i + 1) / res.n_k, hbar_set[r.best_h]};
        }
        rep.tail_certificate = std::min(rep.tail_certificate, r.tail);
        rep.points_scanned += r.count;
        for (const auto& ws : r.windings) rep.winding_numbers.push_back(ws);
    }
    return rep;
}

std::optional<cplx> find_unstable_root(const InteractionKernel& w, const VelocityProfile& g, double kabs,
                                       double hbar, double Lambda)
{
    double what = w.fourier_radial(kabs);
    if (what == 0.0 || kabs == 0.0) return std::nullopt;
    auto F = [&](cplx lam) { return 1.0 + what * lindhard_damped(g, kabs, lam, hbar); };
    cplx best = 0.0;
    double fbest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 12; ++a) {
        double x = Lambda * std::pow(1e-3, 1.0 - a / 11.0);
        for (int b = 0; b < 17; ++b) {
            cplx lam(x, -Lambda + 2.0 * Lambda * b / 16.0);
            double v = std::abs(F(lam));
            if (v < fbest) {
                fbest = v;
                best = lam;
            }
        }
    }
    cplx lam = best;
    for (int it = 0; it < 80; ++it) {
        cplx f = F(lam);
        if (std::abs(f) < 1e-9) return lam.real() > 1e-8 ? std::optional<cplx>(lam) : std::nullopt;
        double delta = 1e-5 * (1.0 + std::abs(lam));
        cplx df = (F(lam + cplx(0.0, delta)) - F(lam - cplx(0.0, delta))) / cplx(0.0, 2.0 * delta);
        if (df == 0.0) break;
        cplx next = lam - f / df;
        if (next.real() <= 0.0) next = cplx(0.5 * lam.real(), next.imag());
        lam = next;
    }
    return std::nullopt;
}

ConditionReport sufficient_condition(const InteractionKernel& w, const VelocityProfile& g, Condition which,
                                     const ConditionOptions& opt)
{
    ConditionReport rep;
    rep.which = which;
    int d = g.dim();
    switch (which) {
    case Condition::smallness: {
        // |m_g| <= (2π)^{-d} ∫_0^∞ s |ĝ(s)| ds for every λ, k, ħ.
        double S = g.fourier_radius();
        auto f = [&](double s) { return s * std::abs(g.fourier_radial(s)); };
        double cert = integrate_panels(f, 0.0, S, panels_for(0.0, S, 0.25 * g.fourier_scale())) / two_pi_pow(d);
        rep.value = w.l1_norm_bound() * cert;
        rep.passed = rep.value < 1.0;
        rep.note = "surrogate: ||w||_L1 times sampled certificate (2pi)^-d int s|ghat(s)| ds = " +
                   std::to_string(cert);
        break;
    }
    case Condition::repulsive_decreasing: {
        double kcap = 4.0 * opt.K;
        if (w.kind() == InteractionKernel::Kind::tabulated) kcap = std::min(kcap, opt.K);
        double wmin = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 2000; ++i) wmin = std::min(wmin, w.fourier_radial(kcap * i / 2000.0));
        bool monotone = true;
        double R = g.velocity_radius(), g0 = g.marginal(0.0);
        double prev = g0;
        for (int i = 1; i <= 400; ++i) {
            double u = R * i / 400.0;
            double gk = g.marginal(u);
            if (gk <= 1e-250 * g0) break;
            if (!(g.marginal_derivative(u) < 0.0) || !(gk < prev)) {
                monotone = false;
                break;
            }
            prev = gk;
        }
        rep.value = wmin;
        rep.passed = wmin >= 0.0 && monotone;
        rep.note = std::string("min sampled what = ") + std::to_string(wmin) +
                   (monotone ? "; marginal strictly decreasing" : "; marginal not strictly decreasing");
        break;
    }
    case Condition::generalized: {
        double worst = std::numeric_limits<double>::infinity();
        int zeros = 0;
        for (double hbar : opt.hbar_set) {
            check_hbar(hbar);
            for (int i = 1; i <= opt.n_k; ++i) {
                double kabs = opt.K * i / opt.n_k;
                double what = w.fourier_radial(kabs);
                auto imag_part = [&](double tau) {
                    double a = tau / kabs;
                    if (hbar == 0.0) return g.marginal_derivative(a);
                    double h = 0.5 * hbar * kabs;
                    return g.marginal(a + h) - g.marginal(a - h);
                };
                auto check = [&](double tau) {
                    ++zeros;
                    double re = what * lindhard_boundary(g, kabs, tau, hbar).real();
                    worst = std::min(worst, 1.0 + re);
                };
                double tprev = -opt.Lambda, fprev = imag_part(tprev);
                if (fprev == 0.0) check(tprev);
                for (int j = 1; j < opt.n_tau; ++j) {
                    double t = -opt.Lambda + 2.0 * opt.Lambda * j / (opt.n_tau - 1);
                    double f = imag_part(t);
                    if (f == 0.0) {
                        check(t);
                    } else if (fprev != 0.0 && (f < 0) != (fprev < 0)) {
                        double lo = tprev, hi = t, flo = fprev;
                        for (int it = 0; it < 60; ++it) {
                            double mid = 0.5 * (lo + hi), fm = imag_part(mid);
                            if ((fm < 0) == (flo < 0)) {
                                lo = mid;
                                flo = fm;
                            } else {
                                hi = mid;
                            }
                        }
                        check(0.5 * (lo + hi));
                    }
                    tprev = t;
                    fprev = f;
                }
            }
        }
        rep.value = zeros ? worst : 1.0;
        rep.passed = rep.value > 0.0;
        rep.note = std::to_string(zeros) + " zeros of the jump term located";
        break;
    }
    }
    return rep;
}

}  // namespace qmix
