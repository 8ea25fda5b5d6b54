#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qmix/penrose.hpp"

using namespace qmix;

// Reference values below come from 30-digit quadrature of the defining
// integrals (Dawson function for the principal values).

TEST_CASE("principal value of the gaussian marginal")
{
    auto g = VelocityProfile::gaussian(1, 1.0);
    CHECK(marginal_hilbert(g, 0.3) == doctest::Approx(-0.72982973253476225084).epsilon(1e-10));
    CHECK(marginal_hilbert(g, 1.7) == doctest::Approx(-1.7966293793030381067).epsilon(1e-10));
    CHECK(marginal_hilbert(g, 4.0) == doctest::Approx(-0.67778300044136164657).epsilon(1e-10));
    CHECK(marginal_hilbert(g, -1.7) == doctest::Approx(1.7966293793030381067).epsilon(1e-10));
}

TEST_CASE("classical boundary lindhard values")
{
    auto g = VelocityProfile::gaussian(1, 1.0);
    struct Row { double a, re, im; };
    const Row rows[] = {
        {0.0, 0.39894228040143267794, 0.0},
        {0.5, 0.30711688146244322631, -0.22062422564614885072},
        {1.3, 0.0021248666437330530366, -0.27921228283698043985},
        {2.5, -0.10160881551049705916, -0.054921167029259271658},
    };
    for (double k : {1.0, 0.6}) {
        for (const auto& r : rows) {
            cplx m = lindhard_boundary(g, k, r.a * k, 0.0);
            CHECK(std::abs(m.real() - r.re) < 1e-9);
            CHECK(std::abs(m.imag() - r.im) < 1e-9);
        }
    }
}

TEST_CASE("damped lindhard values")
{
    struct Row { int d; double k; cplx lam; double hbar, re, im; };
    const Row rows[] = {
        {1, 0.7, {0.4, 0.9}, 0.5, 0.046121283841610160035, -0.15094187794660147532},
        {1, 1.5, {1.0, -2.0}, 1.0, 0.047661344656897239053, 0.12288842791342460742},
        {3, 0.8, {0.3, 0.5}, 0.25, 0.029434179788392644401, -0.023940167094819439952},
        {3, 2.0, {2.0, 1.0}, 0.0, 0.019020033409512691781, -0.009177565716784624811},
    };
    for (const auto& r : rows) {
        auto g = VelocityProfile::gaussian(r.d, 1.0);
        cplx m = lindhard(g, Vec::along(r.d, r.k), r.lam, r.hbar);
        CHECK(std::abs(m.real() - r.re) < 1e-10);
        CHECK(std::abs(m.imag() - r.im) < 1e-10);
    }
}

TEST_CASE("zero mode and zero kernel")
{
    auto g = VelocityProfile::gaussian(3, 1.0);
    CHECK(lindhard(g, Vec(3), cplx(0.3, 2.0), 0.5) == cplx(0.0));
    auto y = InteractionKernel::yukawa(3, 1.0);
    auto p = dispersion(y, g, Vec(3), cplx(0.0, 1.0), 1.0);
    CHECK(p.m_g == cplx(0.0));
    CHECK(p.one_plus_L == cplx(1.0));
    auto z = InteractionKernel::zero(3);
    CHECK(dispersion(z, g, Vec{0.4, 0.0, 0.1}, cplx(0.2, 1.0), 0.25).one_plus_L == cplx(1.0));
}

TEST_CASE("dispersion composes kernel and lindhard")
{
    auto g = VelocityProfile::gaussian(3, 1.0);
    auto y = InteractionKernel::yukawa(3, 1.0);
    Vec k{1.0, 0.0, 0.0};
    auto p = dispersion(y, g, k, cplx(0.0, 0.0), 1.0);
    CHECK(std::abs(p.one_plus_L - (1.0 + 2 * kPi * lindhard_boundary(g, 1.0, 0.0, 1.0))) < 1e-14);
    // damped branch at tiny Re λ as the independent route
    cplx m_damped = lindhard_damped(g, 1.0, cplx(1e-6, 0.0), 1.0);
    CHECK(std::abs(p.m_g - m_damped) < 1e-6);
}

TEST_CASE("error paths")
{
    auto g = VelocityProfile::gaussian(1, 1.0);
    CHECK_THROWS_AS(lindhard(g, Vec{1.0}, cplx(-0.1, 0.0), 0.5), DomainError);
    CHECK_THROWS_AS(lindhard(g, Vec{1.0}, cplx(0.1, 0.0), 1.5), DomainError);
    std::vector<cplx> open{{1, 0}, {0, 1}, {-1, 0}};
    CHECK_THROWS_AS(winding_number(open, 0.0), DomainError);
    std::vector<cplx> through{{1, 0}, {0, 0}, {-1, 0}, {1, 0}};
    CHECK_THROWS_AS(winding_number(through, 0.0), DegeneracyError);
    auto w = InteractionKernel::zero(1);
    CHECK_THROWS_AS(penrose_margin(w, g, {}, 8.0, 8.0), DomainError);
}

TEST_CASE("winding numbers of simple curves")
{
    std::vector<cplx> circle;
    for (int i = 0; i <= 64; ++i) circle.push_back(std::polar(1.0, 2 * kPi * i / 64));
    CHECK(winding_number(circle, 0.0) == 1);
    CHECK(winding_number(circle, 3.0) == 0);
    std::vector<cplx> twice;
    for (int i = 0; i <= 128; ++i) twice.push_back(std::polar(2.0, -4 * kPi * i / 128));
    CHECK(winding_number(twice, cplx(0.5, 0.5)) == -2);
    std::vector<cplx> constant(10, cplx(0.0));
    CHECK(winding_number(constant, -1.0) == 0);
}

TEST_CASE("nyquist curves")
{
    auto g = VelocityProfile::gaussian(3, 1.0);
    std::vector<double> taus;
    for (int i = -200; i <= 200; ++i) taus.push_back(0.2 * i);

    auto curve0 = nyquist_curve(InteractionKernel::zero(3), g, Vec{1.0, 0, 0}, 0.5, taus);
    for (auto z : curve0) CHECK(z == cplx(0.0));

    auto y = InteractionKernel::yukawa(3, 1.0);
    for (double k : {0.3, 1.0, 2.5}) {
        auto c = nyquist_curve(y, g, Vec{k, 0, 0}, 0.5, taus);
        for (std::size_t i = 0; i + 1 < c.size(); ++i) CHECK(std::abs(c[i + 1] - c[i]) <= 0.1 + 1e-12);
        // never crosses the real axis left of -1
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            cplx a = c[i], b = c[i + 1];
            if ((a.imag() > 0) != (b.imag() > 0)) {
                double x = a.real() - a.imag() * (b.real() - a.real()) / (b.imag() - a.imag());
                CHECK(x > -1.0);
            }
        }
        CHECK(winding_number(c, -1.0) == 0);
        // endpoint decay: |Γ(τ_max)| <= C / τ_max with C = sup τ|Γ(τ)| sampled on [1, τ_max / 2]
        double C = 0.0;
        for (int i = 0; i <= 190; ++i) {
            double tau = 1.0 + 0.1 * i;
            C = std::max(C, tau * std::abs(dispersion(y, g, Vec{k, 0, 0}, cplx(0.0, tau), 0.5).one_plus_L - 1.0));
        }
        CHECK(std::abs(c.front()) <= C / 40.0);
        CHECK(std::abs(c[c.size() - 2]) <= C / 40.0);
    }
}

TEST_CASE("conjugate symmetry and dual-branch consistency")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> T(-6.0, 6.0), K(0.1, 3.0), H(0.0, 1.0);
    for (int d : {1, 3}) {
        auto g = VelocityProfile::gaussian(d, 1.0);
        for (int i = 0; i < 20; ++i) {
            double tau = T(rng), k = K(rng), h = H(rng);
            cplx a = lindhard(g, Vec::along(d, k), cplx(0.0, tau), h);
            cplx b = lindhard(g, Vec::along(d, -k), cplx(0.0, -tau), h);
            CHECK(std::abs(a - std::conj(b)) < 1e-12);
            cplx damped = lindhard_damped(g, k, cplx(1e-6, tau), h);
            CHECK(std::abs(a - damped) < 1e-5);
        }
    }
}

TEST_CASE("classical limit converges at second order")
{
    auto g = VelocityProfile::gaussian(1, 1.0);
    for (double k : {0.5, 1.2}) {
        for (double tau : {0.3, 1.1}) {
            cplx m0 = lindhard_boundary(g, k, tau, 0.0);
            std::vector<double> hs{0.4, 0.2, 0.1, 0.05}, err;
            for (double h : hs) err.push_back(std::abs(lindhard_boundary(g, k, tau, h) - m0));
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < hs.size(); ++i) {
                double x = std::log(hs[i]), y = std::log(err[i]);
                sx += x, sy += y, sxx += x * x, sxy += x * y;
            }
            double n = hs.size(), order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            CHECK(order >= 1.8);
        }
    }
}

TEST_CASE("decay bound along the imaginary axis")
{
    auto g = VelocityProfile::gaussian(1, 1.0);
    for (double h : {0.0, 0.5, 1.0}) {
        double k = 0.8, a = (1 + h * h * k * k) * k * k;
        double sup_near = 0.0, sup_far = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            double tau = 0.05 * i;
            double v = (a + tau * tau) / a * std::abs(lindhard_boundary(g, k, tau, h));
            double& sup = tau <= 100.0 ? sup_near : sup_far;
            sup = std::max(sup, v);
        }
        CHECK(std::isfinite(sup_near));
        CHECK(sup_far <= 1.05 * sup_near);
    }
}

TEST_CASE("penrose margin")
{
    auto g = VelocityProfile::gaussian(3, 1.0);
    ScanResolution coarse;
    coarse.n_k = 12;
    coarse.n_tau = 81;
    coarse.n_interior_re = 4;
    coarse.n_interior_im = 5;
    coarse.n_shell = 9;

    auto zero = penrose_margin(InteractionKernel::zero(3), g, {0.0, 1.0}, 8.0, 8.0, coarse);
    CHECK(zero.kappa == doctest::Approx(1.0));
    for (const auto& s : zero.winding_numbers) CHECK(s.winding == 0);
    CHECK(zero.stable());

    auto y = InteractionKernel::yukawa(3, 1.0);
    std::vector<double> hs{0.0, 0.25, 0.5, 1.0};
    auto r = penrose_margin(y, g, hs, 8.0, 8.0, coarse);
    CHECK(r.kappa > 0.0);
    CHECK(r.stable());
    CHECK(r.tail_certificate >= 0.5);
    // κ is a lower bound for every point of the scan, the argmin in particular
    auto at = dispersion(y, g, Vec{r.argmin.k, 0, 0}, r.argmin.lambda, r.argmin.hbar);
    CHECK(std::abs(at.one_plus_L) == doctest::Approx(r.kappa).epsilon(1e-12));

    // stronger repulsion does not increase the margin
    double prev = r.kappa;
    for (double s : {1.5, 2.0, 4.0}) {
        auto rs = penrose_margin(y.scaled(s), g, hs, 8.0, 8.0, coarse);
        CHECK(rs.kappa <= prev + 1e-12);
        auto here = dispersion(y.scaled(s), g, Vec{r.argmin.k, 0, 0}, r.argmin.lambda, r.argmin.hbar);
        CHECK(std::abs(here.one_plus_L) <= std::abs(at.one_plus_L) + 1e-12);
        prev = rs.kappa;
    }

    auto flipped = y.scaled(-20.0);
    auto u = penrose_margin(flipped, g, hs, 8.0, 8.0, coarse);
    CHECK_FALSE(u.stable());
    const WindingSample* hit = nullptr;
    for (const auto& s : u.winding_numbers)
        if (s.winding != 0) {
            hit = &s;
            break;
        }
    REQUIRE(hit != nullptr);
    auto root = find_unstable_root(flipped, g, hit->k, hit->hbar, 8.0);
    REQUIRE(root.has_value());
    CHECK(root->real() > 0.0);
    CHECK(std::abs(dispersion(flipped, g, Vec{hit->k, 0, 0}, *root, hit->hbar).one_plus_L) < 1e-8);
}

TEST_CASE("sufficient conditions")
{
    auto g = VelocityProfile::gaussian(3, 1.0);
    auto y = InteractionKernel::yukawa(3, 1.0);
    CHECK(sufficient_condition(y, g, Condition::repulsive_decreasing).passed);
    auto z = sufficient_condition(InteractionKernel::zero(3), g, Condition::smallness);
    CHECK(z.passed);
    CHECK(z.value == 0.0);
    CHECK_FALSE(sufficient_condition(y.scaled(-1.0), g, Condition::repulsive_decreasing).passed);
    ConditionOptions opt;
    opt.n_k = 8;
    opt.n_tau = 161;
    CHECK(sufficient_condition(y, g, Condition::generalized, opt).passed);
}
