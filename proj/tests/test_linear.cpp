#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qmix/chirpz.hpp"
#include "qmix/diagnostics.hpp"
#include "qmix/linear.hpp"

using namespace qmix;

namespace {

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t stride_b = 1)
{
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j * stride_b]));
    return m;
}

}  // namespace

TEST_CASE("sample counts")
{
    CHECK(sample_count(0.1, 1.0) == 11);
    CHECK(sample_count(0.3, 1.0) == 5);
    CHECK_THROWS_AS(sample_count(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(sample_count(0.5, 0.1), DomainError);
}

TEST_CASE("volterra kernel value")
{
    auto w = InteractionKernel::tabulated(1, std::vector<double>(16, 1.0), 0.25);
    auto g = VelocityProfile::gaussian(1, 1.0);
    CHECK(volterra_kernel(w, g, 1.0, 1.0, Vec{1.0}) == doctest::Approx(0.23201388985807905902).epsilon(1e-13));
    CHECK(volterra_kernel(w, g, 0.0, 0.0, Vec{1.0}) == 0.0);
}

TEST_CASE("free trace of gaussian data")
{
    auto W0 = InitialWigner::gaussian(2, 0.7, 1.3, 0.9).with_shift(Vec{0.2, -0.1}, Vec{0.5, 0.3});
    Vec k{0.4, -0.3};
    auto tr = free_trace(W0, k, 0.05, 6.0);
    REQUIRE(tr.values.size() == 121);
    CHECK(tr.provenance == Provenance::free);
    for (std::size_t j = 0; j < tr.values.size(); ++j) {
        double t = tr.times[j];
        Vec eta = k * t;
        cplx closed = 0.7 * std::exp(-k.norm2() / (1.3 * 1.3) - eta.norm2() / 0.81) *
                      std::exp(cplx(0.0, -(k.dot(Vec{0.2, -0.1}) + eta.dot(Vec{0.5, 0.3}))));
        CHECK(std::abs(tr.values[j] - closed) < 1e-14);
    }
}

TEST_CASE("zero kernel reproduces the free trace")
{
    auto W0 = InitialWigner::gaussian(1, 1.0, 1.0, 1.0).with_shift(Vec{0.3}, Vec{0.0});
    auto g = VelocityProfile::gaussian(1, 1.0);
    auto z = InteractionKernel::zero(1);
    auto v = linear_density_volterra(W0, z, g, 0.5, Vec{0.7}, 0.05, 5.0);
    auto f = free_trace(W0, Vec{0.7}, 0.05, 5.0);
    CHECK(max_abs_diff(v.values, f.values) == 0.0);
    auto gr = linear_density_green(W0, z, g, 0.5, Vec{0.7}, 0.05, 5.0);
    CHECK(max_abs_diff(gr.values, f.values) == 0.0);
}

TEST_CASE("volterra solver on resolvent oracles")
{
    // φ = 1 - ω² ∫ (t-s) φ(s) ds has φ = cos(ω t); φ = 1 - c ∫ φ has φ = e^{-ct}
    const double omega = 1.7, c = 0.8, T = 10.0;
    std::vector<double> errs;
    for (double dt : {0.02, 0.01, 0.005}) {
        auto a = solve_volterra([&](double t) { return omega * omega * t; }, [](double) { return cplx(1.0); }, dt, T);
        auto b = solve_volterra([&](double) { return c; }, [](double) { return cplx(1.0); }, dt, T);
        double ea = 0.0, eb = 0.0;
        for (std::size_t j = 0; j < a.values.size(); ++j) {
            ea = std::max(ea, std::abs(a.values[j] - std::cos(omega * a.times[j])));
            eb = std::max(eb, std::abs(b.values[j] - std::exp(-c * b.times[j])));
        }
        CHECK(ea < 50 * dt * dt);
        CHECK(eb < 50 * dt * dt);
        errs.push_back(ea);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.9);

    CHECK_THROWS_AS(solve_volterra([](double) { return NAN; }, [](double) { return cplx(1.0); }, 0.1, 1.0),
                    NumericalError);
}

TEST_CASE("chirp transform agrees with the direct sum")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N;
    std::vector<cplx> x(777);
    for (auto& v : x) v = cplx(N(rng), N(rng));
    auto a = chirp_sum(x, -4.1, 0.013, 0.29, 413);
    auto b = chirp_sum_direct(x, -4.1, 0.013, 0.29, 413);
    CHECK(max_abs_diff(a, b) < 1e-10);
}

TEST_CASE("dual-route linear density")
{
    auto w = InteractionKernel::yukawa(3, 1.0);
    auto g = VelocityProfile::gaussian(3, 1.0);
    auto W0 = InitialWigner::gaussian(3, 1.0, 1.0, 1.0);
    const double T = 10.0;
    for (double hbar : {0.0, 1.0}) {
        Vec k{0.6, 0.3, 0.0};
        auto v = linear_density_volterra(W0, w, g, hbar, k, 0.02, T);
        auto gr = linear_density_green(W0, w, g, hbar, k, 0.02, T);
        CHECK(v.provenance == Provenance::volterra);
        CHECK(gr.provenance == Provenance::green);
        double scale = 0.0;
        for (auto z : free_trace(W0, k, 0.02, T).values) scale = std::max(scale, std::abs(z));
        CHECK(max_abs_diff(v.values, gr.values) / scale < 1e-5);

        // conjugate symmetry for real data
        auto vm = linear_density_volterra(W0, w, g, hbar, -k, 0.02, T);
        for (std::size_t j = 0; j < v.values.size(); ++j)
            CHECK(std::abs(vm.values[j] - std::conj(v.values[j])) < 1e-13);
    }
}

TEST_CASE("green remainder decays fast")
{
    auto w = InteractionKernel::yukawa(3, 1.0);
    auto g = VelocityProfile::gaussian(3, 1.0);
    for (double hbar : {0.0, 0.5}) {
        // t in [2, 20]
        auto r = green_remainder(w, g, hbar, Vec{0.8, 0.0, 0.0}, 0.02, 1001);
        CHECK(r.min_abs_one_plus_L > 0.0);
        CHECK(r.truncation_bound < 1e-6);
        std::vector<double> ts, mags;
        for (std::size_t j = 100; j < r.values.size(); ++j) {
            ts.push_back(0.02 * j);
            mags.push_back(std::abs(r.values[j]));
        }
        auto fit = decay_fit(ts, mags);
        CHECK(fit.exponent >= 4.0);
    }
}
