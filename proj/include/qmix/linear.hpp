#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "qmix/initial.hpp"
#include "qmix/kernels.hpp"

namespace qmix {

enum class Provenance { free, volterra, green, nonlinear };

const char* provenance_name(Provenance p);

// ρ̂(t, k) on the uniform grid t_j = j dt.
struct DensityTrace {
    Vec k;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<cplx> values;
    double hbar = 0.0;
    Provenance provenance = Provenance::free;
};

// Number of samples of a uniform grid with spacing dt covering [0, T].
std::size_t sample_count(double dt, double T);

// Ŵ[Q_in](k, k t)
cplx free_density(const InitialWigner& W0, const Vec& k, double t);
DensityTrace free_trace(const InitialWigner& W0, const Vec& k, double dt, double T, double hbar = 0.0);

// (2π)^{-d} ŵ(k) (2/ħ) sin(ħ t |k|^2 / 2) ĝ(k t)
double volterra_kernel(const InteractionKernel& w, const VelocityProfile& g, double hbar, double t, const Vec& k);

// φ = H - L̂ *_t φ by the product trapezoid rule.
DensityTrace solve_volterra(const std::function<double(double)>& kernel,
                            const std::function<cplx(double)>& forcing, double dt, double T);

DensityTrace linear_density_volterra(const InitialWigner& W0, const InteractionKernel& w, const VelocityProfile& g,
                                     double hbar, const Vec& k, double dt, double T);

struct GreenOptions {
    double tau_max = 0.0;  // <= 0: 40 max(1, <ħk>|k|)
    int n_tau = 1 << 14;   // intervals on [-tau_max, tau_max]
};

struct GreenRemainder {
    std::vector<cplx> values;         // Ĝ^r(j dt)
    double tau_max = 0.0;
    double dtau = 0.0;
    double truncation_bound = 0.0;    // estimate of the dropped |τ| > tau_max tail
    double min_abs_one_plus_L = 0.0;  // over the τ grid
};

// Ĝ^r(t, k) at t_j = j dt, j < count, by inverse Laplace transform along the
// imaginary axis. The t^1, t^2, t^3 behaviour at t = 0 is removed with an
// exactly invertible model so the sampled remainder decays like τ^{-5}.
GreenRemainder green_remainder(const InteractionKernel& w, const VelocityProfile& g, double hbar, const Vec& k,
                               double dt, std::size_t count, const GreenOptions& opt = {});

DensityTrace linear_density_green(const InitialWigner& W0, const InteractionKernel& w, const VelocityProfile& g,
                                  double hbar, const Vec& k, double dt, double T, const GreenOptions& opt = {});

}  // namespace qmix
