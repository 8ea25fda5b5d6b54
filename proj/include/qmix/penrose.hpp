#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qmix/kernels.hpp"

namespace qmix {

using cplx = std::complex<double>;

// m_g(λ, k; ħ). Re λ > 0 uses damped panel quadrature, Re λ = 0 the boundary
// (Plemelj) form; ħ = 0 is the classical branch.
cplx lindhard(const VelocityProfile& g, const Vec& k, cplx lambda, double hbar);

// Same, forcing the damped quadrature even at tiny Re λ > 0.
cplx lindhard_damped(const VelocityProfile& g, double kabs, cplx lambda, double hbar);
// Boundary value at λ = iτ.
cplx lindhard_boundary(const VelocityProfile& g, double kabs, double tau, double hbar);

// PV ∫ g_k(u)/(u - c) du and PV ∫ g_k'(u)/(u - c) du.
double marginal_hilbert(const VelocityProfile& g, double c);
double marginal_derivative_hilbert(const VelocityProfile& g, double c);

struct DispersionPoint {
    cplx lambda;
    Vec k;
    double hbar = 0.0;
    cplx m_g;
    cplx one_plus_L;
};

DispersionPoint dispersion(const InteractionKernel& w, const VelocityProfile& g, const Vec& k,
                           cplx lambda, double hbar);

struct NyquistOptions {
    double max_step = 0.1;     // max |Γ_{i+1} - Γ_i|
    std::size_t max_points = 200000;
};

// L̃(iτ, k; ħ) along tau_grid (refined where the curve moves too fast), with
// the first point appended so the result is a closed polygon.
std::vector<cplx> nyquist_curve(const InteractionKernel& w, const VelocityProfile& g, const Vec& k,
                                double hbar, const std::vector<double>& tau_grid,
                                const NyquistOptions& opt = {});

int winding_number(const std::vector<cplx>& curve, cplx point);

struct ScanResolution {
    int n_k = 32;            // |k| = K i / n_k, i = 1..n_k
    int n_tau = 161;         // boundary grid on [-Λ, Λ]
    int n_interior_re = 8;   // log-spaced Re λ
    int n_interior_im = 9;   // Im λ on [-Λ, Λ]
    int n_shell = 33;        // angles on |λ| = Λ
};

struct ScanArgmin {
    cplx lambda;
    double k = 0.0;
    double hbar = 0.0;
};

struct WindingSample {
    double k = 0.0;
    double hbar = 0.0;
    int winding = 0;
    double tau_extent = 0.0;
};

struct PenroseReport {
    double kappa = 0.0;
    ScanArgmin argmin;
    std::vector<WindingSample> winding_numbers;
    double K = 0.0;
    double Lambda = 0.0;
    ScanResolution resolution;
    double dk = 0.0;
    double dtau = 0.0;
    double tail_certificate = 0.0;
    std::size_t points_scanned = 0;
    bool stable() const;
};

PenroseReport penrose_margin(const InteractionKernel& w, const VelocityProfile& g,
                             const std::vector<double>& hbar_set, double K, double Lambda,
                             const ScanResolution& res = {});

// Right-half-plane zero of 1 + L̃(·, |k|; ħ) near the smallest grid value.
std::optional<cplx> find_unstable_root(const InteractionKernel& w, const VelocityProfile& g,
                                       double kabs, double hbar, double Lambda);

enum class Condition { smallness, repulsive_decreasing, generalized };

struct ConditionOptions {
    double K = 8.0;
    double Lambda = 8.0;
    std::vector<double> hbar_set{0.0, 0.25, 0.5, 1.0};
    int n_k = 32;
    int n_tau = 401;
};

struct ConditionReport {
    Condition which;
    bool passed = false;
    double value = 0.0;  // product (i), min ŵ (ii), min 1 + Re L̃ at zeros (iii)
    std::string note;
};

ConditionReport sufficient_condition(const InteractionKernel& w, const VelocityProfile& g, Condition which,
                                     const ConditionOptions& opt = {});

}  // namespace qmix
