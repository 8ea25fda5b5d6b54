#pragma once

#include <memory>
#include <vector>

#include "qmix/vec.hpp"

namespace qmix {

// Radial steady-state profile g(v) >= 0.
class VelocityProfile {
public:
    enum class Kind { gaussian, tabulated };

    // g(v) = amplitude * exp(-|v|^2 / (2 scale^2))
    static VelocityProfile gaussian(int dim, double scale, double amplitude = 1.0);
    // g(r) sampled at r_i = i * step, i = 0..n-1; zero beyond the last sample.
    static VelocityProfile tabulated(int dim, std::vector<double> samples, double step,
                                     double amplitude = 1.0);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double amplitude() const { return amp_; }
    double scale() const { return beta_; }  // gaussian width, or rms per axis for tables

    double radial(double r) const;
    double value(const Vec& v) const { return radial(v.norm()); }

    // ĝ as a function of |p|.
    double fourier_radial(double s) const;
    // ĝ_r''(0) = -(1/d) ∫ |v|^2 g
    double fourier_curvature() const;

    double marginal(double u) const;
    double marginal_derivative(double u) const;

    // g (and g_k) negligible beyond this radius.
    double velocity_radius() const;
    // |ĝ| < 1e-16 ĝ(0) beyond this radius.
    double fourier_radius() const;
    // Characteristic width in Fourier space.
    double fourier_scale() const { return 1.0 / beta_; }

    // Direct quadrature of ∫ g dv, independent of the Fourier evaluator.
    double mass() const;

private:
    struct Table;
    Kind kind_ = Kind::gaussian;
    int dim_ = 1;
    double amp_ = 1.0;
    double beta_ = 1.0;
    std::shared_ptr<const Table> table_;
};

double profile_fourier(const VelocityProfile& g, const Vec& p);
double marginal(const VelocityProfile& g, double u);
double steady_density(const VelocityProfile& g);

// Two-body kernel through its Fourier symbol ŵ(k), radial and real.
class InteractionKernel {
public:
    enum class Kind { yukawa, gaussian, zero, tabulated };

    static InteractionKernel yukawa(int dim, double alpha, double strength = 1.0);
    // w(x) = strength * exp(-|x|^2 / (2 width^2))
    static InteractionKernel gaussian(int dim, double width, double strength = 1.0);
    static InteractionKernel zero(int dim);
    // ŵ sampled at |k| = i * step; l1 < 0 means "use the sampled sup".
    static InteractionKernel tabulated(int dim, std::vector<double> samples, double step,
                                       double l1 = -1.0);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double strength() const { return strength_; }
    double parameter() const { return param_; }

    double fourier_radial(double k) const;
    double l1_norm_bound() const;
    // sup over sampled |k| <= k_max of <k>^(M - 1/2) |ŵ(k)|
    double decay_certificate(double k_max, int samples = 2001) const;
    double sup_abs(double k_max, int samples = 2001) const;
    // Real-space w(|x|) where a closed form exists (gaussian, yukawa).
    double real_space(double r) const;

    InteractionKernel scaled(double factor) const;

private:
    struct Table;
    Kind kind_ = Kind::zero;
    int dim_ = 1;
    double param_ = 0.0;
    double strength_ = 0.0;
    double l1_ = 0.0;
    std::shared_ptr<const Table> table_;
};

double kernel_hat(const InteractionKernel& w, const Vec& k);

// Surface area of the unit sphere S^{d-1}.
double sphere_area(int d);

// W[γ_g](x, ξ) computed from the operator kernel (2π)^{-d} ĝ((y-x)/ħ) by
// radial quadrature of the Wigner integral. Independent of x.
double steady_wigner(const VelocityProfile& g, const Vec& xi, double hbar);

}  // namespace qmix
