#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qmix/linear.hpp"
#include "qmix/wigner_field.hpp"

namespace qmix {

enum class WeightMode { plain, time_weighted, xi_weighted };

struct NormParams {
    double sigma = 0.0;
    int M = 0;  // η-derivative order, at most 4
    WeightMode mode = WeightMode::plain;
    double delta = 0.0;  // exponent of |k| in xi_weighted mode
};

// (Σ_{|α|<=M} ‖<k,η>^σ m(k,η) D_η^α Ŵ‖^2)^{1/2} in grid L^2, with 4th-order
// centred differences (zero outside the box). m = <tk,η> for time_weighted,
// |k|^δ for xi_weighted, 1 otherwise.
double weighted_norm(const WignerField& field, const NormParams& params, double t = 0.0);

// Same for the difference a - b of two fields on one grid.
double weighted_distance(const WignerField& a, const WignerField& b, const NormParams& params, double t = 0.0);

// Double-weighted norm with k-derivatives up to N as well (initial data only).
double double_weighted_norm(const WignerField& field, double sigma, int N, int M);

// ‖Q‖ in Hilbert-Schmidt norm from the grid L^2 norm of Ŵ[Q]: (2π)^{-d} ‖Ŵ‖.
double operator_l2_from_wigner(const WignerField& field);

struct MonitorSettings {
    int dim = 1;
    double hbar = 0.0;
    double sigma1 = 0.0, sigma2 = 0.0, sigma3 = 0.0, sigma4 = 0.0;
    int M = 0;
    double delta = 0.1;
    std::optional<std::vector<double>> K;  // K_1..K_5, for reference lines only
    double epsilon = 0.0;
};

struct MonitorSeries {
    std::vector<double> times;
    std::vector<double> B1, B2, B3, B4, B5;
    std::optional<std::vector<double>> thresholds;  // 4 K_i ε^2
};

// One sample of the density on the k-grid.
struct DensitySample {
    double t = 0.0;
    std::vector<Vec> k;
    std::vector<cplx> rho;
    double cell = 1.0;  // dk^d
};

// Running (B1)-(B5). Density samples feed the time integrals of (B2), (B4);
// field samples close a row of the series.
class BootstrapMonitor {
public:
    explicit BootstrapMonitor(MonitorSettings s);
    void add_density(const DensitySample& s);
    void add_field(const WignerField& field);
    const MonitorSeries& series() const { return series_; }
    double last_density_time() const { return last_t_; }

private:
    MonitorSettings s_;
    MonitorSeries series_;
    bool have_density_ = false;
    double last_t_ = 0.0, last_b2_ = 0.0, last_b4_ = 0.0;
    double int_b2_ = 0.0, int_b4_ = 0.0;
};

// One row of monitors for a field and its density history.
MonitorSeries bootstrap_monitors(const WignerField& field, const std::vector<DensitySample>& history,
                                 const MonitorSettings& s);

enum class DecayWeight { kt_bracket, t_power };

struct DecayFit {
    double exponent = 0.0;  // minus the log-log slope
    double residual = 0.0;  // rms of the fit residuals
    std::size_t samples = 0;
};

DecayFit decay_fit(const DensityTrace& trace, DecayWeight weight);
// Least-squares decay exponent of |values| against weights, same sample rules.
DecayFit decay_fit(const std::vector<double>& weights, const std::vector<double>& magnitudes);

struct LpBound {
    double value = 0.0;
    std::string warning;
};

// Hausdorff-Young majorant (Σ <k,kt>^{p'n} |ρ̂|^{p'} dk^d)^{1/p'} of
// ‖<∇, t∇>^n ρ(t)‖_{L^p}. sigma_fit (if > 0) enables the meaningfulness check.
LpBound physical_lp_density(const std::vector<Vec>& k, const std::vector<cplx>& rho, double cell, double p,
                            double n, double t, double sigma_fit = 0.0);

}  // namespace qmix
