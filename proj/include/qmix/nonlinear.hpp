#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qmix/diagnostics.hpp"
#include "qmix/initial.hpp"
#include "qmix/kernels.hpp"
#include "qmix/linear.hpp"
#include "qmix/wigner_field.hpp"

namespace qmix {

struct SigmaParams {
    double sigma0 = 0.5, sigma1 = 1.0, sigma2 = 1.5, sigma3 = 2.0, sigma4 = 2.5;
    double N0 = 4.0;
    double delta = 0.1;
    int M = 1;
};

// Violated entries of the paper's parameter constraints, as readable strings.
// Throws ConfigError unless σ4 > σ3 > σ2 > σ1 > σ0 >= 0.
std::vector<std::string> check_sigma(const SigmaParams& s, int dim);

enum class RhsScheme { automatic, direct, sheared };

enum class Amplitude {
    sup,        // ε = sup |Ŵ_in|
    bootstrap,  // ε = sup <k,η>^{σ1} |Ŵ_in|
    raw         // samples scaled by ε as given
};

struct SimConfig {
    int dim = 1;
    double hbar = 1.0;
    double epsilon = 1e-2;
    Amplitude amplitude = Amplitude::sup;
    InteractionKernel kernel = InteractionKernel::zero(1);
    VelocityProfile profile = VelocityProfile::gaussian(1, 1.0);
    AxisGrid k_axis{65, 1.2 / 32};
    AxisGrid eta_axis{129, 12.0 / 64};
    double dt = 0.0;               // <= 0: automatic
    double T = 10.0;
    double output_interval = 1.0;  // snapshot and monitor spacing
    SigmaParams sigma;
    std::optional<std::vector<double>> K;
    std::vector<Vec> traced;  // grid nodes
    RhsScheme scheme = RhsScheme::automatic;
    bool keep_snapshots = true;
    bool monitors = true;
    bool skip_penrose = false;
    double dt_tolerance = 1e-6;  // halving criterion on the t = 1 field
    int max_halvings = 6;
    double abort_growth = 1e6;

    // Throws ConfigError on invalid settings.
    void validate() const;
};

struct DroppedMode {
    Vec k;
    double t = 0.0;
};

// ρ̂(t, k) = Ŵ[P](t, k, kt) for every grid k; modes whose slice point leaves
// the η box are zero and listed in dropped.
std::vector<cplx> density_slice(const WignerField& field, std::vector<DroppedMode>* dropped = nullptr);

// ∂_t Ŵ[P] on the grid.
class RhsEvaluator {
public:
    RhsEvaluator(const InteractionKernel& w, const VelocityProfile& g, const WignerField& layout,
                 RhsScheme scheme = RhsScheme::automatic);
    ~RhsEvaluator();
    RhsEvaluator(const RhsEvaluator&) = delete;
    RhsEvaluator& operator=(const RhsEvaluator&) = delete;

    RhsScheme scheme() const { return scheme_; }
    // out = rhs(field) at field.time(); nonlinear term optional.
    void operator()(const WignerField& field, WignerField& out, bool nonlinear = true);

private:
    struct Impl;
    RhsScheme scheme_;
    std::unique_ptr<Impl> impl_;
};

// One RK4 step; re-symmetrizes the conjugate pairs and returns the defect
// max |W(-k,-η) - conj W(k,η)| measured before that.
double step_rk4(RhsEvaluator& rhs, WignerField& field, double dt, bool nonlinear = true);

struct ScatteringResult {
    WignerField Q_inf;
    std::vector<double> times;             // snapshot times except the last
    std::vector<double> cauchy_residuals;  // weighted distance to Q_inf
    std::vector<double> increment_times;   // snapshot midpoints
    std::vector<double> increments;        // ‖Q(t_{i+1}) - Q(t_i)‖ / Δt
    double rate_exponent = 0.0;            // increment decay minus one
    double increment_exponent = 0.0;
    double reference_exponent = 0.0;       // fit of C(<t>^{-p} - <T>^{-p})
    double naive_exponent = 0.0;           // log-log slope of residuals
    double fit_residual = 0.0;             // of the reference fit
    bool monotone = true;
    double transient = 0.0;
};

struct Snapshot {
    double t = 0.0;
    WignerField field;
};

// transient: snapshots before this time are excluded from the checks.
ScatteringResult scattering_profile(const std::vector<Snapshot>& snapshots, int dim, const NormParams& norm,
                                    double transient);

struct SimOutput {
    std::vector<DensityTrace> traces;
    std::vector<DensitySample> slices;  // every step, all grid modes
    MonitorSeries monitors;
    std::vector<Snapshot> snapshots;
    std::optional<ScatteringResult> scattering;
    std::vector<std::string> warnings;
    std::vector<std::string> sigma_report;
    bool unstable = false;
    double dt = 0.0;
    std::size_t steps = 0;
    RhsScheme scheme = RhsScheme::direct;
    double max_trace_drift = 0.0;         // |Ŵ(t,0,0) - Ŵ(0,0,0)|
    double max_conjugate_defect = 0.0;    // before re-symmetrization
    double max_boundary_ratio = 0.0;
    WignerField final_field;
};

// Factor applied to W0 samples to meet the amplitude convention.
double amplitude_factor(const SimConfig& cfg, const InitialWigner& W0);

// Sets up the ε-scaled initial field.
WignerField initial_field(const SimConfig& cfg, const InitialWigner& W0);

SimOutput simulate(const SimConfig& cfg, const InitialWigner& W0);

// Automatic time step before halving.
double default_dt(const SimConfig& cfg);

}  // namespace qmix
