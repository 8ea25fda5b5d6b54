#include "qmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "qmix/parallel.hpp"

namespace qmix {

namespace {

constexpr int kMaxOrder = 4;

std::size_t ipow(std::size_t b, int e)
{
    std::size_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

// 4th-order centred first derivative along one axis of a row-major block,
// values outside the block taken as zero.
void diff_axis(const cplx* in, cplx* out, int n, int d, int axis, double h)
{
    std::size_t stride = ipow(n, d - 1 - axis);
    std::size_t total = ipow(n, d);
    double c = 1.0 / (12.0 * h);
    for (std::size_t f = 0; f < total; ++f) {
        int i = static_cast<int>((f / stride) % n);
        auto val = [&](int off) -> cplx {
            int j = i + off;
            if (j < 0 || j >= n) return 0.0;
            return in[f + static_cast<long>(off) * static_cast<long>(stride)];
        };
        out[f] = c * (-val(2) + 8.0 * val(1) - 8.0 * val(-1) + val(-2));
    }
}

std::vector<std::array<int, 3>> multi_indices(int d, int M)
{
    std::vector<std::array<int, 3>> out;
    for (int a = 0; a <= M; ++a)
        for (int b = 0; b <= (d > 1 ? M : 0); ++b)
            for (int c = 0; c <= (d > 2 ? M : 0); ++c)
                if (a + b + c <= M) out.push_back({a, b, c});
    return out;
}

void check_params(const WignerField& f, const NormParams& p)
{
    if (p.M < 0 || p.M > kMaxOrder) throw ConfigError("norm derivative order M must lie in [0, 4]");
    if (!(p.sigma >= 0.0)) throw ConfigError("norm weight sigma must be nonnegative");
    if (p.M > 0 && f.eta_axis().n < 2 * p.M + 5)
        throw ConfigError("η grid too small for the finite-difference stencil (need 2M + 5 nodes)");
    if (p.mode == WeightMode::xi_weighted && !(p.delta > 0.0)) throw ConfigError("xi_weighted mode needs delta > 0");
}

// Σ over rows of Σ_α ‖weight D^α row‖^2 where row = get(kf).
double weighted_sum(const WignerField& f, const NormParams& p, double t,
                    const std::function<void(std::size_t, cplx*)>& get)
{
    check_params(f, p);
    int d = f.dim(), n = f.eta_axis().n;
    double h = f.eta_axis().step;
    std::size_t rows = f.k_count(), len = f.eta_count();
    auto alphas = multi_indices(d, p.M);
    std::vector<double> partial(rows, 0.0);
    parallel_for(rows, [&](std::size_t lo, std::size_t hi) {
        std::vector<cplx> base(len), cur(len), tmp(len);
        std::vector<double> weight(len);
        for (std::size_t kf = lo; kf < hi; ++kf) {
            get(kf, base.data());
            Vec k = f.k_at(kf);
            double k2 = k.norm2();
            double km = 1.0;
            if (p.mode == WeightMode::xi_weighted) km = std::pow(std::sqrt(k2), p.delta);
            for (std::size_t ef = 0; ef < len; ++ef) {
                Vec eta = f.eta_at(ef);
                double e2 = eta.norm2();
                double w = std::pow(1.0 + k2 + e2, 0.5 * p.sigma) * km;
                if (p.mode == WeightMode::time_weighted) w *= std::sqrt(1.0 + t * t * k2 + e2);
                weight[ef] = w;
            }
            double s = 0.0;
            for (const auto& al : alphas) {
                cur = base;
                for (int a = 0; a < d; ++a)
                    for (int r = 0; r < al[a]; ++r) {
                        diff_axis(cur.data(), tmp.data(), n, d, a, h);
                        std::swap(cur, tmp);
                    }
                for (std::size_t ef = 0; ef < len; ++ef) s += std::norm(weight[ef] * cur[ef]);
            }
            partial[kf] = s;
        }
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total * f.cell();
}

bool same_grid(const WignerField& a, const WignerField& b)
{
    return a.dim() == b.dim() && a.k_axis().n == b.k_axis().n && a.eta_axis().n == b.eta_axis().n &&
           a.k_axis().step == b.k_axis().step && a.eta_axis().step == b.eta_axis().step;
}

}  // namespace

double weighted_norm(const WignerField& field, const NormParams& params, double t)
{
    std::size_t len = field.eta_count();
    return std::sqrt(weighted_sum(field, params, t, [&](std::size_t kf, cplx* out) {
        std::copy(field.row(kf), field.row(kf) + len, out);
    }));
}

double weighted_distance(const WignerField& a, const WignerField& b, const NormParams& params, double t)
{
    if (!same_grid(a, b)) throw DomainError("weighted_distance needs fields on one grid");
    std::size_t len = a.eta_count();
    return std::sqrt(weighted_sum(a, params, t, [&](std::size_t kf, cplx* out) {
        const cplx* x = a.row(kf);
        const cplx* y = b.row(kf);
        for (std::size_t i = 0; i < len; ++i) out[i] = x[i] - y[i];
    }));
}

double double_weighted_norm(const WignerField& field, double sigma, int N, int M)
{
    if (N < 0 || N > kMaxOrder) throw ConfigError("norm derivative order N must lie in [0, 4]");
    NormParams p;
    p.sigma = sigma;
    p.M = M;
    check_params(field, p);
    if (N > 0 && field.k_axis().n < 2 * N + 5)
        throw ConfigError("k grid too small for the finite-difference stencil (need 2N + 5 nodes)");
    int d = field.dim(), nk = field.k_axis().n;
    std::size_t rows = field.k_count(), len = field.eta_count();
    double hk = field.k_axis().step;
    double total = 0.0;
    // D_k^β applied across rows: transpose view with k as the block and η fixed.
    for (const auto& be : multi_indices(d, N)) {
        WignerField g = field;
        for (std::size_t ef = 0; ef < len; ++ef) {
            std::vector<cplx> col(rows), tmp(rows);
            for (std::size_t kf = 0; kf < rows; ++kf) col[kf] = field.at(kf, ef);
            for (int a = 0; a < d; ++a)
                for (int r = 0; r < be[a]; ++r) {
                    diff_axis(col.data(), tmp.data(), nk, d, a, hk);
                    std::swap(col, tmp);
                }
            for (std::size_t kf = 0; kf < rows; ++kf) g.at(kf, ef) = col[kf];
        }
        double v = weighted_norm(g, p);
        total += v * v;
    }
    return std::sqrt(total);
}

double operator_l2_from_wigner(const WignerField& field)
{
    double s = 0.0;
    for (const cplx& v : field.values()) s += std::norm(v);
    return std::sqrt(s * field.cell()) / two_pi_pow(field.dim());
}

BootstrapMonitor::BootstrapMonitor(MonitorSettings s) : s_(std::move(s))
{
    if (s_.K) {
        if (s_.K->size() != 5) throw ConfigError("bootstrap constants K need five entries");
        std::vector<double> th;
        for (double k : *s_.K) th.push_back(4.0 * k * s_.epsilon * s_.epsilon);
        series_.thresholds = th;
    }
}

void BootstrapMonitor::add_density(const DensitySample& ds)
{
    if (ds.k.size() != ds.rho.size()) throw DomainError("density sample size mismatch");
    if (have_density_ && !(ds.t > last_t_)) throw DomainError("density samples must advance in time");
    double b2 = 0.0, b4 = 0.0;
    for (std::size_t i = 0; i < ds.k.size(); ++i) {
        double k2 = ds.k[i].norm2();
        double kt2 = 1.0 + k2 * (1.0 + ds.t * ds.t);
        double a = std::norm(ds.rho[i]) * std::sqrt(k2);
        b2 += (1.0 + s_.hbar * s_.hbar * k2) * std::pow(kt2, s_.sigma4) * a;
        b4 = std::max(b4, std::pow(kt2, s_.sigma2) * a);
    }
    b2 *= ds.cell;
    if (have_density_) {
        double h = ds.t - last_t_;
        int_b2_ += 0.5 * h * (last_b2_ + b2);
        int_b4_ += 0.5 * h * (last_b4_ + b4);
    }
    have_density_ = true;
    last_t_ = ds.t;
    last_b2_ = b2;
    last_b4_ = b4;
}

void BootstrapMonitor::add_field(const WignerField& field)
{
    if (!have_density_ || std::abs(last_t_ - field.time()) > 1e-9 * std::max(1.0, field.time()))
        throw InsufficientDataError("density history does not reach the field time");
    double t = field.time();
    NormParams p1{s_.sigma4, s_.M, WeightMode::time_weighted, 0.0};
    NormParams p3{s_.sigma3, s_.M, WeightMode::xi_weighted, s_.delta};
    double b1 = weighted_norm(field, p1, t);
    double b3 = weighted_norm(field, p3, t);
    double b5 = 0.0;
    for (std::size_t kf = 0; kf < field.k_count(); ++kf) {
        double k2 = field.k_at(kf).norm2();
        for (std::size_t ef = 0; ef < field.eta_count(); ++ef) {
            double v = std::norm(field.at(kf, ef));
            if (v == 0.0) continue;
            b5 = std::max(b5, std::pow(1.0 + k2 + field.eta_at(ef).norm2(), s_.sigma1) * v);
        }
    }
    series_.times.push_back(t);
    series_.B1.push_back(b1 * b1);
    series_.B2.push_back(int_b2_);
    series_.B3.push_back(b3 * b3);
    series_.B4.push_back(int_b4_);
    series_.B5.push_back(b5);
}

MonitorSeries bootstrap_monitors(const WignerField& field, const std::vector<DensitySample>& history,
                                 const MonitorSettings& s)
{
    if (history.empty()) throw InsufficientDataError("bootstrap monitors need a density history");
    BootstrapMonitor m(s);
    for (const auto& h : history) m.add_density(h);
    m.add_field(field);
    return m.series();
}

DecayFit decay_fit(const std::vector<double>& weights, const std::vector<double>& magnitudes)
{
    if (weights.size() != magnitudes.size()) throw DomainError("decay_fit size mismatch");
    std::size_t skip = weights.size() / 10;
    std::vector<double> x, y;
    for (std::size_t i = skip; i < weights.size(); ++i) {
        if (magnitudes[i] > 1e-12 && std::isfinite(magnitudes[i])) {
            x.push_back(std::log(weights[i]));
            y.push_back(std::log(magnitudes[i]));
        }
    }
    if (x.size() < 10) throw InsufficientDataError("decay fit needs at least 10 samples above 1e-12");
    double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 1e-300)) throw InsufficientDataError("decay fit weights do not vary");
    double slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (my + slope * (x[i] - mx));
        rss += r * r;
    }
    return {-slope, std::sqrt(rss / n), x.size()};
}

DecayFit decay_fit(const DensityTrace& trace, DecayWeight weight)
{
    double k2 = trace.k.norm2();
    std::vector<double> w(trace.times.size()), m(trace.times.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        double t = trace.times[i];
        w[i] = weight == DecayWeight::kt_bracket ? std::sqrt(1.0 + k2 * (1.0 + t * t)) : bracket(t);
        m[i] = std::abs(trace.values[i]);
    }
    return decay_fit(w, m);
}

LpBound physical_lp_density(const std::vector<Vec>& k, const std::vector<cplx>& rho, double cell, double p, double n,
                            double t, double sigma_fit)
{
    if (k.size() != rho.size()) throw DomainError("density size mismatch");
    if (!(p >= 2.0)) throw DomainError("p must lie in [2, ∞]");
    if (!(n >= 0.0)) throw DomainError("n must be nonnegative");
    double q = std::isinf(p) ? 1.0 : p / (p - 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        double k2 = k[i].norm2();
        double w = std::sqrt(1.0 + k2 * (1.0 + t * t));
        s += std::pow(w, q * n) * std::pow(std::abs(rho[i]), q);
    }
    LpBound out;
    out.value = std::pow(s * cell, 1.0 / q);
    int d = k.empty() ? 1 : k.front().dim;
    double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    if (sigma_fit > 0.0 && !(n < sigma_fit - d * (1.0 - inv_p)))
        out.warning = "n exceeds the fitted decay exponent minus d(1 - 1/p); bound not meaningful";
    return out;
}

}  // namespace qmix
