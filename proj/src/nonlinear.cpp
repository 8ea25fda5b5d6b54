#include "qmix/nonlinear.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "qmix/parallel.hpp"
#include "qmix/penrose.hpp"
#include "qmix/spline.hpp"

namespace qmix {

namespace {

std::size_t ipow(std::size_t b, int e)
{
    std::size_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

std::mutex& fftw_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

std::vector<std::string> check_sigma(const SigmaParams& s, int d)
{
    if (!(s.sigma0 >= 0.0 && s.sigma1 > s.sigma0 && s.sigma2 > s.sigma1 && s.sigma3 > s.sigma2 && s.sigma4 > s.sigma3))
        throw ConfigError("sigma parameters must satisfy sigma4 > sigma3 > sigma2 > sigma1 > sigma0 >= 0");
    if (s.M < 0 || s.M > 4) throw ConfigError("M must lie in [0, 4]");
    if (!(s.delta > 0.0 && s.delta < 0.5)) throw ConfigError("delta must lie in (0, 1/2)");
    std::vector<std::string> out;
    if (s.sigma1 < d + 8) out.push_back("sigma1 >= d + 8 fails");
    if (!(s.sigma2 - s.sigma1 > 1.5)) out.push_back("sigma2 - sigma1 > 3/2 fails");
    if (!(s.sigma3 - s.sigma2 > 0.5 * d)) out.push_back("sigma3 - sigma2 > d/2 fails");
    if (!(s.sigma4 - s.sigma3 > 0.5 * (d + 1) + s.delta)) out.push_back("sigma4 - sigma3 > (d+1)/2 + delta fails");
    if (!(s.sigma4 < s.N0 - 0.5 * (d + 3))) out.push_back("sigma4 < N0 - (d+3)/2 fails");
    if (!(2 * s.sigma1 - 2 * s.sigma0 > d + 2)) out.push_back("2 sigma1 - 2 sigma0 > d + 2 fails");
    if (s.sigma1 > s.N0) out.push_back("sigma1 exceeds N0");
    return out;
}

void SimConfig::validate() const
{
    if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2 or 3");
    if (!(hbar >= 0.0 && hbar <= 1.0)) throw ConfigError("hbar must lie in [0, 1]");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be finite and >= 0");
    if (kernel.dim() != dim || profile.dim() != dim) throw ConfigError("kernel/profile dimension differs from dim");
    if (k_axis.n < 3 || k_axis.n % 2 == 0 || eta_axis.n < 5 || eta_axis.n % 2 == 0)
        throw ConfigError("grid needs an odd node count per axis (k >= 3, eta >= 5)");
    if (!(k_axis.step > 0.0) || !(eta_axis.step > 0.0)) throw ConfigError("grid steps must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be positive");
    if (dt < 0.0 || !std::isfinite(dt)) throw ConfigError("dt must be >= 0 (0 selects automatically)");
    if (!(output_interval > 0.0)) throw ConfigError("output_interval must be positive");
    double kmax = k_axis.extent(), emax = eta_axis.extent();
    if (emax < kmax * T * (1.0 - 1e-12))
        throw ConfigError("eta_max = " + fmt(emax) + " is below k_max * T = " + fmt(kmax * T));
    for (const Vec& k : traced) {
        if (k.dim != dim) throw ConfigError("traced mode dimension differs from dim");
        for (int a = 0; a < dim; ++a) {
            double r = k[a] / k_axis.step;
            if (std::abs(r - std::round(r)) > 1e-9 || std::abs(k[a]) > kmax * (1 + 1e-12))
                throw ConfigError("traced mode " + k.str() + " is not a grid node");
        }
    }
    if (K && K->size() != 5) throw ConfigError("K needs five entries");
    if (max_halvings < 0) throw ConfigError("max_halvings must be >= 0");
    if (!(abort_growth > 1.0)) throw ConfigError("abort_growth must exceed 1");
    check_sigma(sigma, dim);
}

namespace {

// Node index of a grid k in the per-row coefficient store and the slice
// position of η = kt.
bool slice_position(const WignerField& f, std::size_t kf, double* pos)
{
    Vec k = f.k_at(kf);
    double t = f.time();
    int he = f.eta_axis().half();
    bool inside = true;
    for (int a = 0; a < f.dim(); ++a) {
        pos[a] = k[a] * t / f.eta_axis().step + he;
        if (!(pos[a] >= 0.0 && pos[a] <= f.eta_axis().n - 1)) inside = false;
    }
    return inside;
}

cplx slice_value(const WignerField& f, std::size_t kf, const cplx* coeff)
{
    double pos[3];
    if (!slice_position(f, kf, pos)) return 0.0;
    int n = f.eta_axis().n;
    bool node = true;
    for (int a = 0; a < f.dim(); ++a) node = node && pos[a] == std::floor(pos[a]);
    if (node) {
        std::size_t ef = 0;
        for (int a = 0; a < f.dim(); ++a) ef = ef * n + static_cast<std::size_t>(pos[a]);
        return f.at(kf, ef);
    }
    return spline::evaluate(coeff, n, f.dim(), pos);
}

}  // namespace

std::vector<cplx> density_slice(const WignerField& field, std::vector<DroppedMode>* dropped)
{
    int n = field.eta_axis().n, d = field.dim();
    std::size_t block = ipow(spline::coeff_extent(n), d);
    std::vector<cplx> out(field.k_count());
    parallel_for(field.k_count(), [&](std::size_t lo, std::size_t hi) {
        std::vector<cplx> coeff(block);
        for (std::size_t kf = lo; kf < hi; ++kf) {
            double pos[3];
            if (!slice_position(field, kf, pos)) continue;
            spline::prefilter(field.row(kf), n, d, coeff.data());
            out[kf] = slice_value(field, kf, coeff.data());
        }
    });
    if (dropped) {
        for (std::size_t kf = 0; kf < field.k_count(); ++kf) {
            double pos[3];
            if (!slice_position(field, kf, pos)) dropped->push_back({field.k_at(kf), field.time()});
        }
    }
    return out;
}

struct RhsEvaluator::Impl {
    InteractionKernel w;
    VelocityProfile g;
    int d = 1;
    AxisGrid ka, ea;
    double hbar = 0.0;
    std::size_t nk = 0, ne = 0, block = 0;
    std::vector<double> what;  // ŵ per grid k
    std::vector<cplx> coeff;   // per-row spline coefficients
    std::vector<cplx> rho;

    // S(k·ζ) ĝ(|ζ|), ζ = η - kt, cached for two times
    struct LinTable {
        double t = -1.0;
        std::vector<double> v;
    };
    LinTable lin[2];
    int lin_next = 0;

    // sheared scheme
    int P = 0;
    std::size_t PD = 0;
    fftw_plan fwd = nullptr, bwd = nullptr;
    std::vector<cplx> U, V;

    ~Impl()
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }

    Vec node(std::size_t f, const AxisGrid& ax) const
    {
        Vec v(d);
        for (int a = d - 1; a >= 0; --a) {
            v[a] = ax.at(static_cast<int>(f % ax.n));
            f /= ax.n;
        }
        return v;
    }

    const std::vector<double>& lin_table(double t)
    {
        for (auto& L : lin)
            if (L.t == t) return L.v;
        LinTable& L = lin[lin_next];
        lin_next ^= 1;
        L.t = t;
        L.v.assign(nk * ne, 0.0);
        double cutoff = g.fourier_radius();
        parallel_for(nk, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t kf = lo; kf < hi; ++kf) {
                if (what[kf] == 0.0) continue;
                Vec k = node(kf, ka);
                if (k.norm2() == 0.0) continue;
                for (std::size_t ef = 0; ef < ne; ++ef) {
                    Vec z = node(ef, ea) - k * t;
                    double zr = z.norm();
                    if (zr > cutoff) continue;
                    L.v[kf * ne + ef] = sinc_factor(hbar, k.dot(z)) * g.fourier_radial(zr);
                }
            }
        });
        return L.v;
    }

    void prefilter_rows(const WignerField& f)
    {
        int n = ea.n;
        parallel_for(nk, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t kf = lo; kf < hi; ++kf) spline::prefilter(f.row(kf), n, d, coeff.data() + kf * block);
        });
    }

    void direct(const WignerField& f, const std::vector<cplx>& F, WignerField& out)
    {
        double t = f.time();
        int n = ea.n;
        std::vector<std::size_t> active;
        for (std::size_t lf = 0; lf < nk; ++lf)
            if (F[lf] != 0.0) active.push_back(lf);
        parallel_for(nk, [&](std::size_t lo, std::size_t hi) {
            std::vector<cplx> tmp(ne), scratch;
            std::vector<cplx> acc(ne);
            int mk[3], ml[3], mq[3];
            for (std::size_t kf = lo; kf < hi; ++kf) {
                std::fill(acc.begin(), acc.end(), 0.0);
                f.k_index(kf, mk);
                Vec k = f.k_at(kf);
                for (std::size_t lf : active) {
                    f.k_index(lf, ml);
                    for (int a = 0; a < d; ++a) mq[a] = mk[a] - ml[a];
                    long qf = f.k_flat(mq);
                    if (qf < 0) continue;
                    Vec l = f.k_at(lf);
                    double shift[3];
                    for (int a = 0; a < d; ++a) shift[a] = -l[a] * t / ea.step;
                    spline::shift_block(coeff.data() + qf * block, n, d, shift, tmp.data(), scratch);
                    double lk = l.dot(k) * t;
                    for (std::size_t ef = 0; ef < ne; ++ef) {
                        if (tmp[ef] == 0.0) continue;
                        double x = l.dot(f.eta_at(ef)) - lk;
                        acc[ef] += F[lf] * sinc_factor(hbar, x) * tmp[ef];
                    }
                }
                cplx* o = out.row(kf);
                for (std::size_t ef = 0; ef < ne; ++ef) o[ef] += acc[ef];
            }
        });
    }

    void setup_sheared()
    {
        int hk = ka.half();
        P = 3 * hk + 1;
        auto smooth = [](int m) {
            for (int p : {2, 3, 5})
                while (m % p == 0) m /= p;
            return m == 1;
        };
        while (!smooth(P)) ++P;
        PD = ipow(P, d);
        int dims[3] = {P, P, P};
        fftw_complex* buf = fftw_alloc_complex(PD);
        {
            std::lock_guard<std::mutex> lock(fftw_mutex());
            fwd = fftw_plan_dft(d, dims, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft(d, dims, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        fftw_free(buf);
    }

    void sheared(const WignerField& f, const std::vector<cplx>& F, WignerField& out)
    {
        double t = f.time();
        int n = ea.n, he = ea.half(), hk = ka.half();
        double kmax = ka.extent();
        int Jz = he + static_cast<int>(std::ceil(kmax * t / ea.step - 1e-9)) + 1;
        int nz = 2 * Jz + 1;
        std::size_t NZ = ipow(nz, d);
        U.assign(nk * NZ, 0.0);
        V.assign(nk * NZ, 0.0);

        // U(k', ζ) = W(k', ζ + k't)
        parallel_for(nk, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> pos[3];
            std::vector<cplx> sa, sb;
            for (std::size_t kf = lo; kf < hi; ++kf) {
                Vec k = f.k_at(kf);
                for (int a = 0; a < d; ++a) {
                    pos[a].resize(nz);
                    double s = k[a] * t / ea.step + he;
                    for (int j = 0; j < nz; ++j) pos[a][j] = (j - Jz) + s;
                }
                spline::resample(coeff.data() + kf * block, n, d, pos, U.data() + kf * NZ, sa, sb);
            }
        });

        // S(ℓ·ζ) through the integer products of node offsets
        long span = 0;
        for (int a = 0; a < d; ++a) span += static_cast<long>(hk) * Jz;
        double unit = ka.step * ea.step;
        std::vector<double> phase(2 * span + 1);
        for (long q = -span; q <= span; ++q) phase[q + span] = sinc_factor(hbar, unit * static_cast<double>(q));

        std::vector<std::size_t> active;
        std::vector<std::array<int, 3>> lidx(nk);
        for (std::size_t lf = 0; lf < nk; ++lf) {
            int m[3] = {0, 0, 0};
            f.k_index(lf, m);
            lidx[lf] = {m[0], m[1], m[2]};
            if (F[lf] != 0.0) active.push_back(lf);
        }
        auto wrap = [&](const std::array<int, 3>& m) {
            std::size_t idx = 0;
            for (int a = 0; a < d; ++a) idx = idx * P + static_cast<std::size_t>((m[a] % P + P) % P);
            return idx;
        };
        std::vector<std::size_t> wk(nk);
        for (std::size_t kf = 0; kf < nk; ++kf) wk[kf] = wrap(lidx[kf]);
        double inv = 1.0 / static_cast<double>(PD);

        parallel_for(NZ, [&](std::size_t lo, std::size_t hi) {
            fftw_complex* A = fftw_alloc_complex(PD);
            fftw_complex* B = fftw_alloc_complex(PD);
            auto* a = reinterpret_cast<cplx*>(A);
            auto* b = reinterpret_cast<cplx*>(B);
            int mz[3];
            for (std::size_t zf = lo; zf < hi; ++zf) {
                bool any = false;
                for (std::size_t kf = 0; kf < nk && !any; ++kf) any = U[kf * NZ + zf] != 0.0;
                if (!any) continue;
                std::size_t rem = zf;
                for (int ax = d - 1; ax >= 0; --ax) {
                    mz[ax] = static_cast<int>(rem % nz) - Jz;
                    rem /= nz;
                }
                std::fill(a, a + PD, 0.0);
                std::fill(b, b + PD, 0.0);
                for (std::size_t kf = 0; kf < nk; ++kf) a[wk[kf]] = U[kf * NZ + zf];
                for (std::size_t lf : active) {
                    long q = 0;
                    for (int ax = 0; ax < d; ++ax) q += static_cast<long>(lidx[lf][ax]) * mz[ax];
                    b[wk[lf]] = F[lf] * phase[q + span];
                }
                fftw_execute_dft(fwd, A, A);
                fftw_execute_dft(fwd, B, B);
                for (std::size_t i = 0; i < PD; ++i) a[i] *= b[i];
                fftw_execute_dft(bwd, A, A);
                for (std::size_t kf = 0; kf < nk; ++kf) V[kf * NZ + zf] = a[wk[kf]] * inv;
            }
            fftw_free(A);
            fftw_free(B);
        });

        // N(k, η) = V(k, η - kt)
        std::size_t zblock = ipow(spline::coeff_extent(nz), d);
        parallel_for(nk, [&](std::size_t lo, std::size_t hi) {
            std::vector<cplx> c(zblock), tmp(ne), sa, sb;
            std::vector<double> pos[3];
            for (std::size_t kf = lo; kf < hi; ++kf) {
                Vec k = f.k_at(kf);
                spline::prefilter(V.data() + kf * NZ, nz, d, c.data());
                for (int a = 0; a < d; ++a) {
                    pos[a].resize(n);
                    double s = -k[a] * t / ea.step + Jz;
                    for (int j = 0; j < n; ++j) pos[a][j] = (j - he) + s;
                }
                spline::resample(c.data(), nz, d, pos, tmp.data(), sa, sb);
                cplx* o = out.row(kf);
                for (std::size_t ef = 0; ef < ne; ++ef) o[ef] += tmp[ef];
            }
        });
    }
};

RhsEvaluator::RhsEvaluator(const InteractionKernel& w, const VelocityProfile& g, const WignerField& layout,
                           RhsScheme scheme)
    : scheme_(scheme), impl_(std::make_unique<Impl>())
{
    Impl& I = *impl_;
    I.w = w;
    I.g = g;
    I.d = layout.dim();
    I.ka = layout.k_axis();
    I.ea = layout.eta_axis();
    I.hbar = layout.hbar();
    I.nk = layout.k_count();
    I.ne = layout.eta_count();
    I.block = ipow(spline::coeff_extent(I.ea.n), I.d);
    I.what.resize(I.nk);
    for (std::size_t kf = 0; kf < I.nk; ++kf) I.what[kf] = kernel_hat(w, layout.k_at(kf));
    I.coeff.resize(I.nk * I.block);
    if (scheme_ == RhsScheme::automatic) {
        double cost = static_cast<double>(I.nk) * static_cast<double>(I.nk * I.ne) * std::pow(4.0, I.d);
        scheme_ = cost < 1e8 ? RhsScheme::direct : RhsScheme::sheared;
    }
    if (scheme_ == RhsScheme::sheared) I.setup_sheared();
}

RhsEvaluator::~RhsEvaluator() = default;

void RhsEvaluator::operator()(const WignerField& f, WignerField& out, bool nonlinear)
{
    Impl& I = *impl_;
    if (f.dim() != I.d || f.k_axis().n != I.ka.n || f.eta_axis().n != I.ea.n || f.hbar() != I.hbar)
        throw DomainError("field layout differs from the evaluator");
    if (out.size() != f.size()) out = f;
    std::fill(out.values().begin(), out.values().end(), 0.0);
    out.set_time(f.time());
    double t = f.time();

    I.prefilter_rows(f);
    I.rho.assign(I.nk, 0.0);
    for (std::size_t kf = 0; kf < I.nk; ++kf) I.rho[kf] = slice_value(f, kf, I.coeff.data() + kf * I.block);

    double c0 = 1.0 / two_pi_pow(I.d);
    const std::vector<double>& L = I.lin_table(t);
    parallel_for(I.nk, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t kf = lo; kf < hi; ++kf) {
            cplx r = I.what[kf] * I.rho[kf];
            if (r == 0.0) continue;
            cplx* o = out.row(kf);
            const double* l = L.data() + kf * I.ne;
            for (std::size_t ef = 0; ef < I.ne; ++ef) o[ef] += r * l[ef];
        }
    });

    if (nonlinear) {
        double cell = std::pow(I.ka.step, I.d);
        std::vector<cplx> F(I.nk);
        bool any = false;
        for (std::size_t lf = 0; lf < I.nk; ++lf) {
            F[lf] = I.what[lf] * I.rho[lf] * cell;
            any = any || F[lf] != 0.0;
        }
        if (any) {
            if (scheme_ == RhsScheme::direct)
                I.direct(f, F, out);
            else
                I.sheared(f, F, out);
        }
    }

    for (std::size_t kf = 0; kf < I.nk; ++kf) {
        cplx* o = out.row(kf);
        for (std::size_t ef = 0; ef < I.ne; ++ef) {
            o[ef] *= -c0;
            if (!std::isfinite(o[ef].real()) || !std::isfinite(o[ef].imag()))
                throw NumericalError("non-finite rhs at k = " + f.k_at(kf).str() + ", eta = " + f.eta_at(ef).str() +
                                         ", t = " + fmt(t),
                                     std::abs(o[ef]));
        }
    }
}

double step_rk4(RhsEvaluator& rhs, WignerField& W, double dt, bool nonlinear)
{
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    double t = W.time();
    std::size_t N = W.size();
    WignerField k1, k2, k3, k4;
    WignerField stage = W;
    auto combine = [&](const WignerField& k, double h) {
        auto& s = stage.values();
        const auto& w = W.values();
        const auto& kv = k.values();
        for (std::size_t i = 0; i < N; ++i) s[i] = w[i] + h * kv[i];
    };
    rhs(W, k1, nonlinear);
    combine(k1, 0.5 * dt);
    stage.set_time(t + 0.5 * dt);
    rhs(stage, k2, nonlinear);
    combine(k2, 0.5 * dt);
    rhs(stage, k3, nonlinear);
    combine(k3, dt);
    stage.set_time(t + dt);
    rhs(stage, k4, nonlinear);
    auto& w = W.values();
    for (std::size_t i = 0; i < N; ++i)
        w[i] += dt / 6.0 * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
    W.set_time(t + dt);
    double defect = W.conjugate_defect();
    double scale = W.max_abs();
    if (defect > 1e-8 * scale)
        throw ConsistencyError("conjugate symmetry defect " + fmt(defect) + " after step at t = " + fmt(t + dt));
    W.symmetrize();
    return defect;
}

namespace {

// Minus the least-squares slope of log y against log <x>.
double loglog_decay(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0)) continue;
        lx.push_back(std::log(bracket(x[i])));
        ly.push_back(std::log(y[i]));
    }
    if (lx.size() < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    return sxx > 0 ? -sxy / sxx : 0.0;
}

}  // namespace

ScatteringResult scattering_profile(const std::vector<Snapshot>& snaps, int dim, const NormParams& norm,
                                    double transient)
{
    std::size_t post = 0;
    for (std::size_t i = 0; i + 1 < snaps.size(); ++i)
        if (snaps[i].t >= transient) ++post;
    if (snaps.size() < 2 || post < 6)
        throw InsufficientDataError("scattering profile needs at least 6 snapshots past the transient window");
    ScatteringResult r;
    r.Q_inf = snaps.back().field;
    r.transient = transient;
    if (r.Q_inf.dim() != dim) throw DomainError("snapshot dimension mismatch");
    double T = snaps.back().t;
    for (std::size_t i = 0; i + 1 < snaps.size(); ++i) {
        r.times.push_back(snaps[i].t);
        r.cauchy_residuals.push_back(weighted_distance(snaps[i].field, r.Q_inf, norm));
        double h = snaps[i + 1].t - snaps[i].t;
        r.increment_times.push_back(snaps[i].t + 0.5 * h);
        r.increments.push_back(weighted_distance(snaps[i].field, snaps[i + 1].field, norm) / h);
    }
    std::vector<double> tt, rr, it, ii;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (r.times[i] < transient) continue;
        tt.push_back(r.times[i]);
        rr.push_back(r.cauchy_residuals[i]);
        it.push_back(r.increment_times[i]);
        ii.push_back(r.increments[i]);
    }
    double peak = *std::max_element(rr.begin(), rr.end());
    for (std::size_t i = 1; i < rr.size(); ++i)
        if (rr[i] > rr[i - 1] + 1e-12 * peak) r.monotone = false;
    if (peak == 0.0) return r;

    // ‖∂_t Q‖ ~ <t>^{-(p+1)} integrates to ‖Q(t) - Q_∞‖ ~ <t>^{-p}.
    r.increment_exponent = loglog_decay(it, ii);
    r.rate_exponent = r.increment_exponent - 1.0;
    r.naive_exponent = loglog_decay(tt, rr);

    // log r = log C + log(<t>^{-p} - <T>^{-p}); C eliminated in closed form.
    double bT = bracket(T);
    auto rss = [&](double p) {
        std::vector<double> e;
        for (std::size_t i = 0; i < tt.size(); ++i) {
            if (rr[i] <= 0.0) continue;
            double m = std::pow(bracket(tt[i]), -p) - std::pow(bT, -p);
            if (!(m > 0.0)) return 1e300;
            e.push_back(std::log(rr[i]) - std::log(m));
        }
        if (e.empty()) return 1e300;
        double mean = 0;
        for (double v : e) mean += v;
        mean /= e.size();
        double s = 0;
        for (double v : e) s += (v - mean) * (v - mean);
        return s;
    };
    double best = 0.01, best_v = rss(best);
    for (double p = 0.01; p <= 8.0; p += 0.01) {
        double v = rss(p);
        if (v < best_v) {
            best_v = v;
            best = p;
        }
    }
    double a = std::max(1e-4, best - 0.01), b = best + 0.01;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; k < 60; ++k) {
        double c = b - gr * (b - a), d = a + gr * (b - a);
        if (rss(c) < rss(d))
            b = d;
        else
            a = c;
    }
    r.reference_exponent = 0.5 * (a + b);
    r.fit_residual = std::sqrt(rss(r.reference_exponent) / std::max<std::size_t>(1, tt.size()));
    return r;
}

double amplitude_factor(const SimConfig& cfg, const InitialWigner& W0)
{
    if (W0.dim() != cfg.dim) throw ConfigError("initial data dimension differs from dim");
    if (cfg.amplitude == Amplitude::raw) return cfg.epsilon;
    WignerField f(cfg.dim, cfg.k_axis, cfg.eta_axis, cfg.hbar);
    W0.sample(f);
    double m = 0.0;
    for (std::size_t kf = 0; kf < f.k_count(); ++kf) {
        double k2 = f.k_at(kf).norm2();
        for (std::size_t ef = 0; ef < f.eta_count(); ++ef) {
            double w = 1.0;
            if (cfg.amplitude == Amplitude::bootstrap)
                w = std::pow(1.0 + k2 + f.eta_at(ef).norm2(), 0.5 * cfg.sigma.sigma1);
            m = std::max(m, w * std::abs(f.at(kf, ef)));
        }
    }
    if (m == 0.0) return 0.0;
    return cfg.epsilon / m;
}

WignerField initial_field(const SimConfig& cfg, const InitialWigner& W0)
{
    WignerField f(cfg.dim, cfg.k_axis, cfg.eta_axis, cfg.hbar);
    W0.sample(f, amplitude_factor(cfg, W0));
    f.symmetrize();
    return f;
}

double default_dt(const SimConfig& cfg)
{
    double wsup = cfg.kernel.sup_abs(cfg.k_axis.extent() * std::sqrt(static_cast<double>(cfg.dim)));
    return 0.5 * cfg.eta_axis.step / (cfg.k_axis.extent() * (1.0 + wsup * cfg.epsilon));
}

namespace {

// Largest dt' <= dt dividing the output interval.
double align_dt(double dt, double interval)
{
    double m = std::ceil(interval / dt - 1e-9);
    return interval / m;
}

WignerField march_to(const WignerField& start, RhsEvaluator& rhs, double dt, double t1)
{
    WignerField W = start;
    std::size_t n = static_cast<std::size_t>(std::llround(t1 / dt));
    for (std::size_t i = 0; i < n; ++i) step_rk4(rhs, W, dt);
    return W;
}

double max_diff(const WignerField& a, const WignerField& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace

SimOutput simulate(const SimConfig& cfg, const InitialWigner& W0)
{
    cfg.validate();
    SimOutput out;
    out.sigma_report = check_sigma(cfg.sigma, cfg.dim);
    for (const auto& s : out.sigma_report) out.warnings.push_back("sigma constraint: " + s);
    if (cfg.dim < 3) out.warnings.push_back("d < 3: theorem-level statements are reported as empirical surrogates");

    if (!cfg.skip_penrose) {
        double K = cfg.k_axis.extent() * std::sqrt(static_cast<double>(cfg.dim));
        ScanResolution res;
        res.n_k = 16;
        PenroseReport rep = penrose_margin(cfg.kernel, cfg.profile, {cfg.hbar}, K, 8.0, res);
        if (!rep.stable())
            throw StabilityRefusal("Penrose pre-check failed: kappa = " + fmt(rep.kappa) +
                                   ", tail = " + fmt(rep.tail_certificate));
    }

    WignerField W = initial_field(cfg, W0);
    double init_max = W.max_abs();
    cplx trace0 = W.at(W.k_origin(), W.eta_origin());
    RhsEvaluator rhs(cfg.kernel, cfg.profile, W, cfg.scheme);
    out.scheme = rhs.scheme();

    double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(cfg);
    dt = align_dt(dt, cfg.output_interval);
    if (cfg.dt <= 0.0 && init_max > 0.0) {
        double t1 = std::min(1.0, cfg.T);
        int h = 0;
        for (;; ++h) {
            double tc = std::ceil(t1 / dt - 1e-9) * dt;
            WignerField a = march_to(W, rhs, dt, tc);
            WignerField b = march_to(W, rhs, 0.5 * dt, tc);
            double change = max_diff(a, b) / std::max(a.max_abs(), 1e-300);
            if (change < cfg.dt_tolerance) break;
            if (h == cfg.max_halvings) {
                out.warnings.push_back("time step not converged after " + std::to_string(h) +
                                       " halvings (change " + fmt(change) + ")");
                break;
            }
            dt *= 0.5;
        }
    }
    out.dt = dt;
    std::size_t steps = static_cast<std::size_t>(std::ceil(cfg.T / dt - 1e-9));
    std::size_t stride = static_cast<std::size_t>(std::llround(cfg.output_interval / dt));
    if (stride == 0) stride = 1;

    MonitorSettings ms;
    ms.dim = cfg.dim;
    ms.hbar = cfg.hbar;
    ms.sigma1 = cfg.sigma.sigma1;
    ms.sigma2 = cfg.sigma.sigma2;
    ms.sigma3 = cfg.sigma.sigma3;
    ms.sigma4 = cfg.sigma.sigma4;
    ms.M = cfg.sigma.M;
    ms.delta = cfg.sigma.delta;
    ms.K = cfg.K;
    ms.epsilon = cfg.epsilon;
    BootstrapMonitor monitor(ms);

    std::vector<std::size_t> traced_flat;
    for (const Vec& k : cfg.traced) {
        int m[3];
        for (int a = 0; a < cfg.dim; ++a) m[a] = static_cast<int>(std::lround(k[a] / cfg.k_axis.step));
        traced_flat.push_back(static_cast<std::size_t>(W.k_flat(m)));
        DensityTrace tr;
        tr.k = W.k_at(traced_flat.back());
        tr.dt = dt;
        tr.hbar = cfg.hbar;
        tr.provenance = Provenance::nonlinear;
        out.traces.push_back(tr);
    }
    std::vector<Vec> kgrid(W.k_count());
    for (std::size_t kf = 0; kf < W.k_count(); ++kf) kgrid[kf] = W.k_at(kf);
    std::vector<bool> dropped_seen(W.k_count(), false);
    double kcell = std::pow(cfg.k_axis.step, cfg.dim);
    bool boundary_warned = false;

    for (std::size_t s = 0;; ++s) {
        double t = W.time();
        std::vector<DroppedMode> dropped;
        std::vector<cplx> rho = density_slice(W, &dropped);
        for (const auto& dm : dropped) {
            int m[3];
            for (int a = 0; a < cfg.dim; ++a) m[a] = static_cast<int>(std::lround(dm.k[a] / cfg.k_axis.step));
            std::size_t kf = static_cast<std::size_t>(W.k_flat(m));
            if (!dropped_seen[kf]) {
                dropped_seen[kf] = true;
                for (std::size_t i = 0; i < traced_flat.size(); ++i)
                    if (traced_flat[i] == kf)
                        out.warnings.push_back("traced mode " + dm.k.str() + " dropped from t = " + fmt(dm.t));
            }
        }
        for (std::size_t i = 0; i < traced_flat.size(); ++i) {
            out.traces[i].times.push_back(t);
            out.traces[i].values.push_back(rho[traced_flat[i]]);
        }
        DensitySample ds{t, kgrid, rho, kcell};
        if (cfg.monitors) monitor.add_density(ds);
        out.slices.push_back(std::move(ds));
        out.max_trace_drift = std::max(out.max_trace_drift, std::abs(W.at(W.k_origin(), W.eta_origin()) - trace0));

        double mx = W.max_abs();
        if (s % stride == 0 || s == steps) {
            if (cfg.monitors) monitor.add_field(W);
            if (cfg.keep_snapshots) out.snapshots.push_back({t, W});
            if (mx > 0.0) {
                double ratio = W.boundary_max_abs() / mx;
                out.max_boundary_ratio = std::max(out.max_boundary_ratio, ratio);
                if (ratio >= 1e-6 && !boundary_warned) {
                    boundary_warned = true;
                    out.warnings.push_back("truncation: boundary shell carries " + fmt(ratio) +
                                           " of the field maximum at t = " + fmt(t));
                }
            }
        }
        if (init_max > 0.0 && mx > cfg.abort_growth * init_max) {
            out.unstable = true;
            out.warnings.push_back("instability: field grew by more than " + fmt(cfg.abort_growth) +
                                   " at t = " + fmt(t));
            break;
        }
        if (s == steps) break;
        out.max_conjugate_defect = std::max(out.max_conjugate_defect, step_rk4(rhs, W, dt));
        out.steps = s + 1;
    }
    out.monitors = monitor.series();
    out.final_field = W;

    if (cfg.keep_snapshots && !out.unstable) {
        NormParams np{cfg.sigma.sigma0, cfg.sigma.M, WeightMode::plain, 0.0};
        try {
            out.scattering = scattering_profile(out.snapshots, cfg.dim, np, 0.2 * cfg.T);
            if (!out.scattering->monotone)
                out.warnings.push_back("scattering residuals are not monotone after the transient window");
        } catch (const InsufficientDataError& e) {
            out.warnings.push_back(std::string("scattering: ") + e.what());
        }
    }
    return out;
}

}  // namespace qmix
