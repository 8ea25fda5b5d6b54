#include "qmix/chirpz.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace qmix {

namespace {

using cplx = std::complex<double>;

// Planner calls are not thread safe.
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

void fft(std::vector<cplx>& a, int sign)
{
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(a.size()), p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
}

// exp(i theta m^2 / 2) with m^2 reduced exactly before scaling.
cplx chirp(double theta, long long m)
{
    long double q = static_cast<long double>(m) * static_cast<long double>(m);
    long double arg = 0.5L * static_cast<long double>(theta) * q;
    arg = std::fmod(arg, 2.0L * 3.14159265358979323846264338327950288L);
    return std::polar(1.0, static_cast<double>(arg));
}

}  // namespace

std::vector<cplx> chirp_sum(const std::vector<cplx>& x, double tau0, double dtau, double dt, std::size_t m)
{
    std::size_t n = x.size();
    std::vector<cplx> out(m);
    if (n == 0 || m == 0) return out;
    std::size_t len = 1;
    while (len < n + m - 1) len <<= 1;
    double theta = dtau * dt;
    std::vector<cplx> a(len), b(len);
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * chirp(theta, static_cast<long long>(i));
    for (std::size_t j = 0; j < m; ++j) b[j] = std::conj(chirp(theta, static_cast<long long>(j)));
    for (std::size_t i = 1; i < n; ++i) b[len - i] = std::conj(chirp(theta, static_cast<long long>(i)));
    fft(a, FFTW_FORWARD);
    fft(b, FFTW_FORWARD);
    for (std::size_t i = 0; i < len; ++i) a[i] *= b[i];
    fft(a, FFTW_BACKWARD);
    double inv = 1.0 / static_cast<double>(len);
    for (std::size_t j = 0; j < m; ++j) {
        double tj = static_cast<double>(j) * dt;
        out[j] = a[j] * inv * chirp(theta, static_cast<long long>(j)) * std::polar(1.0, tau0 * tj);
    }
    return out;
}

std::vector<cplx> chirp_sum_direct(const std::vector<cplx>& x, double tau0, double dtau, double dt, std::size_t m)
{
    std::vector<cplx> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        double tj = static_cast<double>(j) * dt;
        cplx s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += x[i] * std::polar(1.0, (tau0 + static_cast<double>(i) * dtau) * tj);
        out[j] = s;
    }
    return out;
}

}  // namespace qmix
