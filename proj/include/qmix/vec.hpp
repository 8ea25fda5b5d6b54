#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <string>

#include "qmix/error.hpp"

namespace qmix {

// Small d-vector, d in {1,2,3}.
struct Vec {
    int dim = 1;
    std::array<double, 3> c{0.0, 0.0, 0.0};

    Vec() = default;
    explicit Vec(int d) : dim(d) { check_dim(d); }
    Vec(std::initializer_list<double> xs) : dim(static_cast<int>(xs.size()))
    {
        check_dim(dim);
        int i = 0;
        for (double x : xs) c[i++] = x;
    }

    static Vec along(int d, double r)
    {
        Vec v(d);
        v.c[0] = r;
        return v;
    }

    double operator[](int i) const { return c[i]; }
    double& operator[](int i) { return c[i]; }

    double norm2() const
    {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += c[i] * c[i];
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }
    double dot(const Vec& o) const
    {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += c[i] * o.c[i];
        return s;
    }
    bool finite() const
    {
        for (int i = 0; i < dim; ++i)
            if (!std::isfinite(c[i])) return false;
        return true;
    }

    Vec operator*(double s) const
    {
        Vec r = *this;
        for (int i = 0; i < dim; ++i) r.c[i] *= s;
        return r;
    }
    Vec operator+(const Vec& o) const
    {
        Vec r = *this;
        for (int i = 0; i < dim; ++i) r.c[i] += o.c[i];
        return r;
    }
    Vec operator-(const Vec& o) const
    {
        Vec r = *this;
        for (int i = 0; i < dim; ++i) r.c[i] -= o.c[i];
        return r;
    }
    Vec operator-() const { return *this * -1.0; }

    std::string str() const;

private:
    static void check_dim(int d)
    {
        if (d < 1 || d > 3) throw DomainError("dimension must be 1, 2 or 3");
    }
};

// Japanese bracket <x> = sqrt(1 + x^2), given x^2.
inline double bracket2(double x2) { return std::sqrt(1.0 + x2); }
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double two_pi_pow(int d) { return std::pow(kTwoPi, d); }

// (2/h) sin(h x / 2), with the limit x at h = 0.
inline double sinc_factor(double hbar, double x)
{
    if (hbar == 0.0) return x;
    return 2.0 / hbar * std::sin(0.5 * hbar * x);
}

}  // namespace qmix
