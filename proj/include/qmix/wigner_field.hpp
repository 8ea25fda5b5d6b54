#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qmix/vec.hpp"

namespace qmix {

using cplx = std::complex<double>;

// Symmetric uniform grid with an odd number of nodes per axis.
struct AxisGrid {
    int n = 1;
    double step = 1.0;
    int half() const { return (n - 1) / 2; }
    double extent() const { return half() * step; }
    double at(int i) const { return (i - half()) * step; }
};

// Ŵ[P](t, k, η) on a (k, η) grid; values are row-major over k then η.
class WignerField {
public:
    WignerField() = default;
    WignerField(int dim, AxisGrid k_axis, AxisGrid eta_axis, double hbar, double time = 0.0);

    int dim() const { return dim_; }
    const AxisGrid& k_axis() const { return k_; }
    const AxisGrid& eta_axis() const { return eta_; }
    double hbar() const { return hbar_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    std::size_t k_count() const { return k_count_; }
    std::size_t eta_count() const { return eta_count_; }
    std::size_t size() const { return values_.size(); }

    Vec k_at(std::size_t kf) const;
    Vec eta_at(std::size_t ef) const;
    // Integer node offsets from the origin, per axis.
    void k_index(std::size_t kf, int* m) const;
    void eta_index(std::size_t ef, int* m) const;
    // Flat index of a k node given per-axis offsets from the origin; -1 if outside.
    long k_flat(const int* m) const;
    std::size_t k_origin() const { return (k_count_ - 1) / 2; }
    std::size_t eta_origin() const { return (eta_count_ - 1) / 2; }

    cplx& at(std::size_t kf, std::size_t ef) { return values_[kf * eta_count_ + ef]; }
    const cplx& at(std::size_t kf, std::size_t ef) const { return values_[kf * eta_count_ + ef]; }
    cplx* row(std::size_t kf) { return values_.data() + kf * eta_count_; }
    const cplx* row(std::size_t kf) const { return values_.data() + kf * eta_count_; }

    std::vector<cplx>& values() { return values_; }
    const std::vector<cplx>& values() const { return values_; }

    double max_abs() const;
    // max |values| on the outermost shell of the (k, η) box.
    double boundary_max_abs() const;
    // max |W(-k,-η) - conj W(k,η)|
    double conjugate_defect() const;
    void symmetrize();

    // cell volume (dk dη)^d
    double cell() const;

private:
    int dim_ = 1;
    AxisGrid k_, eta_;
    double hbar_ = 0.0;
    double time_ = 0.0;
    std::size_t k_count_ = 0, eta_count_ = 0;
    std::vector<cplx> values_;
};

}  // namespace qmix
