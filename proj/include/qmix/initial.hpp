#pragma once

#include <memory>

#include "qmix/wigner_field.hpp"

namespace qmix {

// Evaluator for Ŵ[Q_in](k, η) of self-adjoint initial data.
class InitialWigner {
public:
    enum class Kind { gaussian, rational, grid };

    // A exp(-|k|^2/wk^2 - |η|^2/we^2) exp(-i(k·x0 + η·v0))
    static InitialWigner gaussian(int dim, double amplitude, double width_k, double width_eta);
    // A exp(-|k|^2/wk^2) <|η|/we>^(-power) exp(-i(k·x0 + η·v0))
    static InitialWigner rational(int dim, double amplitude, double width_k, double width_eta, double power);
    // Samples on a grid; k must be a grid node, η is interpolated.
    static InitialWigner sampled(const WignerField& field);

    InitialWigner with_shift(const Vec& x0, const Vec& v0) const;
    InitialWigner scaled(double factor) const;

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double amplitude() const { return amp_; }

    cplx operator()(const Vec& k, const Vec& eta) const;

    // Fill a field with samples.
    void sample(WignerField& field, double factor = 1.0) const;

private:
    struct Grid;
    Kind kind_ = Kind::gaussian;
    int dim_ = 1;
    double amp_ = 1.0, wk_ = 1.0, we_ = 1.0, power_ = 0.0;
    Vec x0_, v0_;
    std::shared_ptr<const Grid> grid_;
};

}  // namespace qmix
