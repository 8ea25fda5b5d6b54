#pragma once

#include <complex>
#include <vector>

namespace qmix {

// S_j = Σ_n x_n exp(i (tau0 + n dtau) j dt), j = 0..m-1, by Bluestein's method.
std::vector<std::complex<double>> chirp_sum(const std::vector<std::complex<double>>& x, double tau0,
                                            double dtau, double dt, std::size_t m);

// The same sum evaluated directly, O(n m).
std::vector<std::complex<double>> chirp_sum_direct(const std::vector<std::complex<double>>& x, double tau0,
                                                   double dtau, double dt, std::size_t m);

}  // namespace qmix
