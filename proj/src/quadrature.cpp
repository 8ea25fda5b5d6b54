#include "qmix/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace qmix {

const GaussRule& gauss_rule()
{
    static const GaussRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 20>;
        GaussRule r;
        const auto& xs = G::abscissa();
        const auto& ws = G::weights();
        // Boost stores the nonnegative half; 20 is even so no zero node.
        for (std::size_t i = xs.size(); i-- > 0;) {
            r.x.push_back(-xs[i]);
            r.w.push_back(ws[i]);
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            r.x.push_back(xs[i]);
            r.w.push_back(ws[i]);
        }
        return r;
    }();
    return rule;
}

}  // namespace qmix
