#include "sldp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>

namespace sldp {

BinomialCI clopper_pearson(std::size_t hits, std::size_t trials, double confidence) {
    if (trials == 0) throw std::invalid_argument("clopper_pearson: trials must be positive");
    if (hits > trials) throw std::invalid_argument("clopper_pearson: hits exceed trials");
    if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("clopper_pearson: bad confidence");
    const double alpha = 1.0 - confidence;
    BinomialCI ci;
    const auto k = static_cast<double>(hits);
    const auto n = static_cast<double>(trials);
    if (hits == 0) {
        ci.lo = 0.0;
    } else {
        boost::math::beta_distribution<double> lo_dist(k, n - k + 1.0);
        ci.lo = boost::math::quantile(lo_dist, alpha / 2.0);
    }
    if (hits == trials) {
        ci.hi = 1.0;
    } else {
        boost::math::beta_distribution<double> hi_dist(k + 1.0, n - k);
        ci.hi = boost::math::quantile(hi_dist, 1.0 - alpha / 2.0);
    }
    return ci;
}

double zero_hit_upper_bound(std::size_t trials, double alpha) {
    if (trials == 0) throw std::invalid_argument("zero_hit_upper_bound: trials must be positive");
    return 1.0 - std::pow(alpha, 1.0 / static_cast<double>(trials));
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / 1.4142135623730950488016887242097); }

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sample_quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace sldp
