#pragma once

#include <cstddef>
#include <vector>

namespace sldp {

struct BinomialCI {
    double lo = 0.0;
    double hi = 1.0;
};

/// Exact (Clopper-Pearson) two-sided confidence interval for a binomial
/// proportion at the given confidence level.
BinomialCI clopper_pearson(std::size_t hits, std::size_t trials, double confidence = 0.95);

/// One-sided upper bound for a zero-hit frequency: p <= 1 - alpha^{1/n} at
/// one-sided level 1 - alpha.
double zero_hit_upper_bound(std::size_t trials, double alpha = 0.05);

/// Standard normal upper tail P(Z >= x).
double normal_upper_tail(double x);

/// Quantile of a sample by linear interpolation on the sorted copy; q in [0,1].
double sample_quantile(std::vector<double> values, double q);

}  // namespace sldp
