#pragma once

#include <cstdint>

#include "sldp/la.hpp"
#include "sldp/stats.hpp"

namespace sldp::oracles {

/// Exact boundary-crossing probability P(sup_{[0,T]} |b W_t| >= a) by the
/// reflection series 4 sum_k (-1)^k Phi_bar((2k+1) a / (|b| sqrt(T))),
/// truncated when terms drop below 1e-14.
double gaussian_sup_tail(double b, double big_t, double a);

/// Minimal control energy moving x to y in time T through a constant
/// invertible diffusion: I = |b^{-1}(y - x)|^2 / (2T); diagonal case sums
/// coordinates.
double linear_rate(double b, double x, double y, double big_t);
double linear_rate_diag(const Vec& b, const Vec& x, const Vec& y, double big_t);

struct TailProbe {
    double p_hat = 0.0;
    std::size_t n_hits = 0;
    std::size_t n_paths = 0;
    BinomialCI ci;
};

/// Scalar zero-drift reference estimator: plain explicit Euler walk of
/// dY = sqrt(eps) b dW at a fine step, counting sup_t |Y - x0|^2 > delta.
/// Deliberately shares no code with the production stepper or its noise
/// stack (std::mt19937_64 + std::normal_distribution here), so it can sit on
/// the other side of calibration checks.
struct ScalarZeroDriftSpec {
    double b = 1.0;
    double x0 = 0.0;
};

TailProbe brute_force_tail(const ScalarZeroDriftSpec& sde, double epsilon, double delta, double big_t,
                           double fine_dt, std::size_t n_paths, std::uint64_t seed);

}  // namespace sldp::oracles
