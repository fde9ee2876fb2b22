#include "sldp/oracles.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "sldp/parallel.hpp"
#include "sldp/rng.hpp"

namespace sldp::oracles {

double gaussian_sup_tail(double b, double big_t, double a) {
    if (b == 0.0) throw std::invalid_argument("gaussian_sup_tail: b must be nonzero");
    if (!(a > 0.0)) throw std::invalid_argument("gaussian_sup_tail: threshold must be positive");
    if (!(big_t > 0.0)) throw std::invalid_argument("gaussian_sup_tail: horizon must be positive");
    const double u = a / (std::abs(b) * std::sqrt(big_t));
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 0; k < 64; ++k) {
        const double term = normal_upper_tail((2.0 * k + 1.0) * u);
        sum += sign * term;
        if (term < 1e-14) break;
        sign = -sign;
    }
    const double p = 4.0 * sum;
    return std::min(1.0, std::max(0.0, p));
}

double linear_rate(double b, double x, double y, double big_t) {
    if (b == 0.0) throw std::invalid_argument("linear_rate: singular diffusion");
    if (!(big_t > 0.0)) throw std::invalid_argument("linear_rate: horizon must be positive");
    const double d = (y - x) / b;
    return d * d / (2.0 * big_t);
}

double linear_rate_diag(const Vec& b, const Vec& x, const Vec& y, double big_t) {
    check_same_dim(b, x, "linear_rate_diag");
    check_same_dim(b, y, "linear_rate_diag");
    double s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) s += linear_rate(b[k], x[k], y[k], big_t);
    return s;
}

TailProbe brute_force_tail(const ScalarZeroDriftSpec& sde, double epsilon, double delta, double big_t,
                           double fine_dt, std::size_t n_paths, std::uint64_t seed) {
    if (!(fine_dt > 0.0) || !(big_t > 0.0)) throw std::invalid_argument("brute_force_tail: bad time parameters");
    if (n_paths < 1) throw std::invalid_argument("brute_force_tail: n_paths must be >= 1");
    const auto n_steps = static_cast<std::size_t>(std::llround(big_t / fine_dt));
    if (n_steps < 1) throw std::invalid_argument("brute_force_tail: horizon shorter than fine_dt");
    const double sd = std::sqrt(epsilon) * sde.b * std::sqrt(fine_dt);

    std::vector<std::uint8_t> hit(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t i) {
        std::mt19937_64 gen(derive_seed(seed, i));
        std::normal_distribution<double> normal(0.0, 1.0);
        double y = sde.x0;
        double sup2 = 0.0;
        for (std::size_t k = 0; k < n_steps; ++k) {
            y += sd * normal(gen);
            const double d = y - sde.x0;
            sup2 = std::max(sup2, d * d);
        }
        hit[i] = sup2 > delta ? 1 : 0;
    });

    TailProbe probe;
    probe.n_paths = n_paths;
    for (auto h : hit) probe.n_hits += h;
    probe.p_hat = static_cast<double>(probe.n_hits) / static_cast<double>(n_paths);
    probe.ci = clopper_pearson(probe.n_hits, n_paths);
    return probe;
}

}  // namespace sldp::oracles
