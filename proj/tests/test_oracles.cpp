#include <doctest.h>

#include <cmath>

#include "sldp/oracles.hpp"
#include "sldp/stats.hpp"

using namespace sldp;

TEST_CASE("reflection series: frozen regression value, scaling, monotonicity") {
    // Frozen from the truncated series and cross-checked offline against a
    // dt-extrapolated random walk (N = 1e5 at dt = 4e-4 and 1e-4), which gave
    // 0.6301 +- 0.010 at 3 sigma.
    CHECK(std::abs(oracles::gaussian_sup_tail(1.0, 1.0, 1.0) - 0.6292225702004761) < 1e-12);

    // Brownian scaling in the diffusion coefficient.
    for (double b : {0.5, 2.0, -3.0})
        for (double a : {0.3, 1.0, 2.5})
            CHECK(oracles::gaussian_sup_tail(b, 1.7, a) ==
                  doctest::Approx(oracles::gaussian_sup_tail(1.0, 1.7, a / std::abs(b))).epsilon(1e-13));

    // strictly decreasing in the threshold, vanishing at infinity
    double prev = 1.1;
    for (double a = 0.2; a < 8.0; a += 0.2) {
        const double p = oracles::gaussian_sup_tail(1.0, 1.0, a);
        CHECK(p < prev);
        prev = p;
    }
    CHECK(oracles::gaussian_sup_tail(1.0, 1.0, 40.0) == 0.0);
    CHECK_THROWS_AS((void)oracles::gaussian_sup_tail(0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)oracles::gaussian_sup_tail(1.0, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("linear rate closed form") {
    CHECK(oracles::linear_rate(2.0, 1.0, 1.0, 1.0) == 0.0);
    CHECK(oracles::linear_rate(2.0, 0.0, 1.0, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(oracles::linear_rate(2.0, 0.0, 1.0, 2.0) == doctest::Approx(0.0625).epsilon(1e-15));
    const Vec b{1.0, 2.0, 0.5, 4.0};
    const Vec x{0.0, 0.1, -0.2, 0.3};
    const Vec y{1.0, -0.4, 0.6, 0.3};
    double ref = 0.0;
    for (int k = 0; k < 4; ++k) ref += (y[k] - x[k]) * (y[k] - x[k]) / (2.0 * b[k] * b[k] * 3.0);
    CHECK(oracles::linear_rate_diag(b, x, y, 3.0) == doctest::Approx(ref).epsilon(1e-14));
    CHECK_THROWS_AS((void)oracles::linear_rate(0.0, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("brute-force walker: degenerate thresholds") {
    oracles::ScalarZeroDriftSpec sde{1.0, 0.3};
    const auto none = oracles::brute_force_tail(sde, 0.25, 1e12, 1.0, 1e-3, 500, 9);
    CHECK(none.n_hits == 0);
    const auto all = oracles::brute_force_tail(sde, 0.25, 0.0, 1.0, 1e-3, 500, 9);
    CHECK(all.n_hits == 500);
    CHECK(all.ci.lo > 0.9);
}

TEST_CASE("series and brute force agree within 3 SE over a (b, a) grid") {
    // thresholds sit at u >= 2 so the discrete-supremum bias stays well under
    // the Monte Carlo band at this fine_dt
    const double big_t = 1.0, eps = 1.0, fine_dt = 1e-4;
    const std::size_t n_paths = 8000;
    std::uint64_t seed = 1000;
    int cells = 0;
    for (double b : {0.5, 1.0, 2.0}) {
        for (double u : {2.0, 2.5, 3.0}) {
            const double a = u * std::abs(b);
            const double exact = oracles::gaussian_sup_tail(b, big_t, a);
            const auto probe = oracles::brute_force_tail({b, 0.0}, eps, a * a, big_t, fine_dt, n_paths, seed++);
            const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / n_paths);
            CAPTURE(b);
            CAPTURE(u);
            CHECK(std::abs(probe.p_hat - exact) <= 3.0 * se);
            ++cells;
        }
    }
    CHECK(cells == 9);
}

TEST_CASE("clopper-pearson intervals bracket the estimate and handle edge counts") {
    const BinomialCI mid = clopper_pearson(13, 100);
    CHECK(mid.lo < 0.13);
    CHECK(mid.hi > 0.13);
    const BinomialCI zero = clopper_pearson(0, 50);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi > 0.0);
    const BinomialCI full = clopper_pearson(50, 50);
    CHECK(full.hi == 1.0);
    CHECK(full.lo < 1.0);
    // one-sided zero-hit bound: p <= 1 - alpha^{1/n}
    CHECK(zero_hit_upper_bound(100, 0.05) == doctest::Approx(1.0 - std::pow(0.05, 0.01)).epsilon(1e-12));
}

TEST_CASE("sample quantiles interpolate order statistics") {
    std::vector<double> v{5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(sample_quantile(v, 0.0) == 1.0);
    CHECK(sample_quantile(v, 1.0) == 5.0);
    CHECK(sample_quantile(v, 0.5) == 3.0);
    CHECK(sample_quantile(v, 0.25) == 2.0);
}
