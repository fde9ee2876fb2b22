#include <doctest.h>

#include <cmath>

#include "sldp/framework.hpp"
#include "sldp/galerkin.hpp"
#include "sldp/rng.hpp"

using namespace sldp;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec random_state(const GalerkinSpace& sp, GaussianStream& g, double scale = 1.0) {
    Vec v(sp.dim());
    for (auto& x : v) x = scale * g.next();
    return v;
}
}  // namespace

TEST_CASE("mass matrix is SPD and gradient operator sees the Dirichlet boundary") {
    auto sp = GalerkinSpace::unit_interval(31, VNormKind::w1p(2.0), HKind::L2);
    // SPD: x^T M x > 0 on random vectors.
    GaussianStream g(1);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec v = random_state(*sp, g);
        CHECK(dot(v, sp->mass_apply(v)) > 0.0);
    }
    // A constant nodal vector extended by boundary zeros has zero gradient
    // only on interior cells; the boundary cells see the jump to zero.
    const Vec ones(sp->dim(), 1.0);
    const Vec grad = sp->cell_gradients(ones);
    CHECK(grad.front() != 0.0);
    CHECK(grad.back() != 0.0);
    for (std::size_t c = 1; c + 1 < grad.size(); ++c) CHECK(grad[c] == 0.0);
}

TEST_CASE("norms: zero vector, V-norm of the first sine mode") {
    auto sp = GalerkinSpace::unit_interval(128, VNormKind::w1p(2.0), HKind::L2);
    CHECK(norm(SpaceTag::H, Vec(128, 0.0), *sp) == 0.0);

    // |sin(pi x)|_{W^{1,2}_0} = pi sqrt(1/2) in the continuum.
    const Vec s = sp->interpolate([](double x) { return std::sin(kPi * x); });
    const double v = norm(SpaceTag::V, s, *sp);
    CHECK(v == doctest::Approx(kPi * std::sqrt(0.5)).epsilon(0.01));

    // H-norm approximates |sin|_{L^2} = sqrt(1/2).
    CHECK(norm(SpaceTag::H, s, *sp) == doctest::Approx(std::sqrt(0.5)).epsilon(0.01));
}

TEST_CASE("pairing is bilinear and reproduces the H inner product on embeddings") {
    auto sp = GalerkinSpace::unit_interval(40, VNormKind::w1p(2.0), HKind::L2);
    auto pme = GalerkinSpace::unit_interval(24, VNormKind::lr1(3.0), HKind::DualH1);
    GaussianStream g(3);
    for (const auto& space : {sp, pme}) {
        for (int rep = 0; rep < 100; ++rep) {
            const Vec u = random_state(*space, g);
            const Vec v = random_state(*space, g);
            const Vec w = random_state(*space, g);
            const double a = g.next(), b = g.next();
            const Vec f = space->embed_h(u);
            // identification <embed(u), v> = (u, v)_H
            CHECK(pairing(f, v) == doctest::Approx(space->h_inner(u, v)).epsilon(1e-12));
            // linearity in the V argument
            Vec lin = scaled(v, a);
            axpy(b, w, lin);
            CHECK(pairing(f, lin) ==
                  doctest::Approx(a * pairing(f, v) + b * pairing(f, w)).epsilon(1e-12));
        }
        CHECK(pairing(Vec(space->dim(), 0.0), random_state(*space, g)) == 0.0);
    }
}

TEST_CASE("norm axioms hold on random pairs in every space") {
    auto sp = GalerkinSpace::unit_interval(24, VNormKind::w1p(4.0), HKind::L2);
    GaussianStream g(5);
    for (SpaceTag tag : {SpaceTag::H, SpaceTag::V, SpaceTag::Vstar}) {
        const int reps = 1000;
        const double tol = tag == SpaceTag::Vstar ? 1e-7 : 1e-10;
        for (int rep = 0; rep < reps; ++rep) {
            const Vec u = random_state(*sp, g);
            const Vec v = random_state(*sp, g);
            const double lam = 2.0 * g.next();
            const double nu = norm(tag, u, *sp);
            const double nv = norm(tag, v, *sp);
            const double nsum = norm(tag, add(u, v), *sp);
            CHECK(norm(tag, scaled(u, lam), *sp) == doctest::Approx(std::abs(lam) * nu).epsilon(1e-8));
            CHECK(nsum <= nu + nv + tol * (1.0 + nu + nv));
        }
    }
}

TEST_CASE("duality pairing bound for the p=2 triple") {
    auto sp = GalerkinSpace::unit_interval(33, VNormKind::w1p(2.0), HKind::L2);
    GaussianStream g(11);
    for (int rep = 0; rep < 200; ++rep) {
        const Vec v = random_state(*sp, g);
        CHECK(norm(SpaceTag::Vstar, v, *sp) * norm(SpaceTag::V, v, *sp) >=
              pairing(v, v) * (1.0 - 1e-10));
    }
}

TEST_CASE("dual norm solves the nonlinear dual problem (p = 4)") {
    auto sp = GalerkinSpace::unit_interval(21, VNormKind::w1p(4.0), HKind::L2);
    GaussianStream g(13);
    const double p = 4.0;
    for (int rep = 0; rep < 25; ++rep) {
        // For f assembled as the p-Laplace load of a known w0 the dual norm
        // is |w0|_V^{p-1} exactly (sharp Hoelder pairing).
        const Vec w0 = random_state(*sp, g);
        const Vec f = sp->load(w0, [p](double, double, double ux, double& a, double& b) {
            a = 0.0;
            b = std::pow(std::abs(ux), p - 2.0) * ux;
        });
        const double dual = sp->vstar_norm(f);
        CHECK(dual == doctest::Approx(std::pow(sp->v_norm(w0), p - 1.0)).epsilon(1e-7));
        // and no test vector beats it
        for (int trial = 0; trial < 100; ++trial) {
            const Vec w = random_state(*sp, g);
            const double nv = sp->v_norm(w);
            if (nv > 0.0) CHECK(std::abs(pairing(f, w)) / nv <= dual * (1.0 + 1e-8));
        }
    }
}

TEST_CASE("dual norm via representer matches a fine golden-section scan in 1 dof") {
    // With one dof the dual norm is |f| h^{1-p} ... computable by hand:
    // sup_w f w / |w|_V with |w|_V = (2 h |w/h|^p)^{1/p} over two boundary cells.
    auto sp = GalerkinSpace::unit_interval(1, VNormKind::w1p(4.0), HKind::L2);
    const double h = sp->mesh_width();
    const Vec f{0.7};
    const double expected = 0.7 / std::pow(2.0 * h * std::pow(1.0 / h, 4.0), 1.0 / 4.0);
    CHECK(sp->vstar_norm(f) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("L^q quadrature norm matches a dense Riemann oracle") {
    auto sp = GalerkinSpace::unit_interval(17, VNormKind::lr1(3.0), HKind::DualH1);
    GaussianStream g(17);
    const Vec u = random_state(*sp, g);
    const double q = 4.0;
    // Riemann sum over the piecewise-linear interpolant at high resolution.
    const std::size_t fine = 200000;
    double s = 0.0;
    const double h = sp->mesh_width();
    for (std::size_t i = 0; i < fine; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(fine);
        const auto cell = std::min<std::size_t>(static_cast<std::size_t>(x / h), sp->dim());
        const double ul = (cell == 0) ? 0.0 : u[cell - 1];
        const double ur = (cell == sp->dim()) ? 0.0 : u[cell];
        const double xi = (x - static_cast<double>(cell) * h) / h;
        const double val = ul * (1.0 - xi) + ur * xi;
        s += std::pow(std::abs(val), q) / static_cast<double>(fine);
    }
    CHECK(sp->lq_norm(u, q) == doctest::Approx(std::pow(s, 1.0 / q)).epsilon(1e-4));
}

TEST_CASE("discrete sine modes are generalized eigenpairs and dual-H1 inner products invert them") {
    auto sp = GalerkinSpace::unit_interval(48, VNormKind::lr1(3.0), HKind::DualH1);
    for (std::size_t k : {1ul, 2ul, 5ul, 11ul}) {
        Vec raw(sp->dim());
        for (std::size_t i = 0; i < sp->dim(); ++i) raw[i] = std::sin(static_cast<double>(k) * kPi * sp->nodes()[i]);
        const double lambda = sp->sine_eigenvalue(k);
        const Vec lhs = sp->stiff_apply(raw);
        const Vec rhs = scaled(sp->mass_apply(raw), lambda);
        for (std::size_t i = 0; i < sp->dim(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-10));

        // M-normalized mode: (phi, phi)_H = 1/lambda in the dual-H1 pivot space.
        const double mnorm = std::sqrt(dot(raw, sp->mass_apply(raw)));
        const Vec phi = scaled(raw, 1.0 / mnorm);
        CHECK(sp->h_inner(phi, phi) == doctest::Approx(1.0 / lambda).epsilon(1e-10));
    }
}

TEST_CASE("riesz maps are mutually inverse") {
    for (auto sp : {GalerkinSpace::unit_interval(19, VNormKind::w1p(2.0), HKind::L2),
                    GalerkinSpace::unit_interval(19, VNormKind::lr1(3.0), HKind::DualH1)}) {
        GaussianStream g(23);
        const Vec u = random_state(*sp, g);
        const Vec back = sp->riesz_solve(sp->riesz_apply(u));
        for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[i] == doctest::Approx(u[i]).epsilon(1e-9));
    }
}

TEST_CASE("gelfand indices carry the shared dimension") {
    auto sp = GalerkinSpace::unit_interval(17, VNormKind::w1p(2.0), HKind::L2);
    for (SpaceTag tag : {SpaceTag::H, SpaceTag::V, SpaceTag::Vstar}) {
        const GelfandIndex idx = sp->index(tag);
        CHECK(idx.dim_v == 17);
        CHECK(idx.tag == tag);
    }
}

TEST_CASE("invalid inputs are rejected") {
    auto sp = GalerkinSpace::unit_interval(8, VNormKind::w1p(2.0), HKind::L2);
    CHECK_THROWS_AS((void)pairing(Vec(8, 0.0), Vec(7, 0.0)), std::invalid_argument);
    Vec bad(8, 0.0);
    bad[3] = std::nan("");
    CHECK_THROWS_AS((void)norm(SpaceTag::V, bad, *sp), std::invalid_argument);
    CHECK_THROWS_AS(GalerkinSpace::unit_interval(0, VNormKind::w1p(2.0), HKind::L2), std::invalid_argument);
}
