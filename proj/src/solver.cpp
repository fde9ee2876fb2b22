#include "sldp/solver.hpp"

#include <cmath>

namespace sldp {

namespace {

double l2norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Forward-difference dense Jacobian; only used when the caller supplies no
// analytic factory (small test systems).
std::function<Vec(const Vec&)> numeric_jacobian_solver(const ResidualMap& residual, const Vec& y, const Vec& ry) {
    const std::size_t n = y.size();
    DenseMatrix jac(n, n);
    Vec yp = y;
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-7 * (1.0 + std::abs(y[j]));
        yp[j] = y[j] + h;
        const Vec rp = residual(yp);
        yp[j] = y[j];
        for (std::size_t i = 0; i < n; ++i) jac.at(i, j) = (rp[i] - ry[i]) / h;
    }
    DenseLU lu(jac);
    if (!lu.ok()) return nullptr;
    return [lu = std::move(lu)](const Vec& rhs) { return lu.solve(rhs); };
}

}  // namespace

Vec solve_monotone(const ResidualMap& residual, const Vec& x0, const StepperConfig& cfg,
                   const JacobianSolverFactory& jacobian, const NormFn& norm) {
    const NormFn nrm = norm ? norm : NormFn(l2norm);
    Vec y = x0;
    Vec ry = residual(y);
    if (!all_finite(ry)) throw std::runtime_error("solve_monotone: non-finite residual at initial guess");
    double rnorm = nrm(ry);
    std::vector<double> history{rnorm};

    double relax = 0.5;  // adaptive fixed-point damping
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        if (rnorm <= cfg.solver_tol) return y;

        bool accepted = false;

        std::function<Vec(const Vec&)> solve;
        if (jacobian)
            solve = jacobian(y);
        else
            solve = numeric_jacobian_solver(residual, y, ry);

        if (solve) {
            Vec dir = solve(ry);
            // Newton step with halving line search on the residual norm.
            double step = 1.0;
            for (int ls = 0; ls < 10; ++ls) {
                Vec cand = y;
                axpy(-step, dir, cand);
                Vec rc = residual(cand);
                if (all_finite(rc)) {
                    const double rn = nrm(rc);
                    if (rn < rnorm) {
                        y = std::move(cand);
                        ry = std::move(rc);
                        rnorm = rn;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
        }

        if (!accepted) {
            // Relaxation fallback: y <- y - w * r(y), shrinking w until the
            // residual decreases.
            bool relaxed = false;
            double w = relax;
            for (int ls = 0; ls < 20; ++ls) {
                Vec cand = y;
                axpy(-w, ry, cand);
                Vec rc = residual(cand);
                if (all_finite(rc)) {
                    const double rn = nrm(rc);
                    if (rn < rnorm) {
                        y = std::move(cand);
                        ry = std::move(rc);
                        rnorm = rn;
                        relax = std::min(1.0, w * 2.0);
                        relaxed = true;
                        break;
                    }
                }
                w *= 0.5;
            }
            if (!relaxed) {
                history.push_back(rnorm);
                throw NonconvergenceError("solve_monotone: no descent direction found", rnorm, history, y);
            }
        }
        history.push_back(rnorm);
    }
    if (rnorm <= cfg.solver_tol) return y;
    throw NonconvergenceError("solve_monotone: max_iters exceeded", rnorm, history, y);
}

}  // namespace sldp
