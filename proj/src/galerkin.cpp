#include "sldp/galerkin.hpp"

#include <cmath>

namespace sldp {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

std::shared_ptr<const GalerkinSpace> GalerkinSpace::unit_interval(std::size_t n_dof, VNormKind v_norm, HKind h_kind) {
    if (n_dof < 1) throw std::invalid_argument("GalerkinSpace: n_dof must be >= 1");
    if (h_kind == HKind::Euclidean) throw std::invalid_argument("GalerkinSpace: use euclidean() for instrument spaces");
    auto sp = std::shared_ptr<GalerkinSpace>(new GalerkinSpace());
    sp->n_dof_ = n_dof;
    sp->h_ = 1.0 / static_cast<double>(n_dof + 1);
    sp->nodes_.resize(n_dof);
    for (std::size_t i = 0; i < n_dof; ++i) sp->nodes_[i] = static_cast<double>(i + 1) * sp->h_;
    sp->v_norm_ = v_norm;
    sp->h_kind_ = h_kind;

    const double h = sp->h_;
    TriDiag mass(n_dof), stiff(n_dof);
    for (std::size_t i = 0; i < n_dof; ++i) {
        mass.diag(i) = 2.0 * h / 3.0;
        stiff.diag(i) = 2.0 / h;
        if (i > 0) {
            mass.lower(i) = h / 6.0;
            stiff.lower(i) = -1.0 / h;
        }
        if (i + 1 < n_dof) {
            mass.upper(i) = h / 6.0;
            stiff.upper(i) = -1.0 / h;
        }
    }
    sp->mass_ = mass;
    sp->stiffness_ = stiff;
    sp->mass_lu_ = TriDiagLU(mass);
    sp->stiffness_lu_ = TriDiagLU(stiff);
    if (!sp->mass_lu_.ok() || sp->mass_lu_.min_pivot() <= 0.0)
        throw std::runtime_error("GalerkinSpace: mass matrix not positive definite");
    if (!sp->stiffness_lu_.ok()) throw std::runtime_error("GalerkinSpace: stiffness matrix singular");

    // 3-point Gauss-Legendre on [0,1]
    const double s = std::sqrt(3.0 / 5.0);
    sp->qpoint_[0] = 0.5 * (1.0 - s);
    sp->qpoint_[1] = 0.5;
    sp->qpoint_[2] = 0.5 * (1.0 + s);
    sp->qweight_[0] = 5.0 / 18.0;
    sp->qweight_[1] = 8.0 / 18.0;
    sp->qweight_[2] = 5.0 / 18.0;

    if (h_kind == HKind::DualH1) {
        // Cache R = M S^{-1} M and its factorization; every H-inner product
        // of the dual pivot space goes through it.
        DenseMatrix r(n_dof, n_dof);
        Vec e(n_dof, 0.0);
        for (std::size_t j = 0; j < n_dof; ++j) {
            e.assign(n_dof, 0.0);
            e[j] = 1.0;
            const Vec col = sp->mass_.apply(sp->stiffness_lu_.solve(sp->mass_.apply(e)));
            for (std::size_t i = 0; i < n_dof; ++i) r.at(i, j) = col[i];
        }
        sp->riesz_dense_ = r;
        sp->riesz_lu_ = DenseLU(r);
        if (!sp->riesz_lu_->ok()) throw std::runtime_error("GalerkinSpace: dual-H1 Riesz matrix singular");
    }
    return sp;
}

std::shared_ptr<const GalerkinSpace> GalerkinSpace::euclidean(std::size_t n) {
    if (n < 1) throw std::invalid_argument("GalerkinSpace: n must be >= 1");
    auto sp = std::shared_ptr<GalerkinSpace>(new GalerkinSpace());
    sp->n_dof_ = n;
    sp->h_ = 0.0;
    sp->v_norm_ = VNormKind::euclidean();
    sp->h_kind_ = HKind::Euclidean;
    TriDiag eye(n);
    for (std::size_t i = 0; i < n; ++i) eye.diag(i) = 1.0;
    sp->mass_ = eye;
    sp->stiffness_ = eye;
    sp->mass_lu_ = TriDiagLU(eye);
    sp->stiffness_lu_ = TriDiagLU(eye);
    return sp;
}

void GalerkinSpace::require_dim(const Vec& v, const char* where) const {
    if (v.size() != n_dof_)
        throw std::invalid_argument(std::string(where) + ": expected dim " + std::to_string(n_dof_) + ", got " +
                                    std::to_string(v.size()));
}

Vec GalerkinSpace::mass_apply(const Vec& u) const {
    require_dim(u, "mass_apply");
    return mass_.apply(u);
}

Vec GalerkinSpace::mass_solve(const Vec& f) const {
    require_dim(f, "mass_solve");
    return mass_lu_.solve(f);
}

Vec GalerkinSpace::stiff_apply(const Vec& u) const {
    require_dim(u, "stiff_apply");
    return stiffness_.apply(u);
}

Vec GalerkinSpace::stiff_solve(const Vec& f) const {
    require_dim(f, "stiff_solve");
    return stiffness_lu_.solve(f);
}

double GalerkinSpace::h_inner(const Vec& u, const Vec& v) const {
    require_dim(u, "h_inner");
    require_dim(v, "h_inner");
    switch (h_kind_) {
        case HKind::Euclidean:
            return dot(u, v);
        case HKind::L2:
            return dot(u, mass_.apply(v));
        case HKind::DualH1:
            return dot(mass_.apply(u), stiffness_lu_.solve(mass_.apply(v)));
    }
    return 0.0;
}

double GalerkinSpace::h_norm(const Vec& v) const {
    const double q = h_inner(v, v);
    return q > 0.0 ? std::sqrt(q) : 0.0;
}

double GalerkinSpace::v_norm(const Vec& v) const {
    require_dim(v, "v_norm");
    if (!all_finite(v)) throw std::invalid_argument("v_norm: non-finite entries");
    switch (v_norm_.kind) {
        case VNormKind::Kind::Euclidean:
            return std::sqrt(dot(v, v));
        case VNormKind::Kind::W1p: {
            const double p = v_norm_.param;
            const Vec g = cell_gradients(v);
            double s = 0.0;
            for (double gc : g) s += h_ * std::pow(std::abs(gc), p);
            return std::pow(s, 1.0 / p);
        }
        case VNormKind::Kind::Lr1:
            return lq_norm(v, v_norm_.param + 1.0);
    }
    return 0.0;
}

double GalerkinSpace::lq_norm(const Vec& u, double q) const {
    require_dim(u, "lq_norm");
    double s = 0.0;
    const std::size_t cells = n_dof_ + 1;
    for (std::size_t c = 0; c < cells; ++c) {
        const double ul = (c == 0) ? 0.0 : u[c - 1];
        const double ur = (c == n_dof_) ? 0.0 : u[c];
        for (int iq = 0; iq < kQuad; ++iq) {
            const double val = ul * (1.0 - qpoint_[iq]) + ur * qpoint_[iq];
            s += h_ * qweight_[iq] * std::pow(std::abs(val), q);
        }
    }
    return std::pow(s, 1.0 / q);
}

namespace {

// Damped Newton on a smooth strictly convex energy: Armijo backtracking on
// the energy itself, steepest-descent fallback, Levenberg regularization of
// the (possibly degenerate) Hessian. Globally convergent on the dual
// problems solved here.
Vec minimize_convex(const std::function<double(const Vec&)>& energy_of,
                    const std::function<Vec(const Vec&)>& gradient_of,
                    const std::function<TriDiag(const Vec&)>& hessian_of, const TriDiag& metric, Vec w,
                    double grad_tol, int max_iters) {
    double e = energy_of(w);
    Vec g = gradient_of(w);
    for (int iter = 0; iter < max_iters; ++iter) {
        const double gn = std::sqrt(dot(g, g));
        if (gn <= grad_tol) return w;
        Vec dir;
        TriDiag h = hessian_of(w);
        double mu = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt) {
            TriDiag hr = h;
            if (mu > 0.0) hr.add_scaled(mu, metric);
            TriDiagLU lu(hr);
            if (lu.ok() && lu.min_pivot() > 1e-14 * (1.0 + gn)) {
                dir = lu.solve(g);
                break;
            }
            mu = (mu == 0.0) ? 1e-8 * (1.0 + gn) : 10.0 * mu;
        }
        if (dir.empty()) dir = g;  // steepest descent in coordinates
        double slope = dot(g, dir);
        if (slope <= 0.0) {
            dir = g;
            slope = dot(g, g);
        }
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 50; ++ls) {
            Vec cand = w;
            axpy(-step, dir, cand);
            const double ec = energy_of(cand);
            if (std::isfinite(ec) && ec <= e - 1e-4 * step * slope) {
                w = std::move(cand);
                e = ec;
                g = gradient_of(w);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;  // energy is flat to machine precision
    }
    const double gn = std::sqrt(dot(g, g));
    if (gn > 1e4 * grad_tol)
        throw std::runtime_error("vstar_norm: dual problem did not reach tolerance (gradient " + std::to_string(gn) +
                                 ")");
    return w;
}

}  // namespace

double GalerkinSpace::vstar_norm(const Vec& f) const {
    require_dim(f, "vstar_norm");
    if (!all_finite(f)) throw std::invalid_argument("vstar_norm: non-finite entries");
    if (h_kind_ == HKind::Euclidean) return std::sqrt(dot(f, f));

    const double fscale = linf(f);
    if (fscale == 0.0) return 0.0;

    if (v_norm_.kind == VNormKind::Kind::W1p && v_norm_.param == 2.0) {
        const Vec z = stiffness_lu_.solve(f);
        const double q = dot(f, z);
        return q > 0.0 ? std::sqrt(q) : 0.0;
    }

    // Nonlinear dual problem: the minimizer of (1/p)|w|_V^p - f.w satisfies
    // D(1/p |w|_V^p) = f, and then ||f||_{V*} = |w|_V^{p-1} by the sharp
    // Hoelder pairing bound (p = r+1 for the L^{r+1} triple).
    const double grad_tol = 1e-10 * (1.0 + fscale);
    const int max_iters = 200;

    if (v_norm_.kind == VNormKind::Kind::W1p) {
        const double p = v_norm_.param;
        const Integrand flux = [p](double, double, double ux, double& a, double& b) {
            a = 0.0;
            b = std::pow(std::abs(ux), p - 2.0) * ux;
        };
        const IntegrandDerivative dflux = [p](double, double, double ux, double& a_u, double& a_ux, double& b_u,
                                              double& b_ux) {
            a_u = a_ux = b_u = 0.0;
            b_ux = (p - 1.0) * std::pow(std::abs(ux), p - 2.0);
        };
        // Scaled linear representer as the starting point.
        Vec w0 = stiffness_lu_.solve(f);
        {
            const Vec q = load(w0, flux);
            const double qq = dot(q, q);
            if (qq > 0.0) {
                const double num = dot(q, f);
                if (num > 0.0) {
                    const double s = std::pow(num / qq, 1.0 / (p - 1.0));
                    for (double& x : w0) x *= s;
                }
            }
        }
        const Vec w = minimize_convex(
            [&](const Vec& w_) { return std::pow(v_norm(w_), p) / p - dot(f, w_); },
            [&](const Vec& w_) { return sub(load(w_, flux), f); },
            [&](const Vec& w_) { return load_jacobian(w_, dflux); }, mass_, std::move(w0), grad_tol, max_iters);
        return std::pow(v_norm(w), p - 1.0);
    }

    // Lr1: the dual problem is int |w|^{r-1} w phi_i = f_i.
    const double r = v_norm_.param;
    const Integrand power = [r](double, double u, double, double& a, double& b) {
        a = std::pow(std::abs(u), r - 1.0) * u;
        b = 0.0;
    };
    const IntegrandDerivative dpower = [r](double, double u, double, double& a_u, double& a_ux, double& b_u,
                                           double& b_ux) {
        a_u = r * std::pow(std::abs(u), r - 1.0);
        a_ux = b_u = b_ux = 0.0;
    };
    Vec w0 = mass_lu_.solve(f);
    for (double& x : w0) x = (x >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(x), 1.0 / r);
    const double q = r + 1.0;
    const Vec w = minimize_convex(
        [&](const Vec& w_) { return std::pow(lq_norm(w_, q), q) / q - dot(f, w_); },
        [&](const Vec& w_) { return sub(load(w_, power), f); },
        [&](const Vec& w_) { return load_jacobian(w_, dpower); }, mass_, std::move(w0), grad_tol, max_iters);
    return std::pow(v_norm(w), r);
}

Vec GalerkinSpace::embed_h(const Vec& u) const {
    require_dim(u, "embed_h");
    switch (h_kind_) {
        case HKind::Euclidean:
            return u;
        case HKind::L2:
            return mass_.apply(u);
        case HKind::DualH1:
            return mass_.apply(stiffness_lu_.solve(mass_.apply(u)));
    }
    return {};
}

Vec GalerkinSpace::riesz_solve(const Vec& f) const {
    require_dim(f, "riesz_solve");
    switch (h_kind_) {
        case HKind::Euclidean:
            return f;
        case HKind::L2:
            return mass_lu_.solve(f);
        case HKind::DualH1:
            return mass_lu_.solve(stiffness_.apply(mass_lu_.solve(f)));
    }
    return {};
}

Vec GalerkinSpace::riesz_apply(const Vec& u) const { return embed_h(u); }

const DenseMatrix& GalerkinSpace::riesz_dense() const {
    if (!riesz_dense_) throw std::logic_error("riesz_dense: only available for DualH1 spaces");
    return *riesz_dense_;
}

Vec GalerkinSpace::cell_gradients(const Vec& u) const {
    require_dim(u, "cell_gradients");
    if (is_euclidean()) throw std::logic_error("cell_gradients: not defined on instrument spaces");
    Vec g(n_dof_ + 1);
    for (std::size_t c = 0; c <= n_dof_; ++c) {
        const double ul = (c == 0) ? 0.0 : u[c - 1];
        const double ur = (c == n_dof_) ? 0.0 : u[c];
        g[c] = (ur - ul) / h_;
    }
    return g;
}

Vec GalerkinSpace::load(const Vec& u, const Integrand& f, double) const {
    require_dim(u, "load");
    if (is_euclidean()) throw std::logic_error("load: not defined on instrument spaces");
    Vec out(n_dof_, 0.0);
    const std::size_t cells = n_dof_ + 1;
    for (std::size_t c = 0; c < cells; ++c) {
        const double ul = (c == 0) ? 0.0 : u[c - 1];
        const double ur = (c == n_dof_) ? 0.0 : u[c];
        const double ux = (ur - ul) / h_;
        const double x0 = static_cast<double>(c) * h_;
        for (int iq = 0; iq < kQuad; ++iq) {
            const double xi = qpoint_[iq];
            const double x = x0 + xi * h_;
            const double uval = ul * (1.0 - xi) + ur * xi;
            double a = 0.0, b = 0.0;
            f(x, uval, ux, a, b);
            const double w = h_ * qweight_[iq];
            if (c > 0) out[c - 1] += w * (a * (1.0 - xi) + b * (-1.0 / h_));
            if (c < n_dof_) out[c] += w * (a * xi + b * (1.0 / h_));
        }
    }
    return out;
}

TriDiag GalerkinSpace::load_jacobian(const Vec& u, const IntegrandDerivative& df) const {
    require_dim(u, "load_jacobian");
    if (is_euclidean()) throw std::logic_error("load_jacobian: not defined on instrument spaces");
    TriDiag jac(n_dof_);
    const std::size_t cells = n_dof_ + 1;
    for (std::size_t c = 0; c < cells; ++c) {
        const double ul = (c == 0) ? 0.0 : u[c - 1];
        const double ur = (c == n_dof_) ? 0.0 : u[c];
        const double ux = (ur - ul) / h_;
        const double x0 = static_cast<double>(c) * h_;
        for (int iq = 0; iq < kQuad; ++iq) {
            const double xi = qpoint_[iq];
            const double x = x0 + xi * h_;
            const double uval = ul * (1.0 - xi) + ur * xi;
            double a_u = 0.0, a_ux = 0.0, b_u = 0.0, b_ux = 0.0;
            df(x, uval, ux, a_u, a_ux, b_u, b_ux);
            const double w = h_ * qweight_[iq];
            // trial basis: left node (c-1) has value (1-xi), slope -1/h;
            // right node (c) has value xi, slope 1/h.
            const double trial_val[2] = {1.0 - xi, xi};
            const double trial_slope[2] = {-1.0 / h_, 1.0 / h_};
            const double test_val[2] = {1.0 - xi, xi};
            const double test_slope[2] = {-1.0 / h_, 1.0 / h_};
            const long idx[2] = {c > 0 ? static_cast<long>(c - 1) : -1, c < n_dof_ ? static_cast<long>(c) : -1};
            for (int ti = 0; ti < 2; ++ti) {
                if (idx[ti] < 0) continue;
                for (int tj = 0; tj < 2; ++tj) {
                    if (idx[tj] < 0) continue;
                    const double entry = w * ((a_u * trial_val[tj] + a_ux * trial_slope[tj]) * test_val[ti] +
                                              (b_u * trial_val[tj] + b_ux * trial_slope[tj]) * test_slope[ti]);
                    const long i = idx[ti], j = idx[tj];
                    if (i == j)
                        jac.diag(i) += entry;
                    else if (j == i - 1)
                        jac.lower(i) += entry;
                    else
                        jac.upper(i) += entry;
                }
            }
        }
    }
    return jac;
}

Vec GalerkinSpace::interpolate(const std::function<double(double)>& f) const {
    Vec v(n_dof_);
    if (is_euclidean()) {
        for (std::size_t i = 0; i < n_dof_; ++i) v[i] = f(static_cast<double>(i));
        return v;
    }
    for (std::size_t i = 0; i < n_dof_; ++i) v[i] = f(nodes_[i]);
    return v;
}

Vec GalerkinSpace::sine_mode(std::size_t k) const {
    if (k < 1) throw std::invalid_argument("sine_mode: k must be >= 1");
    if (is_euclidean()) {
        // Coordinate basis stands in for the abstract U-basis.
        if (k > n_dof_) throw std::invalid_argument("sine_mode: k exceeds dimension");
        Vec e(n_dof_, 0.0);
        e[k - 1] = 1.0;
        return e;
    }
    Vec v(n_dof_);
    for (std::size_t i = 0; i < n_dof_; ++i) v[i] = std::sin(static_cast<double>(k) * kPi * nodes_[i]);
    const double nrm = h_norm(v);
    if (nrm == 0.0) throw std::runtime_error("sine_mode: degenerate mode");
    for (double& x : v) x /= nrm;
    return v;
}

double GalerkinSpace::sine_eigenvalue(std::size_t k) const {
    if (is_euclidean()) return 1.0;
    const double c = std::cos(static_cast<double>(k) * kPi * h_);
    return 6.0 * (1.0 - c) / (h_ * h_ * (2.0 + c));
}

}  // namespace sldp
