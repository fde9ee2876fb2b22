#include "sldp/models.hpp"

#include <cmath>
#include <stdexcept>

namespace sldp {

namespace {

void require_shared_space(const ModelSpec& m, const char* who) {
    if (&m.diffusion.space() != m.space.get())
        throw std::invalid_argument(std::string(who) + ": diffusion must live on the model's space instance");
}

DiffusionSpec noise_from_config(const std::shared_ptr<const GalerkinSpace>& space, const ModelBuildConfig& cfg) {
    if (cfg.noise_kind == "zero") return DiffusionSpec::zero(space);
    if (cfg.noise_kind == "multiplicative")
        return DiffusionSpec::multiplicative_sine(space, cfg.noise_m, cfg.noise_amplitude);
    if (cfg.noise_kind == "additive") {
        Vec amps(cfg.noise_m);
        for (std::size_t k = 0; k < cfg.noise_m; ++k)
            amps[k] = cfg.noise_amplitude / static_cast<double>((k + 1) * (k + 1));
        return DiffusionSpec::additive(space, std::move(amps));
    }
    throw std::invalid_argument("unknown noise kind: " + cfg.noise_kind);
}

}  // namespace

Vec ModelSpec::drift_h(double t, const Vec& v) const {
    if (!drift_load) return Vec(space->dim(), 0.0);
    return space->riesz_solve(drift_load(t, v));
}

std::shared_ptr<const GalerkinSpace> heat_space(std::size_t n_dof) {
    return GalerkinSpace::unit_interval(n_dof, VNormKind::w1p(2.0), HKind::L2);
}

std::shared_ptr<const GalerkinSpace> burgers_space(std::size_t n_dof) { return heat_space(n_dof); }

std::shared_ptr<const GalerkinSpace> plaplace_space(std::size_t n_dof, double p) {
    return GalerkinSpace::unit_interval(n_dof, VNormKind::w1p(p), HKind::L2);
}

std::shared_ptr<const GalerkinSpace> pme_space(std::size_t n_dof, double r) {
    return GalerkinSpace::unit_interval(n_dof, VNormKind::lr1(r), HKind::DualH1);
}

ModelSpec make_heat(std::shared_ptr<const GalerkinSpace> space, DiffusionSpec diffusion) {
    ModelSpec m;
    m.model_id = "heat";
    m.space = std::move(space);
    m.diffusion = std::move(diffusion);
    require_shared_space(m, "make_heat");
    m.assumptions = AssumptionParams{2.0, 0.0, 2.0, 0.0, 1.0};
    m.assumptions.validate();
    const auto sp = m.space;
    m.drift_load = [sp](double, const Vec& v) { return scaled(sp->stiff_apply(v), -1.0); };
    m.drift_jacobian = [sp](double, const Vec&) {
        DriftJacobian j;
        j.local = sp->stiffness_matrix();
        j.local.scale(-1.0);
        return j;
    };
    m.params["n_dof"] = static_cast<double>(m.space->dim());
    return m;
}

ModelSpec make_plaplace(std::shared_ptr<const GalerkinSpace> space, double p, double p_tilde, double c,
                        DiffusionSpec diffusion) {
    if (p < 2.0) throw std::invalid_argument("make_plaplace: requires 2 <= p");
    if (p_tilde < 1.0 || p_tilde > p) throw std::invalid_argument("make_plaplace: requires 1 <= p_tilde <= p");
    if (c < 0.0) throw std::invalid_argument("make_plaplace: damping constant must be nonnegative");
    ModelSpec m;
    m.model_id = "plaplace";
    m.space = std::move(space);
    if (m.space->v_norm_kind().kind != VNormKind::Kind::W1p || m.space->v_norm_kind().param != p)
        throw std::invalid_argument("make_plaplace: space must carry the W^{1,p} norm for the requested p");
    m.diffusion = std::move(diffusion);
    require_shared_space(m, "make_plaplace");
    // Monotonicity constant from the scalar inequality
    // (|a|^{p-2}a - |b|^{p-2}b)(a-b) >= 2^{2-p} |a-b|^p.
    m.assumptions = AssumptionParams{p, 0.0, std::pow(2.0, 2.0 - p), 0.0, 1.0};
    m.assumptions.validate();
    const auto sp = m.space;
    m.drift_load = [sp, p, p_tilde, c](double, const Vec& v) {
        return sp->load(v, [p, p_tilde, c](double, double u, double ux, double& a, double& b) {
            a = -c * std::pow(std::abs(u), p_tilde - 2.0) * u;
            b = -std::pow(std::abs(ux), p - 2.0) * ux;
        });
    };
    m.drift_jacobian = [sp, p, p_tilde, c](double, const Vec& v) {
        DriftJacobian j;
        j.local = sp->load_jacobian(
            v, [p, p_tilde, c](double, double u, double ux, double& a_u, double& a_ux, double& b_u, double& b_ux) {
                a_u = -c * (p_tilde - 1.0) * std::pow(std::abs(u), p_tilde - 2.0);
                a_ux = 0.0;
                b_u = 0.0;
                b_ux = -(p - 1.0) * std::pow(std::abs(ux), p - 2.0);
            });
        return j;
    };
    m.params["n_dof"] = static_cast<double>(m.space->dim());
    m.params["p"] = p;
    m.params["p_tilde"] = p_tilde;
    m.params["c"] = c;
    return m;
}

BurgersParams default_burgers_reaction(double c1, double c2) {
    BurgersParams p;
    p.f = [](double x) { return x; };
    p.f_prime = [](double) { return 1.0; };
    p.g = [c1, c2](double x) { return -x * x * x + c1 * x * x + c2 * x; };
    p.g_prime = [c1, c2](double x) { return -3.0 * x * x + 2.0 * c1 * x + c2; };
    p.c1 = c1;
    p.c2 = c2;
    return p;
}

ModelSpec make_burgers(std::shared_ptr<const GalerkinSpace> space, BurgersParams params, DiffusionSpec diffusion) {
    if (!(params.r == 3.0 && params.s == 2.0))
        throw std::invalid_argument(
            "make_burgers: only the d=1, r=3, s=2 regime is admissible for the 1-d discretization");
    ModelSpec m;
    m.model_id = "burgers";
    m.space = std::move(space);
    if (m.space->v_norm_kind().kind != VNormKind::Kind::W1p || m.space->v_norm_kind().param != 2.0)
        throw std::invalid_argument("make_burgers: space must carry the W^{1,2} norm");
    m.diffusion = std::move(diffusion);
    require_shared_space(m, "make_burgers");
    // beta = 4: the cubic reaction gives |A(v)|_{V*}^2 <= C(1+|v|_V^2)(1+|v|_H^4)
    // through the 1-d interpolation |v|_{L^6}^6 <= C |v|_V^2 |v|_H^4.
    m.assumptions = AssumptionParams{2.0, 4.0, 1.0, 0.0, 1.0};
    m.assumptions.validate();
    // The (A2) weight absorbs the convection and reaction remainders; the
    // multiplier is fitted by the auditor and frozen.
    m.rho_formula = "c*(1+|v|_V^2)*(1+|v|_H^2)";
    m.rho_coefficient_fitted = true;
    const auto sp = m.space;
    m.rho = [sp](const Vec& v) {
        const double nv = sp->v_norm(v);
        const double nh = sp->h_norm(v);
        return (1.0 + nv * nv) * (1.0 + nh * nh);
    };
    auto f = params.f;
    auto fp = params.f_prime;
    auto g = params.g;
    auto gp = params.g_prime;
    m.drift_load = [sp, f, g](double, const Vec& v) {
        Vec out = sp->load(v, [&f, &g](double, double u, double ux, double& a, double& b) {
            const double fu = f(u);
            a = 0.5 * fu * ux + g(u);
            b = -0.5 * fu * u;
        });
        axpy(-1.0, sp->stiff_apply(v), out);
        return out;
    };
    m.drift_jacobian = [sp, f, fp, g, gp](double, const Vec& v) {
        DriftJacobian j;
        j.local = sp->load_jacobian(v, [&f, &fp, &g, &gp](double, double u, double ux, double& a_u, double& a_ux,
                                                          double& b_u, double& b_ux) {
            const double fu = f(u);
            const double fpu = fp(u);
            a_u = 0.5 * fpu * ux + gp(u);
            a_ux = 0.5 * fu;
            b_u = -0.5 * (fpu * u + fu);
            b_ux = 0.0;
        });
        j.local.add_scaled(-1.0, sp->stiffness_matrix());
        return j;
    };
    m.params["n_dof"] = static_cast<double>(m.space->dim());
    m.params["r"] = params.r;
    m.params["s"] = params.s;
    m.params["c1"] = params.c1;
    m.params["c2"] = params.c2;
    return m;
}

PMEParams default_pme_params(double r) {
    PMEParams p;
    p.r = r;
    p.f_time = [](double t) { return 1.0 + 0.5 * t; };
    p.g_time = [](double t) { return std::sin(t); };
    p.f_min = 1.0;
    p.g_max = 1.0;
    return p;
}

ModelSpec make_pme(std::shared_ptr<const GalerkinSpace> space, PMEParams params, DiffusionSpec diffusion) {
    if (!(params.r > 1.0)) throw std::invalid_argument("make_pme: requires r > 1");
    if (!(params.f_min > 0.0)) throw std::invalid_argument("make_pme: f must be strictly positive");
    ModelSpec m;
    m.model_id = "pme";
    m.space = std::move(space);
    if (m.space->v_norm_kind().kind != VNormKind::Kind::Lr1 || m.space->h_kind() != HKind::DualH1)
        throw std::invalid_argument("make_pme: space must be the L^{r+1} / dual-H1 triple");
    m.diffusion = std::move(diffusion);
    require_shared_space(m, "make_pme");
    const double r = params.r;
    // eta from (|a|^{r-1}a - |b|^{r-1}b)(a-b) >= 2^{1-r}|a-b|^{r+1} with the
    // time factor bounded below by f_min; K = 2 sup |g|.
    m.assumptions =
        AssumptionParams{r + 1.0, 0.0, params.f_min * std::pow(2.0, 2.0 - r), 2.0 * params.g_max, 1.0};
    m.assumptions.validate();
    const auto sp = m.space;
    auto ft = params.f_time;
    auto gt = params.g_time;
    m.drift_load = [sp, r, ft, gt](double t, const Vec& v) {
        const double fval = ft(t);
        Vec out = sp->load(v, [r, fval](double, double u, double, double& a, double& b) {
            a = -fval * std::pow(std::abs(u), r - 1.0) * u;
            b = 0.0;
        });
        axpy(gt(t), sp->embed_h(v), out);
        return out;
    };
    m.drift_jacobian = [sp, r, ft, gt](double t, const Vec& v) {
        const double fval = ft(t);
        DriftJacobian j;
        j.local = sp->load_jacobian(
            v, [r, fval](double, double u, double, double& a_u, double& a_ux, double& b_u, double& b_ux) {
                a_u = -fval * r * std::pow(std::abs(u), r - 1.0);
                a_ux = b_u = b_ux = 0.0;
            });
        j.riesz_coeff = gt(t);
        return j;
    };
    m.params["n_dof"] = static_cast<double>(m.space->dim());
    m.params["r"] = r;
    return m;
}

ModelSpec make_scalar_additive(double b) {
    if (b == 0.0) throw std::invalid_argument("make_scalar_additive: b must be nonzero");
    ModelSpec m;
    m.model_id = "scalar_additive";
    m.space = GalerkinSpace::euclidean(1);
    m.diffusion = DiffusionSpec::additive(m.space, Vec{b});
    m.assumptions = AssumptionParams{2.0, 0.0, 1.0, 0.0, 1.0};
    m.params["b"] = b;
    return m;
}

ModelSpec make_diag_additive(Vec sigmas) {
    for (double s : sigmas)
        if (s == 0.0) throw std::invalid_argument("make_diag_additive: amplitudes must be nonzero");
    ModelSpec m;
    m.model_id = "diag_additive";
    m.space = GalerkinSpace::euclidean(sigmas.size());
    m.params["m"] = static_cast<double>(sigmas.size());
    m.diffusion = DiffusionSpec::additive(m.space, std::move(sigmas));
    m.assumptions = AssumptionParams{2.0, 0.0, 1.0, 0.0, 1.0};
    return m;
}

ModelSpec build_model(const ModelBuildConfig& cfg) {
    if (cfg.id == "heat") {
        auto space = heat_space(cfg.n_dof);
        return make_heat(space, noise_from_config(space, cfg));
    }
    if (cfg.id == "plaplace") {
        auto space = plaplace_space(cfg.n_dof, cfg.p);
        return make_plaplace(space, cfg.p, cfg.p_tilde, cfg.c, noise_from_config(space, cfg));
    }
    if (cfg.id == "burgers") {
        if (cfg.r != 3.0 || cfg.s != 2.0) throw std::invalid_argument("burgers: only d=1, r=3, s=2 is admissible");
        auto space = burgers_space(cfg.n_dof);
        return make_burgers(space, default_burgers_reaction(cfg.c1, cfg.c2), noise_from_config(space, cfg));
    }
    if (cfg.id == "pme") {
        auto space = pme_space(cfg.n_dof, cfg.r);
        return make_pme(space, default_pme_params(cfg.r), noise_from_config(space, cfg));
    }
    if (cfg.id == "scalar_additive") return make_scalar_additive(cfg.b);
    if (cfg.id == "diag_additive") {
        if (cfg.sigmas.empty()) throw std::invalid_argument("diag_additive: needs sigma list");
        return make_diag_additive(cfg.sigmas);
    }
    throw std::invalid_argument("unknown model id: " + cfg.id);
}

}  // namespace sldp
